#include "backend_scalar.hpp"
#include "kernels.hpp"
#include "walk_impl.hpp"

CONEXIT_DEFINE_BACKEND(scalar, ScalarBackend)
