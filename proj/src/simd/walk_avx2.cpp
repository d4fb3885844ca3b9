// Built with -mavx2 only; reached through dispatch.cpp after a CPU check.
#include "backend_avx2.hpp"
#include "kernels.hpp"
#include "walk_impl.hpp"

CONEXIT_DEFINE_BACKEND(avx2, Avx2Backend)
