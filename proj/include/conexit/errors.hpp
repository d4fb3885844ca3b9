#pragma once

#include <stdexcept>
#include <string>

namespace conexit {

// Raised when a series or quadrature cannot meet its error contract.
// The CLI maps this to exit status 3; argument errors (std::invalid_argument,
// std::domain_error) map to status 2.
class NonConvergence : public std::runtime_error {
public:
    explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace conexit
