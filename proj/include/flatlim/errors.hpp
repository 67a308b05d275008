#pragma once

#include <stdexcept>
#include <string>

namespace flatlim {

// Raised when a computation is well-posed but cannot be carried out at the
// working precision (underflowing eigenvalues, inconsistent ranks, ...).
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace flatlim
