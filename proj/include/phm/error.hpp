#pragma once

#include <stdexcept>
#include <string>

namespace phm {

// Raised for every contract violation and I/O failure in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phm
