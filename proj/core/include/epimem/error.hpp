#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace epimem {

/// Base exception for all recoverable failures raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace epimem

#define EPIMEM_CHECK(cond, msg)                        \
  do {                                                 \
    if (!(cond)) {                                     \
      std::ostringstream epimem_check_os_;             \
      epimem_check_os_ << msg;                         \
      throw ::epimem::Error(epimem_check_os_.str());   \
    }                                                  \
  } while (false)
