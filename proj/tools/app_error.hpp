#pragma once

#include <stdexcept>
#include <string>

namespace serls::app {

/// Configuration or input-data problem; exit status 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace serls::app
