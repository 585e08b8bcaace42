#pragma once

#include <stdexcept>
#include <string>

namespace baoc {

/// Selects between the OpenMP kernel and the serial reference it is tested against.
enum class Exec { serial, parallel };

/// Malformed or inconsistent user input (bad flags, bad files, contract violations).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidConfiguration : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace baoc
