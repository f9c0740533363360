#pragma once

#include <stdexcept>
#include <string>

namespace wristhap {

// Two frame-tagged quantities were combined whose frames do not line up.
class FrameMismatchError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NotCalibratedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InsufficientExcitationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedTrialError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PairingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration or file-format problem detected while loading inputs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wristhap
