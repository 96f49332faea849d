#pragma once

#include <stdexcept>
#include <string>

namespace hawkesq {

// Malformed or inconsistent input (bad parameter values, unknown config keys).
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A mathematical precondition of the requested computation does not hold.
class precondition_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class instability_error : public precondition_error {
 public:
  using precondition_error::precondition_error;
};

// A mark moment E B^g that the computation needs is infinite.
class moment_unavailable_error : public precondition_error {
 public:
  using precondition_error::precondition_error;
};

// The numerics themselves went wrong (guard band left, runaway cluster, ...).
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hawkesq
