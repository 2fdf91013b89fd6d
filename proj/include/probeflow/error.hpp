#pragma once

#include <stdexcept>
#include <string>

namespace probeflow {

/// Argument outside the mathematical domain of an operation (density not in
/// [0,1], negative probe speed, inadmissible epsilon, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// State that cannot be resolved yet, e.g. the position of a model-coupled
/// probe before the simulation has produced it.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-side precondition failed (non-characteristic curve, bad bracket).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A finite-volume step left the admissible range [0,1].
class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Broken internal invariant (front-tracking event queue, ...).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace probeflow
