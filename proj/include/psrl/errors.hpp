#pragma once

#include <stdexcept>
#include <string>

namespace psrl {

/// Enumeration or evaluation would exceed its configured size cap.
class InstanceTooLarge : public std::runtime_error {
 public:
  explicit InstanceTooLarge(const std::string& what) : std::runtime_error("instance too large: " + what) {}
};

/// An observation has zero probability under the model being filtered.
class ImpossibleObservation : public std::runtime_error {
 public:
  explicit ImpossibleObservation(const std::string& what)
      : std::runtime_error("impossible observation: " + what) {}
};

/// Every grid point assigns zero likelihood to the observed data.
class DataImpossible : public std::runtime_error {
 public:
  explicit DataImpossible(const std::string& what) : std::runtime_error("data impossible under grid: " + what) {}
};

/// Alpha-vector sets grew past the per-step cap.
class PlanningBudgetExceeded : public std::runtime_error {
 public:
  PlanningBudgetExceeded(const std::string& what, int completed_steps, double guaranteed_eps)
      : std::runtime_error("planning budget exceeded: " + what),
        completed_steps(completed_steps),
        guaranteed_eps(guaranteed_eps) {}

  int completed_steps;    // backward steps finished before the blowup
  double guaranteed_eps;  // error bound that holds for the finished steps
};

/// A validator instance violates the lemma's precondition.
class OutOfScope : public std::runtime_error {
 public:
  explicit OutOfScope(const std::string& what) : std::runtime_error("instance out of scope: " + what) {}
};

}  // namespace psrl
