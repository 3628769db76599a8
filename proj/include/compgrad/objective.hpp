#pragma once

// A differentiable benchmark objective: a scalar cost over a parameter
// vector, with an analytic (or forward-mode) gradient and a description of
// where its discontinuities live so tests can steer clear of them.

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace compgrad {

struct DifferentiableObjective {
  std::string name;
  int dim = 1;
  std::function<double(std::span<const double>)> eval;
  std::function<std::vector<double>(std::span<const double>)> grad;

  // Parameter-space points where a branch of the dynamics switches
  // (1-D objectives only; multi-D objectives use near_discontinuity).
  // `jump_loci` is the subset where the objective value itself jumps.
  std::vector<double> discontinuity_loci;
  std::vector<double> jump_loci;

  // True if the rollout at x passes within `tol` of a branch-switching
  // surface, making finite differences unreliable there.
  std::function<bool(std::span<const double>, double)> near_discontinuity;

  // Valid box for random probing: [lo, hi] per dimension (broadcast if
  // a single pair is given).
  std::vector<std::pair<double, double>> domain;

  // Environment constants, exposed for config round-trips.
  std::map<std::string, double> params;
};

}  // namespace compgrad
