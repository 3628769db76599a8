#pragma once

// Benchmark objectives. Two smooth 1-D toys (sigmoid, quadratic), two 1-D
// contact tasks with jump discontinuities (ball over a wall, striker/ball
// momentum transfer), and two multi-step trajectory tasks whose dynamics
// have gradient kinks (spring-contact pushing, Coulomb stick-slip friction).
// All dynamics are closed-form and templated on the scalar type, so dual
// numbers differentiate the exact code path that evaluation runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "compgrad/dual.hpp"
#include "compgrad/errors.hpp"
#include "compgrad/estimators.hpp"
#include "compgrad/objective.hpp"
#include "compgrad/reduce.hpp"
#include "compgrad/rng.hpp"

namespace compgrad {

// ---------------------------------------------------------------------------
// Smooth toys
// ---------------------------------------------------------------------------

namespace detail {

template <typename S>
S stable_sigmoid(S x, double temperature) {
  if (x >= S(0.0)) {
    return S(1.0) / (S(1.0) + exp(-x / temperature));
  }
  const S e = exp(x / temperature);
  return e / (S(1.0) + e);
}

}  // namespace detail

// Sigmoid(x) = 1 / (1 + exp(-x/T)). For small T the transition region is
// narrower than any finite-difference step, so x = 0 is declared as a locus.
inline DifferentiableObjective sigmoid_env(double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("sigmoid_env: T must be > 0");
  DifferentiableObjective obj;
  obj.name = "sigmoid";
  obj.dim = 1;
  obj.params = {{"temperature", temperature}};
  obj.eval = [temperature](std::span<const double> x) {
    return detail::stable_sigmoid(x[0], temperature);
  };
  obj.grad = [temperature](std::span<const double> x) {
    // exp(-|x|/T) / (T (1 + exp(-|x|/T))^2); underflows to 0, never NaN.
    const double e = std::exp(-std::fabs(x[0]) / temperature);
    const double s = 1.0 + e;
    return std::vector<double>{e / (temperature * s * s)};
  };
  obj.domain = {{-10.0, 10.0}};
  if (temperature < 1e-2) obj.discontinuity_loci = {0.0};
  obj.near_discontinuity = [temperature](std::span<const double> x,
                                         double tol) {
    return temperature < 1e-2 && std::fabs(x[0]) < tol;
  };
  return obj;
}

// f(x) = x^2; the smoothed gradient at (theta, sigma) is exactly 2 theta.
inline DifferentiableObjective quadratic_env() {
  DifferentiableObjective obj;
  obj.name = "quadratic";
  obj.dim = 1;
  obj.eval = [](std::span<const double> x) { return x[0] * x[0]; };
  obj.grad = [](std::span<const double> x) {
    return std::vector<double>{2.0 * x[0]};
  };
  obj.domain = {{-10.0, 10.0}};
  obj.near_discontinuity = [](std::span<const double>, double) {
    return false;
  };
  return obj;
}

// ---------------------------------------------------------------------------
// Ball with wall: projectile launched at angle theta; a wall of finite
// height stands at x = wall_x; crossing below the top reflects the
// horizontal velocity elastically. Cost is minus the landing distance.
// The grazing angles (arc passes exactly through the wall top) are jump
// discontinuities; the angles where the free arc lands exactly at the wall
// are kinks.
// ---------------------------------------------------------------------------

struct BallWithWallParams {
  double speed = 10.0;
  double gravity = 9.81;
  double wall_x = 6.0;
  double wall_height = 2.5;
  double restitution = 1.0;
};

template <typename S>
S ball_with_wall_cost(S theta, const BallWithWallParams& p) {
  const S c = cos(theta);
  const S s = sin(theta);
  const S range = 2.0 * p.speed * p.speed * s * c / p.gravity;
  if (value_of(range) > p.wall_x) {
    // Arc reaches the wall plane airborne; height there decides contact.
    const S t_wall = p.wall_x / (p.speed * c);
    const S y_wall = p.speed * s * t_wall -
                     0.5 * p.gravity * t_wall * t_wall;
    if (value_of(y_wall) < p.wall_height) {
      const S vy = p.speed * s - p.gravity * t_wall;
      const S fall = (vy + sqrt(vy * vy + 2.0 * p.gravity * y_wall)) /
                     p.gravity;
      const S landing = p.wall_x - p.restitution * p.speed * c * fall;
      return -landing;
    }
  }
  return -range;
}

inline DifferentiableObjective ball_with_wall_env(
    const BallWithWallParams& p = {}) {
  DifferentiableObjective obj;
  obj.name = "ball_with_wall";
  obj.dim = 1;
  obj.params = {{"speed", p.speed},
                {"gravity", p.gravity},
                {"wall_x", p.wall_x},
                {"wall_height", p.wall_height},
                {"restitution", p.restitution}};
  // The closed form extends smoothly outside the launch window (negative
  // or backward ranges simply miss the wall), which smoothing relies on:
  // perturbed angles near the domain edges must still evaluate.
  obj.eval = [p](std::span<const double> x) {
    return ball_with_wall_cost(x[0], p);
  };
  obj.grad = [p](std::span<const double> x) {
    return std::vector<double>{ball_with_wall_cost(Dual(x[0], 1.0), p).d};
  };
  obj.domain = {{0.05, M_PI / 2.0 - 0.05}};

  // Kink angles: free range equals the wall distance.
  const double sin2 = p.gravity * p.wall_x / (p.speed * p.speed);
  if (sin2 < 1.0) {
    const double k1 = 0.5 * std::asin(sin2);
    const double k2 = M_PI / 2.0 - k1;
    obj.discontinuity_loci.push_back(k1);
    obj.discontinuity_loci.push_back(k2);
    // Grazing angles: wall-plane altitude equals the wall height, within
    // the hit-feasible band. Quadratic in tan(theta).
    const double a = p.gravity * p.wall_x * p.wall_x /
                     (2.0 * p.speed * p.speed);
    const double disc = p.wall_x * p.wall_x -
                        4.0 * a * (p.wall_height + a);
    if (disc > 0.0) {
      for (double sign : {-1.0, 1.0}) {
        const double u = (p.wall_x + sign * std::sqrt(disc)) / (2.0 * a);
        const double theta = std::atan(u);
        if (theta > k1 && theta < k2) {
          obj.discontinuity_loci.push_back(theta);
          obj.jump_loci.push_back(theta);
        }
      }
    }
  }
  std::sort(obj.discontinuity_loci.begin(), obj.discontinuity_loci.end());
  std::sort(obj.jump_loci.begin(), obj.jump_loci.end());

  const auto loci = obj.discontinuity_loci;
  obj.near_discontinuity = [loci](std::span<const double> x, double tol) {
    for (double l : loci)
      if (std::fabs(x[0] - l) < tol) return true;
    return false;
  };
  return obj;
}

// ---------------------------------------------------------------------------
// Momentum transfer: a striker travels in a straight line from the origin at
// angle theta. A free ball rests on a support at a fixed offset; if the
// striker's path passes within the sum of radii, an elastic collision
// knocks it loose and it falls ballistically for a fixed time. Cost is the
// signed angular momentum of the struck ball about the origin at that time
// (negative for hits, zero for misses), so minimizing maximizes transfer.
// Any touch starts the fall, so the hit/miss boundary is a jump.
// ---------------------------------------------------------------------------

struct MomentumTransferParams {
  double speed = 5.0;
  double target_x = 3.0;
  double target_y = 0.8;
  double radii_sum = 0.5;
  double gravity = 9.81;
  double flight_time = 0.5;
};

struct CollisionOutcome {
  double striker_vx, striker_vy;  // post-impact striker velocity
  double struck_vx, struck_vy;    // post-impact struck-ball velocity
};

template <typename S>
S momentum_transfer_cost(S theta, const MomentumTransferParams& p) {
  const S c = cos(theta);
  const S s = sin(theta);
  const S along = p.target_x * c + p.target_y * s;   // forward projection
  const S across = p.target_x * s - p.target_y * c;  // signed miss distance
  const S gap_sq = p.radii_sum * p.radii_sum - across * across;
  if (value_of(gap_sq) <= 0.0 || value_of(along) <= 0.0) return S(0.0);

  // Impact point and contact normal.
  const S reach = along - sqrt(gap_sq);
  const S nx = (p.target_x - reach * c) / p.radii_sum;
  const S ny = (p.target_y - reach * s) / p.radii_sum;
  const S vn = p.speed * (c * nx + s * ny);  // >= 0 at contact
  const S v2x = vn * nx;
  const S v2y = vn * ny;

  // Ballistic flight of the struck ball, then angular momentum about the
  // origin: L = x vy - y vx.
  const double t = p.flight_time;
  const S xf = p.target_x + v2x * t;
  const S yf = p.target_y + v2y * t - 0.5 * p.gravity * t * t;
  const S vxf = v2x;
  const S vyf = v2y - p.gravity * t;
  return xf * vyf - yf * vxf;
}

// Exposes the elastic-collision branch for physics checks.
inline std::optional<CollisionOutcome> momentum_transfer_collision(
    double theta, const MomentumTransferParams& p = {}) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double along = p.target_x * c + p.target_y * s;
  const double across = p.target_x * s - p.target_y * c;
  const double gap_sq = p.radii_sum * p.radii_sum - across * across;
  if (gap_sq <= 0.0 || along <= 0.0) return std::nullopt;
  const double reach = along - std::sqrt(gap_sq);
  const double nx = (p.target_x - reach * c) / p.radii_sum;
  const double ny = (p.target_y - reach * s) / p.radii_sum;
  const double vn = p.speed * (c * nx + s * ny);
  CollisionOutcome out;
  out.struck_vx = vn * nx;
  out.struck_vy = vn * ny;
  out.striker_vx = p.speed * c - out.struck_vx;
  out.striker_vy = p.speed * s - out.struck_vy;
  return out;
}

inline DifferentiableObjective momentum_transfer_env(
    const MomentumTransferParams& p = {}) {
  DifferentiableObjective obj;
  obj.name = "momentum_transfer";
  obj.dim = 1;
  obj.params = {{"speed", p.speed},         {"target_x", p.target_x},
                {"target_y", p.target_y},   {"radii_sum", p.radii_sum},
                {"gravity", p.gravity},     {"flight_time", p.flight_time}};
  obj.eval = [p](std::span<const double> x) {
    return momentum_transfer_cost(x[0], p);
  };
  obj.grad = [p](std::span<const double> x) {
    return std::vector<double>{momentum_transfer_cost(Dual(x[0], 1.0), p).d};
  };
  obj.domain = {{0.01, M_PI / 2.0 - 0.01}};

  // Hit window boundary: |across| = radii_sum.
  const double dist = std::hypot(p.target_x, p.target_y);
  const double aim = std::atan2(p.target_y, p.target_x);
  if (p.radii_sum < dist) {
    const double half = std::asin(p.radii_sum / dist);
    for (double theta : {aim - half, aim + half}) {
      obj.discontinuity_loci.push_back(theta);
      obj.jump_loci.push_back(theta);
    }
  }
  const auto loci = obj.discontinuity_loci;
  obj.near_discontinuity = [loci](std::span<const double> x, double tol) {
    for (double l : loci)
      if (std::fabs(x[0] - l) < tol) return true;
    return false;
  };
  return obj;
}

// ---------------------------------------------------------------------------
// Pushing: two unit boxes on a line; a penalty spring of stiffness k acts
// when box 1 overlaps box 2. The control vector (one force per step) pushes
// box 1; the cost is the terminal distance of box 2 from the goal, plus a
// small control penalty. Contact onset is a gradient kink.
// ---------------------------------------------------------------------------

struct PushingParams {
  double stiffness = 10.0;  // 10 soft, 1000 stiff
  int horizon = 20;
  double dt = 0.05;
  double box_size = 1.0;
  double initial_gap = 0.3;
  double goal = 1.8;
  double control_weight = 1e-3;
};

template <typename S>
S pushing_cost(std::span<const S> u, const PushingParams& p,
               double* min_abs_overlap = nullptr) {
  S x1(0.0), v1(0.0), x2(p.box_size + p.initial_gap), v2(0.0);
  double min_gap = std::numeric_limits<double>::infinity();
  for (int t = 0; t < p.horizon; ++t) {
    const S overlap = x1 + p.box_size - x2;
    min_gap = std::min(min_gap, std::fabs(value_of(overlap)));
    const S force = p.stiffness * max(S(0.0), overlap);
    v1 += p.dt * (u[t] - force);
    v2 += p.dt * force;
    x1 += p.dt * v1;
    x2 += p.dt * v2;
  }
  if (min_abs_overlap) *min_abs_overlap = min_gap;
  const S err = x2 - p.goal;
  S penalty(0.0);
  for (int t = 0; t < p.horizon; ++t) penalty += u[t] * u[t];
  return err * err + p.control_weight * penalty;
}

// ---------------------------------------------------------------------------
// Friction: block 2 rests on block 1; the control pushes block 1 and only
// Coulomb friction drags block 2 along. Sticking transmits exactly the
// force that keeps the blocks moving together, up to the static breakaway
// limit mu_s N; once slipping, the kinetic limit mu_k N < mu_s N acts in
// the direction of relative motion. Breakaway therefore drops the
// transmitted force abruptly, and inside the slip regime the outcome of
// block 2 is flat in the control, which is what stalls pathwise gradients.
// The stick/slip switch at |v_rel| = v_eps is the declared discontinuity.
// ---------------------------------------------------------------------------

struct FrictionParams {
  int horizon = 20;
  double dt = 0.05;
  double mass1 = 1.0;
  double mass2 = 1.0;
  double mu_static = 0.6;
  double mu_kinetic = 0.35;
  double gravity = 9.81;
  double v_eps = 1e-3;
  double goal = 2.2;
};

template <typename S>
S friction_cost(std::span<const S> u, const FrictionParams& p,
                double* min_switch_distance = nullptr) {
  S x2(0.0), v1(0.0), v2(0.0);
  const double static_limit = p.mu_static * p.mass2 * p.gravity;
  const double kinetic_limit = p.mu_kinetic * p.mass2 * p.gravity;
  double min_dist = std::numeric_limits<double>::infinity();
  for (int t = 0; t < p.horizon; ++t) {
    const S v_rel = v1 - v2;
    S friction(0.0);
    if (std::fabs(value_of(v_rel)) < p.v_eps) {
      // Stick: transmit the acceleration-matching force until it exceeds
      // the static limit, then break away at the kinetic level.
      const S required = u[t] * p.mass2 / (p.mass1 + p.mass2);
      if (std::fabs(value_of(required)) < static_limit) {
        friction = required;
      } else {
        friction = value_of(required) >= 0.0 ? S(kinetic_limit)
                                             : S(-kinetic_limit);
      }
      min_dist = std::min(
          min_dist,
          std::fabs(static_limit - std::fabs(value_of(required))));
    } else {
      friction = value_of(v_rel) > 0.0 ? S(kinetic_limit) : S(-kinetic_limit);
    }
    min_dist = std::min(
        min_dist, std::fabs(std::fabs(value_of(v_rel)) - p.v_eps));
    v1 += p.dt * (u[t] - friction) / p.mass1;
    v2 += p.dt * friction / p.mass2;
    x2 += p.dt * v2;
  }
  if (min_switch_distance) *min_switch_distance = min_dist;
  const S err = x2 - p.goal;
  return err * err;
}

namespace detail {

template <typename CostFn>
DifferentiableObjective make_trajectory_objective(std::string name, int dim,
                                                  CostFn cost) {
  DifferentiableObjective obj;
  obj.name = std::move(name);
  obj.dim = dim;
  obj.eval = [cost](std::span<const double> u) { return cost(u, nullptr); };
  obj.grad = [cost, dim](std::span<const double> u) {
    std::vector<double> g(dim);
    std::vector<Dual> du(u.begin(), u.end());
    for (int d = 0; d < dim; ++d) {
      du[d].d = 1.0;
      g[d] = cost(std::span<const Dual>(du), nullptr).d;
      du[d].d = 0.0;
    }
    return g;
  };
  return obj;
}

}  // namespace detail

inline DifferentiableObjective pushing_env(double stiffness, int horizon) {
  if (!(stiffness > 0.0)) throw ConfigError("pushing_env: k must be > 0");
  if (horizon < 1) throw ConfigError("pushing_env: horizon must be >= 1");
  PushingParams p;
  p.stiffness = stiffness;
  p.horizon = horizon;
  auto obj = detail::make_trajectory_objective(
      "pushing", horizon, [p](auto u, double* aux) {
        return pushing_cost(u, p, aux);
      });
  obj.params = {{"stiffness", p.stiffness},
                {"horizon", static_cast<double>(p.horizon)},
                {"dt", p.dt},
                {"box_size", p.box_size},
                {"initial_gap", p.initial_gap},
                {"goal", p.goal},
                {"control_weight", p.control_weight}};
  obj.domain.assign(horizon, {-10.0, 10.0});
  obj.near_discontinuity = [p](std::span<const double> u, double tol) {
    double min_gap = 0.0;
    pushing_cost(u, p, &min_gap);
    return min_gap < tol;
  };
  return obj;
}

inline DifferentiableObjective friction_env_with(const FrictionParams& p) {
  auto obj = detail::make_trajectory_objective(
      "friction", p.horizon, [p](auto u, double* aux) {
        return friction_cost(u, p, aux);
      });
  obj.params = {{"horizon", static_cast<double>(p.horizon)},
                {"dt", p.dt},
                {"mass1", p.mass1},
                {"mass2", p.mass2},
                {"mu_static", p.mu_static},
                {"mu_kinetic", p.mu_kinetic},
                {"gravity", p.gravity},
                {"v_eps", p.v_eps},
                {"goal", p.goal}};
  obj.domain.assign(p.horizon, {-20.0, 20.0});
  obj.near_discontinuity = [p](std::span<const double> u, double tol) {
    double min_dist = 0.0;
    friction_cost(u, p, &min_dist);
    return min_dist < tol;
  };
  return obj;
}

inline DifferentiableObjective friction_env(int horizon) {
  if (horizon < 1) throw ConfigError("friction_env: horizon must be >= 1");
  FrictionParams p;
  p.horizon = horizon;
  return friction_env_with(p);
}

// ---------------------------------------------------------------------------
// Smoothed-gradient oracle: a very-large-sample 0th-order estimate of the
// smoothed objective's gradient, with per-dimension standard errors. Serves
// as the landscape ground truth.
// ---------------------------------------------------------------------------

struct SmoothedOracle {
  DifferentiableObjective objective;
  double sigma = 0.1;
  long long n_oracle = 10000000;
};

struct OracleGradient {
  std::vector<double> grad;
  std::vector<double> std_error;
};

inline OracleGradient oracle_gradient(const SmoothedOracle& oracle,
                                      std::span<const double> theta,
                                      std::uint64_t seed) {
  const int dim = oracle.objective.dim;
  if (static_cast<int>(theta.size()) != dim)
    throw ConfigError("oracle_gradient: theta dimension mismatch");
  const double baseline = oracle.objective.eval(theta);

  // Block-structured accumulation keeps the reduction order fixed.
  const long long block = 65536;
  std::vector<std::vector<double>> block_sums(dim), block_sumsq(dim);
  std::vector<double> acc(dim), acc_sq(dim);
  std::vector<double> zeta(dim), eps(dim);
  long long in_block = 0;
  for (long long i = 0; i < oracle.n_oracle; ++i) {
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
    for (int d = 0; d < dim; ++d) {
      eps[d] = rng.normal();
      zeta[d] = theta[d] + oracle.sigma * eps[d];
    }
    const double w = (oracle.objective.eval(zeta) - baseline) / oracle.sigma;
    for (int d = 0; d < dim; ++d) {
      const double g = eps[d] * w;
      acc[d] += g;
      acc_sq[d] += g * g;
    }
    if (++in_block == block || i + 1 == oracle.n_oracle) {
      for (int d = 0; d < dim; ++d) {
        block_sums[d].push_back(acc[d]);
        block_sumsq[d].push_back(acc_sq[d]);
        acc[d] = 0.0;
        acc_sq[d] = 0.0;
      }
      in_block = 0;
    }
  }

  OracleGradient out;
  out.grad.resize(dim);
  out.std_error.resize(dim);
  const double n = static_cast<double>(oracle.n_oracle);
  for (int d = 0; d < dim; ++d) {
    const double s1 = pairwise_sum(block_sums[d]);
    const double s2 = pairwise_sum(block_sumsq[d]);
    out.grad[d] = s1 / n;
    const double var = (s2 - s1 * s1 / n) / (n - 1.0);
    out.std_error[d] = std::sqrt(std::max(0.0, var) / n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite-difference verification of an objective's gradient at random domain
// points, skipping the declared discontinuity neighborhoods.
// ---------------------------------------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  int checked = 0;
  int excluded = 0;
  std::vector<double> worst_point;
};

inline GradCheckReport gradcheck(const DifferentiableObjective& obj,
                                 int n_points, std::uint64_t seed,
                                 double exclusion_tol = 1e-3) {
  GradCheckReport report;
  const int dim = obj.dim;
  std::vector<double> x(dim), shifted(dim);
  Rng rng(derive_stream(seed, 0));
  int attempts = 0;
  while (report.checked < n_points && attempts < 100 * n_points) {
    ++attempts;
    for (int d = 0; d < dim; ++d) {
      const auto& box = obj.domain.size() == 1 ? obj.domain[0]
                                               : obj.domain[d];
      x[d] = box.first + (box.second - box.first) * rng.uniform();
    }
    if (obj.near_discontinuity && obj.near_discontinuity(x, exclusion_tol)) {
      ++report.excluded;
      continue;
    }
    const auto grad = obj.grad(x);
    // Components below the central-difference noise floor are compared
    // against that floor instead of their own magnitude.
    const double floor = 1e-4 * std::max(1.0, std::fabs(obj.eval(x)));
    shifted = x;
    for (int d = 0; d < dim; ++d) {
      const double h = 1e-6 * std::max(1.0, std::fabs(x[d]));
      shifted[d] = x[d] + h;
      const double fp = obj.eval(shifted);
      shifted[d] = x[d] - h;
      const double fm = obj.eval(shifted);
      shifted[d] = x[d];
      const double fd = (fp - fm) / (2.0 * h);
      const double scale = std::max({std::fabs(fd), std::fabs(grad[d]), floor});
      const double rel = std::fabs(grad[d] - fd) / scale;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_point = x;
      }
    }
    ++report.checked;
  }
  return report;
}

// Registry used by the harness and CLI. Overrides replace the named
// environment constants (the keys each env publishes in `params`).
inline DifferentiableObjective make_env(
    const std::string& name,
    const std::map<std::string, double>& overrides = {}) {
  const auto get = [&overrides](const std::string& key, double fallback) {
    const auto it = overrides.find(key);
    return it == overrides.end() ? fallback : it->second;
  };

  if (name == "quadratic") return quadratic_env();
  if (name == "sigmoid" || name.rfind("sigmoid:", 0) == 0) {
    double t = name.rfind("sigmoid:", 0) == 0 ? std::stod(name.substr(8)) : 1.0;
    return sigmoid_env(get("temperature", t));
  }
  if (name == "ball_with_wall") {
    BallWithWallParams p;
    p.speed = get("speed", p.speed);
    p.gravity = get("gravity", p.gravity);
    p.wall_x = get("wall_x", p.wall_x);
    p.wall_height = get("wall_height", p.wall_height);
    p.restitution = get("restitution", p.restitution);
    return ball_with_wall_env(p);
  }
  if (name == "momentum_transfer") {
    MomentumTransferParams p;
    p.speed = get("speed", p.speed);
    p.target_x = get("target_x", p.target_x);
    p.target_y = get("target_y", p.target_y);
    p.radii_sum = get("radii_sum", p.radii_sum);
    p.gravity = get("gravity", p.gravity);
    p.flight_time = get("flight_time", p.flight_time);
    return momentum_transfer_env(p);
  }
  if (name == "pushing_soft" || name == "pushing_stiff") {
    const double k = name == "pushing_soft" ? 10.0 : 1000.0;
    return pushing_env(get("stiffness", k),
                       static_cast<int>(get("horizon", 20)));
  }
  if (name == "friction") {
    FrictionParams p;
    p.horizon = static_cast<int>(get("horizon", p.horizon));
    p.dt = get("dt", p.dt);
    p.mass1 = get("mass1", p.mass1);
    p.mass2 = get("mass2", p.mass2);
    p.mu_static = get("mu_static", p.mu_static);
    p.mu_kinetic = get("mu_kinetic", p.mu_kinetic);
    p.gravity = get("gravity", p.gravity);
    p.v_eps = get("v_eps", p.v_eps);
    p.goal = get("goal", p.goal);
    return friction_env_with(p);
  }
  throw UnknownTaskError("unknown task: " + name);
}

// Plain-text environment constants: `key = value` per line, `#` comments.
inline std::map<std::string, double> load_env_params(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open env config: " + path);
  std::map<std::string, double> params;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r\n");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r\n");
      return s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) continue;
    params[key] = std::stod(line.substr(eq + 1));
  }
  return params;
}

}  // namespace compgrad
