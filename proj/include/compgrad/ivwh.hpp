#pragma once

// Stepwise inverse-variance fusion for multi-step trajectory optimization.
//
// One shared rollout of N actors produces both gradient channels with respect
// to the per-step pre-squash action means: the pathwise channel g1 by
// reverse-mode accumulation through the cached step Jacobians (including the
// policy's state feedback), and the score-function channel g0 from the
// advantage-weighted Gaussian score. Variances are taken across actors at
// fixed (t, a), the fusion weight is inverse-variance per (t, a), and the
// fused tensor is pushed to policy weights with one vector-Jacobian product.
// No simulator call beyond the N x H rollout steps is ever made.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "compgrad/errors.hpp"
#include "compgrad/reduce.hpp"
#include "compgrad/rng.hpp"

namespace compgrad {

// One environment transition with its local derivatives.
struct TrajectoryStep {
  std::vector<double> next_state;     // S
  double reward = 0.0;
  std::vector<double> dnext_dstate;   // S x S row-major
  std::vector<double> dnext_daction;  // S x A
  std::vector<double> dreward_dstate; // S
  std::vector<double> dreward_daction;// A
};

struct TrajectoryEnv {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  int horizon = 0;
  std::function<std::vector<double>(int actor, std::uint64_t seed)> reset;
  std::function<TrajectoryStep(std::span<const double> state,
                               std::span<const double> action)> step;
};

// Linear-Gaussian policy: mean = W s + b, squashed through tanh. The
// log-scales are bounded fields of the policy but are not trained; the
// trainable parameters are W and b, so the distribution parameter at each
// (t, n, a) is the pre-squash mean.
struct GaussianPolicy {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<double> weights;    // A x S row-major
  std::vector<double> bias;       // A
  std::vector<double> log_sigma;  // A
  double log_sigma_min = -4.0;
  double log_sigma_max = 1.0;

  static GaussianPolicy zeros(int state_dim, int action_dim,
                              double log_sigma_init) {
    GaussianPolicy p;
    p.state_dim = state_dim;
    p.action_dim = action_dim;
    p.weights.assign(static_cast<std::size_t>(action_dim) * state_dim, 0.0);
    p.bias.assign(action_dim, 0.0);
    p.log_sigma.assign(action_dim, log_sigma_init);
    return p;
  }

  double sigma(int a) const {
    const double ls = std::clamp(log_sigma[a], log_sigma_min, log_sigma_max);
    return std::exp(ls);
  }

  void mean_action(std::span<const double> state,
                   std::span<double> out) const {
    for (int a = 0; a < action_dim; ++a) {
      double m = bias[a];
      const double* row = weights.data() +
                          static_cast<std::size_t>(a) * state_dim;
      for (int s = 0; s < state_dim; ++s) m += row[s] * state[s];
      out[a] = m;
    }
  }

  int param_count() const { return action_dim * state_dim + action_dim; }
};

struct RolloutData {
  int horizon = 0, n_actors = 0, state_dim = 0, action_dim = 0;
  std::vector<double> states;   // H x N x S, state when acting at t
  std::vector<double> mu;       // H x N x A
  std::vector<double> noises;   // H x N x A
  std::vector<double> rewards;  // H x N
  std::vector<std::uint8_t> mask;  // H x N episode starts
  std::vector<double> j_ss, j_sa, j_rs, j_ra;  // cached step Jacobians
  long long steps_taken = 0;

  std::size_t sa(int t, int n) const {
    return (static_cast<std::size_t>(t) * n_actors + n) * state_dim;
  }
  std::size_t aa(int t, int n) const {
    return (static_cast<std::size_t>(t) * n_actors + n) * action_dim;
  }
  std::size_t tn(int t, int n) const {
    return static_cast<std::size_t>(t) * n_actors + n;
  }

  // Total reward per actor.
  std::vector<double> returns() const {
    std::vector<double> out(n_actors, 0.0);
    for (int t = 0; t < horizon; ++t)
      for (int n = 0; n < n_actors; ++n) out[n] += rewards[tn(t, n)];
    return out;
  }
};

struct StepGradTensor {
  int horizon = 0, n_actors = 0, action_dim = 0;
  std::vector<double> g0;          // H x N x A
  std::vector<double> g1;          // H x N x A
  std::vector<double> advantages;  // H x N
  std::vector<std::uint8_t> mask;  // H x N

  std::size_t at(int t, int n, int a) const {
    return (static_cast<std::size_t>(t) * n_actors + n) * action_dim + a;
  }
};

enum class FusionMode { First, Zeroth, IVWH };

struct TrainConfig {
  int n_actors = 64;
  int iterations = 100;
  double learning_rate = 0.02;
  FusionMode mode = FusionMode::IVWH;
  std::uint64_t seed = 0;
  int episode_length = 0;       // 0 means one episode spanning the horizon
  bool advantage_norm = true;   // 0th-order loss only, per the update rule
  // Scale both losses by 1/(H N). The as-written alternative normalizes the
  // pathwise loss by the number of episodes, which puts the two channels on
  // scales differing by a factor of the episode length and skews the
  // variance comparison; the matched form passes the cross-channel
  // mean-agreement check, so it is the default.
  bool matched_normalization = true;
  double grad_clip = 1e12;
  bool deterministic = false;   // test mode: inject zero noise
};

inline RolloutData rollout(const TrajectoryEnv& env,
                           const GaussianPolicy& policy, int n_actors,
                           std::uint64_t seed, const TrainConfig& cfg = {}) {
  if (n_actors < 2) throw ConfigError("rollout: need n_actors >= 2");
  const int H = env.horizon, S = env.state_dim, A = env.action_dim;
  const int ep_len = cfg.episode_length > 0 ? cfg.episode_length : H;

  RolloutData data;
  data.horizon = H;
  data.n_actors = n_actors;
  data.state_dim = S;
  data.action_dim = A;
  data.states.resize(static_cast<std::size_t>(H) * n_actors * S);
  data.mu.resize(static_cast<std::size_t>(H) * n_actors * A);
  data.noises.resize(static_cast<std::size_t>(H) * n_actors * A);
  data.rewards.resize(static_cast<std::size_t>(H) * n_actors);
  data.mask.assign(static_cast<std::size_t>(H) * n_actors, 0);
  data.j_ss.resize(static_cast<std::size_t>(H) * n_actors * S * S);
  data.j_sa.resize(static_cast<std::size_t>(H) * n_actors * S * A);
  data.j_rs.resize(static_cast<std::size_t>(H) * n_actors * S);
  data.j_ra.resize(static_cast<std::size_t>(H) * n_actors * A);

  // Disjoint stream indices: top bits tag the consumer so action noise and
  // reset draws never alias.
  const auto noise_key = [](std::uint64_t n, std::uint64_t t) {
    return (1ULL << 56) | (n << 24) | t;
  };
  const auto reset_key = [](std::uint64_t n, std::uint64_t t) {
    return (2ULL << 56) | (n << 24) | t;
  };

  std::vector<double> state(S), action(A), mu(A);
  for (int n = 0; n < n_actors; ++n) {
    for (int t = 0; t < H; ++t) {
      if (t % ep_len == 0) {
        state = env.reset(n, derive_stream(seed, reset_key(n, t)));
        data.mask[data.tn(t, n)] = 1;
      }
      std::copy(state.begin(), state.end(),
                data.states.begin() + data.sa(t, n));
      policy.mean_action(state, mu);
      Rng rng(derive_stream(seed, noise_key(n, t)));
      for (int a = 0; a < A; ++a) {
        const double eps = cfg.deterministic ? 0.0 : rng.normal();
        data.noises[data.aa(t, n) + a] = eps;
        data.mu[data.aa(t, n) + a] = mu[a];
        action[a] = std::tanh(mu[a] + policy.sigma(a) * eps);
      }
      TrajectoryStep step = env.step(state, action);
      ++data.steps_taken;
      for (double v : step.next_state)
        if (!std::isfinite(v))
          throw NumericError("rollout: non-finite state at t=" +
                             std::to_string(t) + " actor=" +
                             std::to_string(n));
      data.rewards[data.tn(t, n)] = step.reward;
      std::copy(step.dnext_dstate.begin(), step.dnext_dstate.end(),
                data.j_ss.begin() + data.tn(t, n) * S * S);
      std::copy(step.dnext_daction.begin(), step.dnext_daction.end(),
                data.j_sa.begin() + data.tn(t, n) * S * A);
      std::copy(step.dreward_dstate.begin(), step.dreward_dstate.end(),
                data.j_rs.begin() + data.tn(t, n) * S);
      std::copy(step.dreward_daction.begin(), step.dreward_daction.end(),
                data.j_ra.begin() + data.tn(t, n) * A);
      state = std::move(step.next_state);
    }
  }
  return data;
}

// Monte-Carlo reward-to-go advantages with a per-step mean baseline across
// actors (stands in for the usual learned critic).
inline std::vector<double> reward_to_go_advantages(const RolloutData& data) {
  const int H = data.horizon, N = data.n_actors;
  std::vector<double> rtg(static_cast<std::size_t>(H) * N, 0.0);
  for (int n = 0; n < N; ++n) {
    double acc = 0.0;
    for (int t = H - 1; t >= 0; --t) {
      acc += data.rewards[data.tn(t, n)];
      rtg[data.tn(t, n)] = acc;
      if (data.mask[data.tn(t, n)]) acc = 0.0;  // episode boundary
    }
  }
  std::vector<double> col(N);
  for (int t = 0; t < H; ++t) {
    for (int n = 0; n < N; ++n) col[n] = rtg[data.tn(t, n)];
    const double baseline = mean(col);
    for (int n = 0; n < N; ++n) rtg[data.tn(t, n)] -= baseline;
  }
  return rtg;
}

inline StepGradTensor per_step_gradients(const TrajectoryEnv& env,
                                         const GaussianPolicy& policy,
                                         const RolloutData& data,
                                         const TrainConfig& cfg = {}) {
  const int H = data.horizon, N = data.n_actors, S = data.state_dim,
            A = data.action_dim;
  StepGradTensor out;
  out.horizon = H;
  out.n_actors = N;
  out.action_dim = A;
  out.mask = data.mask;
  out.g0.resize(static_cast<std::size_t>(H) * N * A);
  out.g1.resize(static_cast<std::size_t>(H) * N * A);

  out.advantages = reward_to_go_advantages(data);
  if (cfg.advantage_norm) {
    const double sd = sample_stddev(out.advantages);
    if (sd > 0.0)
      for (double& v : out.advantages) v /= sd;
  }

  long long episodes = 0;
  for (auto m : data.mask) episodes += m;
  const double norm0 = 1.0 / (static_cast<double>(H) * N);
  const double norm1 = cfg.matched_normalization
                           ? norm0
                           : 1.0 / static_cast<double>(episodes);

  // Score-function channel: d(loss_lr)/d(mu_{t,n,a}) with
  // loss_lr = norm0 * sum adv * neglogp.
  for (int t = 0; t < H; ++t) {
    for (int n = 0; n < N; ++n) {
      const double adv = out.advantages[data.tn(t, n)];
      for (int a = 0; a < A; ++a) {
        const double eps = data.noises[data.aa(t, n) + a];
        const double score_mu = -eps / policy.sigma(a);  // d neglogp / d mu
        const double g = norm0 * adv * score_mu;
        if (!std::isfinite(g))
          throw NumericError("per_step_gradients: non-finite g0 at t=" +
                             std::to_string(t) + " n=" + std::to_string(n));
        out.g0[out.at(t, n, a)] = g;
      }
    }
  }

  // Pathwise channel: reverse sweep of loss_rp = -norm1 * sum of rewards,
  // episode by episode. The state adjoint carries the policy feedback
  // W^T g_u so that mu adjoints are total derivatives.
  std::vector<double> lambda(S), lambda_next(S), g_u(A);
  for (int n = 0; n < N; ++n) {
    std::fill(lambda.begin(), lambda.end(), 0.0);
    for (int t = H - 1; t >= 0; --t) {
      const std::size_t base = data.tn(t, n);
      const double* jss = data.j_ss.data() + base * S * S;
      const double* jsa = data.j_sa.data() + base * S * A;
      const double* jrs = data.j_rs.data() + base * S;
      const double* jra = data.j_ra.data() + base * A;

      for (int a = 0; a < A; ++a) {
        double acc = -norm1 * jra[a];
        for (int s = 0; s < S; ++s) acc += jsa[s * A + a] * lambda[s];
        const double u = data.mu[data.aa(t, n) + a] +
                         policy.sigma(a) * data.noises[data.aa(t, n) + a];
        const double th = std::tanh(u);
        g_u[a] = acc * (1.0 - th * th);
        if (!std::isfinite(g_u[a]))
          throw NumericError("per_step_gradients: non-finite g1 at t=" +
                             std::to_string(t) + " n=" + std::to_string(n));
        out.g1[out.at(t, n, a)] = g_u[a];
      }

      for (int s = 0; s < S; ++s) {
        double acc = -norm1 * jrs[s];
        for (int s2 = 0; s2 < S; ++s2) acc += jss[s2 * S + s] * lambda[s2];
        // Policy feedback: mu_t depends on s_t.
        for (int a = 0; a < A; ++a)
          acc += policy.weights[static_cast<std::size_t>(a) * S + s] * g_u[a];
        lambda_next[s] = acc;
      }
      lambda.swap(lambda_next);
      if (data.mask[base]) std::fill(lambda.begin(), lambda.end(), 0.0);
    }
  }
  return out;
}

struct FusionResult {
  std::vector<double> fused;  // H x N x A
  std::vector<double> alpha;  // H x A
};

inline FusionResult ivwh_fuse(const StepGradTensor& tensor) {
  const int H = tensor.horizon, N = tensor.n_actors, A = tensor.action_dim;
  if (N < 2) throw ConfigError("ivwh_fuse: need n_actors >= 2");
  FusionResult res;
  res.fused.resize(static_cast<std::size_t>(H) * N * A);
  res.alpha.resize(static_cast<std::size_t>(H) * A);
  std::vector<double> col0(N), col1(N);
  for (int t = 0; t < H; ++t) {
    for (int a = 0; a < A; ++a) {
      for (int n = 0; n < N; ++n) {
        col0[n] = tensor.g0[tensor.at(t, n, a)];
        col1[n] = tensor.g1[tensor.at(t, n, a)];
      }
      const double v0 = sample_variance(col0);
      const double v1 = sample_variance(col1);
      const double s = v0 + v1;
      const double alpha = s == 0.0 ? 1.0 : v0 / s;
      res.alpha[static_cast<std::size_t>(t) * A + a] = alpha;
      for (int n = 0; n < N; ++n) {
        const std::size_t i = tensor.at(t, n, a);
        res.fused[i] = alpha == 1.0
                           ? tensor.g1[i]
                           : (alpha == 0.0
                                  ? tensor.g0[i]
                                  : alpha * tensor.g1[i] +
                                        (1.0 - alpha) * tensor.g0[i]);
      }
    }
  }
  return res;
}

// Vector-Jacobian product through the policy at fixed states: the fused
// per-(t,n,a) gradients land on W and b. Gradient layout: [W row-major, b].
inline std::vector<double> push_to_parameters(std::span<const double> fused,
                                              const GaussianPolicy& policy,
                                              const RolloutData& data,
                                              double grad_clip = 1e12) {
  const int H = data.horizon, N = data.n_actors, S = data.state_dim,
            A = data.action_dim;
  std::vector<double> grad(policy.param_count(), 0.0);
  double* gw = grad.data();
  double* gb = grad.data() + static_cast<std::size_t>(A) * S;
  for (int t = 0; t < H; ++t) {
    for (int n = 0; n < N; ++n) {
      const double* state = data.states.data() + data.sa(t, n);
      const double* f = fused.data() + data.aa(t, n);
      for (int a = 0; a < A; ++a) {
        for (int s = 0; s < S; ++s)
          gw[static_cast<std::size_t>(a) * S + s] += f[a] * state[s];
        gb[a] += f[a];
      }
    }
  }
  double norm_sq = 0.0;
  for (double v : grad) norm_sq += v * v;
  const double norm = std::sqrt(norm_sq);
  if (norm > grad_clip && norm > 0.0) {
    const double scale = grad_clip / norm;
    for (double& v : grad) v *= scale;
  }
  return grad;
}

struct TrainRecord {
  int iteration = 0;
  double return_mean = 0.0;
  double return_stderr = 0.0;
  double mean_alpha = 0.0;
  double grad_norm = 0.0;
  long long sim_steps = 0;
  bool diverged = false;
};

namespace detail {

struct Adam {
  std::vector<double> m, v;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long long t = 0;

  void update(std::span<double> params, std::span<const double> grad,
              double lr) {
    if (m.empty()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      params[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
};

}  // namespace detail

inline std::vector<TrainRecord> train(const TrajectoryEnv& env,
                                      GaussianPolicy& policy,
                                      const TrainConfig& cfg) {
  std::vector<TrainRecord> records;
  records.reserve(cfg.iterations);
  detail::Adam adam;
  std::vector<double> params(policy.param_count());
  const int A = policy.action_dim, S = policy.state_dim;

  for (int it = 0; it < cfg.iterations; ++it) {
    const auto data =
        rollout(env, policy, cfg.n_actors,
                derive_stream(cfg.seed, (3ULL << 56) | it), cfg);
    TrainRecord rec;
    rec.iteration = it;
    rec.sim_steps = data.steps_taken;
    const auto rets = data.returns();
    rec.return_mean = mean(rets);
    rec.return_stderr = sample_stddev(rets) / std::sqrt(cfg.n_actors);
    if (!std::isfinite(rec.return_mean)) {
      rec.diverged = true;
      records.push_back(rec);
      break;
    }

    const auto tensor = per_step_gradients(env, policy, data, cfg);
    FusionResult fusion;
    switch (cfg.mode) {
      case FusionMode::First:
        fusion.fused = tensor.g1;
        fusion.alpha.assign(static_cast<std::size_t>(data.horizon) * A, 1.0);
        break;
      case FusionMode::Zeroth:
        fusion.fused = tensor.g0;
        fusion.alpha.assign(static_cast<std::size_t>(data.horizon) * A, 0.0);
        break;
      case FusionMode::IVWH:
        fusion = ivwh_fuse(tensor);
        break;
    }
    rec.mean_alpha = mean(fusion.alpha);

    const auto grad =
        push_to_parameters(fusion.fused, policy, data, cfg.grad_clip);
    double norm_sq = 0.0;
    for (double v : grad) norm_sq += v * v;
    rec.grad_norm = std::sqrt(norm_sq);
    records.push_back(rec);

    std::copy(policy.weights.begin(), policy.weights.end(), params.begin());
    std::copy(policy.bias.begin(), policy.bias.end(),
              params.begin() + static_cast<std::size_t>(A) * S);
    adam.update(params, grad, cfg.learning_rate);
    std::copy(params.begin(), params.begin() + static_cast<std::size_t>(A) * S,
              policy.weights.begin());
    std::copy(params.begin() + static_cast<std::size_t>(A) * S, params.end(),
              policy.bias.begin());
  }
  return records;
}

// ---------------------------------------------------------------------------
// Trajectory environments.
// ---------------------------------------------------------------------------

// Smooth 1-D point mass with drag steering toward a goal position.
inline TrajectoryEnv point_mass_env(int horizon = 20, double dt = 0.1,
                                    double goal = 1.0, double drag = 0.5,
                                    double force_scale = 2.0) {
  TrajectoryEnv env;
  env.name = "point_mass";
  env.state_dim = 2;  // position, velocity
  env.action_dim = 1;
  env.horizon = horizon;
  env.reset = [](int, std::uint64_t) { return std::vector<double>{0.0, 0.0}; };
  env.step = [=](std::span<const double> s, std::span<const double> a) {
    TrajectoryStep out;
    const double x = s[0], v = s[1], u = a[0];
    const double vn = v + dt * (force_scale * u - drag * v);
    const double xn = x + dt * vn;
    out.next_state = {xn, vn};
    const double err = x - goal;
    out.reward = -(err * err) - 0.01 * u * u;
    const double dvn_dv = 1.0 - dt * drag;
    out.dnext_dstate = {1.0, dt * dvn_dv, 0.0, dvn_dv};
    out.dnext_daction = {dt * dt * force_scale, dt * force_scale};
    out.dreward_dstate = {-2.0 * err, 0.0};
    out.dreward_daction = {-0.02 * u};
    return out;
  };
  return env;
}

// Scalar linear-Gaussian system with a linear reward; used to check that the
// two gradient channels estimate the same quantity.
inline TrajectoryEnv linear_gaussian_env(int horizon = 4) {
  TrajectoryEnv env;
  env.name = "linear_gaussian";
  env.state_dim = 1;
  env.action_dim = 1;
  env.horizon = horizon;
  env.reset = [](int, std::uint64_t) { return std::vector<double>{0.5}; };
  env.step = [](std::span<const double> s, std::span<const double> a) {
    TrajectoryStep out;
    out.next_state = {0.9 * s[0] + 0.5 * a[0]};
    out.reward = s[0] + 0.3 * a[0];
    out.dnext_dstate = {0.9};
    out.dnext_daction = {0.5};
    out.dreward_dstate = {1.0};
    out.dreward_daction = {0.3};
    return out;
  };
  return env;
}

// Vertical point mass over a stiff spring-damper floor; thrust fights
// gravity and the bounces. Stiff contact makes pathwise gradients volatile.
inline TrajectoryEnv bouncing_point_mass_env(int horizon = 40,
                                             double dt = 0.05,
                                             double stiffness = 4000.0,
                                             double damping = 10.0,
                                             double target = 1.0) {
  TrajectoryEnv env;
  env.name = "bouncing_point_mass";
  env.state_dim = 2;  // height, velocity
  env.action_dim = 1;
  env.horizon = horizon;
  env.reset = [](int actor, std::uint64_t seed) {
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(actor)));
    return std::vector<double>{0.5 + 0.05 * rng.normal(), 0.0};
  };
  env.step = [=](std::span<const double> s, std::span<const double> a) {
    TrajectoryStep out;
    const double x = s[0], v = s[1], u = a[0];
    const double gravity = -9.81;
    const double thrust = 12.0 * u;
    double contact = 0.0, dc_dx = 0.0, dc_dv = 0.0;
    if (x < 0.0) {
      contact = -stiffness * x - damping * v;
      dc_dx = -stiffness;
      dc_dv = -damping;
    }
    const double vn = v + dt * (gravity + thrust + contact);
    const double xn = x + dt * vn;
    out.next_state = {xn, vn};
    const double err = x - target;
    out.reward = -(err * err) - 0.02 * u * u;
    const double dvn_dx = dt * dc_dx;
    const double dvn_dv = 1.0 + dt * dc_dv;
    out.dnext_dstate = {1.0 + dt * dvn_dx, dt * dvn_dv, dvn_dx, dvn_dv};
    out.dnext_daction = {dt * dt * 12.0, dt * 12.0};
    out.dreward_dstate = {-2.0 * err, 0.0};
    out.dreward_daction = {-0.04 * u};
    return out;
  };
  return env;
}

inline TrajectoryEnv make_trajectory_env(const std::string& name) {
  if (name == "point_mass") return point_mass_env();
  if (name == "linear_gaussian") return linear_gaussian_env();
  if (name == "bouncing_point_mass") return bouncing_point_mass_env();
  throw UnknownTaskError("unknown trajectory env: " + name);
}

}  // namespace compgrad
