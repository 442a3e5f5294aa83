#pragma once

// Monte-Carlo checks for the convergence theory of the guided estimator:
// closed-form drift and hitting-time bounds for the fixed-gradient alignment
// chain, the rotating-gradient recurrence and its fixed point, subspace
// alignment moments, and the projection-optimality property.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "ges/errors.hpp"
#include "ges/estimators.hpp"
#include "ges/linalg.hpp"
#include "ges/objectives.hpp"
#include "ges/rng.hpp"

namespace ges::theory {

inline double square(double x) { return x * x; }

// Expected one-step gain of the squared alignment when the gradient is
// fixed: E[X_t^2 - X_{t-1}^2 | X_{t-1}^2 = x2] = (1 - x2) P / (N - 1).
inline double expected_drift_linear(double x2, int n, int p) {
  if (n < 2 || p < 1 || p > n - 1) throw NumericError("invalid chain sizes");
  if (x2 < 0.0 || x2 > 1.0) throw NumericError("x2 outside [0, 1]");
  return (1.0 - x2) * static_cast<double>(p) / static_cast<double>(n - 1);
}

// E[T] <= (N-1)/P * min{(1-delta)/delta, 1 + ln(1/delta)} for the first time
// X_t^2 >= 1 - delta from X_0^2 = 0.
inline double hitting_time_bound(int n, int p, double delta) {
  if (delta <= 0.0 || delta >= 1.0) throw NumericError("delta outside (0, 1)");
  if (n < 2 || p < 1 || p > n - 1) throw NumericError("invalid chain sizes");
  const double scale = static_cast<double>(n - 1) / static_cast<double>(p);
  const double additive = (1.0 - delta) / delta;
  const double variable = 1.0 + std::log(1.0 / delta);
  return scale * std::min(additive, variable);
}

// Additive-drift argument: gap shrinking by at least c per step is closed in
// at most gap/c expected steps.
inline double additive_drift_bound(double start_gap, double drift) {
  if (!(drift > 0.0) || start_gap < 0.0) {
    throw NumericError("need positive drift and nonnegative gap");
  }
  return start_gap / drift;
}

// Variable-drift argument with h(z) = z P/(N-1) and normalized start z0 >= 1:
// E[T] <= (N-1)/P * (1 + ln z0).
inline double variable_drift_bound(double z0, int n, int p) {
  if (z0 < 1.0) throw NumericError("z0 must be >= 1");
  if (n < 2 || p < 1 || p > n - 1) throw NumericError("invalid chain sizes");
  return static_cast<double>(n - 1) / static_cast<double>(p) *
         (1.0 + std::log(z0));
}

// Rotating-gradient recurrence:
// E[X_t^2 | x2] = (a^2 x2 + (1-a^2)(1-x2)/(N-1)) (1 - P/(N-1)) + P/(N-1).
inline double theorem2_expected(double x2, int n, int p, double alpha) {
  if (n < 2 || p < 1 || p > n - 1) throw NumericError("invalid chain sizes");
  if (x2 < 0.0 || x2 > 1.0) throw NumericError("x2 outside [0, 1]");
  const double q = 1.0 / static_cast<double>(n - 1);
  const double m = 1.0 - static_cast<double>(p) / static_cast<double>(n - 1);
  const double a2 = alpha * alpha;
  return (a2 * x2 + (1.0 - a2) * (1.0 - x2) * q) * m +
         static_cast<double>(p) * q;
}

// Fixed point of the rotating-gradient recurrence, located by bisection on
// the drift theorem2_expected(a) - a (positive at 0, negative at 1).
inline double fixed_point_A(int n, int p, double alpha) {
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (theorem2_expected(mid, n, p, alpha) - mid >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace detail {

inline Eigen::VectorXd random_unit(Eigen::Index n, rng::Xoshiro256pp& gen) {
  Eigen::VectorXd v(n);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gen.gaussian();
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

// Unit vector orthogonal to the given unit vector.
inline Eigen::VectorXd random_unit_orthogonal(const Eigen::VectorXd& u,
                                              rng::Xoshiro256pp& gen) {
  for (;;) {
    Eigen::VectorXd w = random_unit(u.size(), gen);
    w -= u * u.dot(w);
    const double norm = w.norm();
    if (norm > 1e-12) return w / norm;
  }
}

// One transition of the alignment chain: re-estimate the direction from the
// previous estimate plus p fresh orthonormal directions orthogonal to it,
// then project the gradient onto that span.
inline Eigen::VectorXd chain_transition(const Eigen::VectorXd& gradient,
                                        const Eigen::VectorXd& previous,
                                        int p, rng::Xoshiro256pp& gen) {
  const Eigen::Index n = gradient.size();
  Eigen::MatrixXd span(n, p + 1);
  span.col(0) = previous;
  span.rightCols(p) =
      linalg::sample_orthogonal_complement<double>(previous, p, gen).columns();
  Eigen::VectorXd projected =
      linalg::project_onto_span<double>(span, gradient);
  const double norm = projected.norm();
  if (norm == 0.0) return previous;
  return projected / norm;
}

}  // namespace detail

struct DriftSample {
  double mean = 0.0;
  double standard_error = 0.0;
  long trials = 0;
};

// Monte-Carlo one-step drift of the fixed-gradient chain started at exactly
// X^2 = x2.
inline DriftSample simulate_drift(double x2, int n, int p, long trials,
                                  rng::Xoshiro256pp& gen) {
  if (trials <= 1) throw NumericError("need at least 2 trials");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (long t = 0; t < trials; ++t) {
    const Eigen::VectorXd u = detail::random_unit(n, gen);
    const Eigen::VectorXd w = detail::random_unit_orthogonal(u, gen);
    const Eigen::VectorXd z =
        std::sqrt(x2) * u + std::sqrt(1.0 - x2) * w;
    const Eigen::VectorXd z_next = detail::chain_transition(u, z, p, gen);
    const double gain = square(u.dot(z_next)) - x2;
    sum += gain;
    sum_sq += gain * gain;
  }
  DriftSample out;
  out.trials = trials;
  out.mean = sum / static_cast<double>(trials);
  const double var =
      (sum_sq - sum * sum / static_cast<double>(trials)) /
      static_cast<double>(trials - 1);
  out.standard_error = std::sqrt(std::max(var, 0.0) /
                                 static_cast<double>(trials));
  return out;
}

struct HittingTimes {
  std::vector<long> times;
  long capped = 0;

  double mean() const {
    double sum = 0.0;
    for (long t : times) sum += static_cast<double>(t);
    return times.empty() ? 0.0 : sum / static_cast<double>(times.size());
  }

  double standard_error() const {
    if (times.size() < 2) return 0.0;
    const double m = mean();
    double ss = 0.0;
    for (long t : times) ss += (t - m) * (t - m);
    return std::sqrt(ss / static_cast<double>(times.size() - 1) /
                     static_cast<double>(times.size()));
  }
};

// First step at which X_t^2 >= 1 - delta, starting orthogonal to the fixed
// gradient (X_0^2 = 0).
inline HittingTimes simulate_linear_chain(int n, int p, double delta,
                                          long trials, rng::Xoshiro256pp& gen,
                                          long step_cap = 100000) {
  if (delta <= 0.0 || delta >= 1.0) throw NumericError("delta outside (0, 1)");
  HittingTimes out;
  out.times.reserve(static_cast<std::size_t>(trials));
  const double target = 1.0 - delta;
  for (long trial = 0; trial < trials; ++trial) {
    const Eigen::VectorXd u = detail::random_unit(n, gen);
    Eigen::VectorXd z = detail::random_unit_orthogonal(u, gen);
    long t = 0;
    while (square(u.dot(z)) < target && t < step_cap) {
      z = detail::chain_transition(u, z, p, gen);
      ++t;
    }
    if (t >= step_cap) ++out.capped;
    out.times.push_back(t);
  }
  return out;
}

struct RotatingChainStats {
  // (previous alignment, next alignment) for every transition.
  std::vector<std::pair<double, double>> transitions;
  // Mean X_t^2 over the second half of each trial, averaged over trials.
  double longrun_mean = 0.0;
  long trials = 0;
  long steps = 0;
};

// Rotating-gradient model: the gradient turns by a fixed cosine alpha each
// step while the estimate is refreshed through the alignment chain.
inline RotatingChainStats simulate_rotating_chain(int n, int p, double alpha,
                                                  long steps, long trials,
                                                  rng::Xoshiro256pp& gen) {
  if (steps < 2) throw NumericError("need at least 2 steps");
  RotatingChainStats out;
  out.trials = trials;
  out.steps = steps;
  out.transitions.reserve(static_cast<std::size_t>(steps * trials));
  const double mix = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
  double longrun_sum = 0.0;
  for (long trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd g = detail::random_unit(n, gen);
    Eigen::VectorXd z = detail::random_unit(n, gen);
    double tail_sum = 0.0;
    long tail_count = 0;
    for (long t = 0; t < steps; ++t) {
      const double x_prev = square(g.dot(z));
      const Eigen::VectorXd w = detail::random_unit_orthogonal(g, gen);
      g = alpha * g + mix * w;
      g /= g.norm();
      z = detail::chain_transition(g, z, p, gen);
      const double x_next = square(g.dot(z));
      out.transitions.emplace_back(x_prev, x_next);
      if (t >= steps / 2) {
        tail_sum += x_next;
        ++tail_count;
      }
    }
    longrun_sum += tail_sum / static_cast<double>(tail_count);
  }
  out.longrun_mean = longrun_sum / static_cast<double>(trials);
  return out;
}

struct SubspaceAlignment {
  double mean = 0.0;
  double standard_error = 0.0;
  long samples = 0;
};

// E[sum_i <u, e_i>^2] over random p-dimensional orthonormal sets in R^n;
// the closed form is P/N.
inline SubspaceAlignment simulate_subspace_alignment(int n, int p,
                                                     long samples,
                                                     rng::Xoshiro256pp& gen) {
  if (samples <= 1) throw NumericError("need at least 2 samples");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (long s = 0; s < samples; ++s) {
    const Eigen::VectorXd u = detail::random_unit(n, gen);
    const Eigen::MatrixXd dirs =
        linalg::sample_orthonormal<double>(n, p, gen).columns();
    const double value = (dirs.transpose() * u).squaredNorm();
    sum += value;
    sum_sq += value * value;
  }
  SubspaceAlignment out;
  out.samples = samples;
  out.mean = sum / static_cast<double>(samples);
  const double var = (sum_sq - sum * sum / static_cast<double>(samples)) /
                     static_cast<double>(samples - 1);
  out.standard_error =
      std::sqrt(std::max(var, 0.0) / static_cast<double>(samples));
  return out;
}

struct OptimalityResult {
  double max_excess = 0.0;  // best challenger cosine minus estimate cosine
  long instances = 0;
  long challengers_per_instance = 0;
};

// Projection optimality: on a linear objective the guided estimate's cosine
// to the gradient cannot be beaten by any other vector of the evaluated
// span. Challenges with random span combinations, returns the worst excess.
inline OptimalityResult optimality_check(long instances,
                                         long challengers_per_instance,
                                         rng::Xoshiro256pp& gen) {
  OptimalityResult out;
  out.instances = instances;
  out.challengers_per_instance = challengers_per_instance;
  for (long inst = 0; inst < instances; ++inst) {
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(gen.below(29));
    const Eigen::Index k = static_cast<Eigen::Index>(gen.below(4));
    const Eigen::Index p_upper = std::min<Eigen::Index>(
        6, std::max<Eigen::Index>(1, n - k - 1));
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(
                                   gen.below(static_cast<std::uint64_t>(p_upper)));
    Eigen::VectorXd gradient(n);
    for (Eigen::Index i = 0; i < n; ++i) gradient[i] = gen.gaussian();
    const LinearObjective<double> objective(gradient);
    auto f = [&](const Eigen::VectorXd& x) { return objective.value(x); };

    // Surrogates: one gradient-correlated direction, the rest random.
    Eigen::MatrixXd surrogates(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) surrogates(i, j) = gen.gaussian();
      if (j == 0) surrogates.col(0) += gradient / gradient.norm();
    }

    const Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    const GradientEstimate<double> estimate = guided_gradient<double>(
        f, theta, surrogates, p, 1e-3, gen, nullptr, false);
    const double estimate_cos =
        linalg::cosine<double>(estimate.estimate, gradient);

    const Eigen::Index span_size = estimate.directions.cols();
    Eigen::VectorXd weights(span_size);
    for (long c = 0; c < challengers_per_instance; ++c) {
      for (Eigen::Index i = 0; i < span_size; ++i) weights[i] = gen.gaussian();
      const Eigen::VectorXd challenger = estimate.directions * weights;
      const double challenger_cos =
          linalg::cosine<double>(challenger, gradient);
      out.max_excess = std::max(out.max_excess, challenger_cos - estimate_cos);
    }
  }
  return out;
}

}  // namespace ges::theory
