#pragma once

// Black-box gradient estimators built from antithetic finite differences.
//
// Two samplers are provided: the classic raw-Gaussian estimator (averages
// coefficient-weighted Gaussian directions) and the guided estimator, which
// evaluates orthonormalized surrogate directions plus random orthonormal
// directions from their complement and sums coefficient-weighted directions
// without averaging, making the estimate the exact orthogonal projection of
// the gradient onto the evaluated span in the noiseless limit.
//
// The pieces (direction sampling, coefficient evaluation, combination) are
// exposed separately so callers can inject coefficient permutations or
// fitness shaping between the stages.

#include <Eigen/Dense>

#include <deque>
#include <utility>
#include <vector>

#include "ges/errors.hpp"
#include "ges/linalg.hpp"
#include "ges/optimizers.hpp"
#include "ges/parallel.hpp"
#include "ges/rng.hpp"

namespace ges {

template <class Scalar>
struct GradientEstimate {
  VecX<Scalar> estimate;      // directions * weights
  MatX<Scalar> directions;    // evaluated directions, one per column
  VecX<Scalar> coefficients;  // antithetic directional coefficients
  VecX<Scalar> weights;       // combination weights actually applied
  Eigen::Index surrogate_count = 0;  // leading columns that came from surrogates
  long evaluations = 0;              // objective calls consumed
};

// (f(theta + sigma d) - f(theta - sigma d)) / (2 sigma)
template <class Scalar, class F>
Scalar directional_coefficient(F&& f, const VecX<Scalar>& theta,
                               const VecX<Scalar>& direction, Scalar sigma) {
  if (!(sigma > Scalar(0))) throw NumericError("sigma must be > 0");
  const Scalar plus = f(theta + sigma * direction);
  const Scalar minus = f(theta - sigma * direction);
  return (plus - minus) / (Scalar(2) * sigma);
}

// Antithetic coefficients for every direction column. The 2p objective calls
// are dispatched to the pool when one is given; results are stored by index,
// so the output is independent of the thread count.
template <class Scalar, class F>
VecX<Scalar> antithetic_coefficients(F&& f, const VecX<Scalar>& theta,
                                     const MatX<Scalar>& directions,
                                     Scalar sigma, WorkerPool* pool = nullptr) {
  if (!(sigma > Scalar(0))) throw NumericError("sigma must be > 0");
  const Eigen::Index p = directions.cols();
  VecX<Scalar> values(2 * p);
  auto evaluate = [&](std::size_t task) {
    const Eigen::Index i = static_cast<Eigen::Index>(task) / 2;
    const Scalar sign = (task % 2 == 0) ? Scalar(1) : Scalar(-1);
    values[static_cast<Eigen::Index>(task)] =
        f(theta + sign * sigma * directions.col(i));
  };
  if (pool != nullptr) {
    pool->for_index(static_cast<std::size_t>(2 * p), evaluate);
  } else {
    for (std::size_t task = 0; task < static_cast<std::size_t>(2 * p); ++task) {
      evaluate(task);
    }
  }
  VecX<Scalar> coeffs(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    coeffs[i] = (values[2 * i] - values[2 * i + 1]) / (Scalar(2) * sigma);
  }
  return coeffs;
}

template <class Scalar>
VecX<Scalar> combine(const MatX<Scalar>& directions,
                     const VecX<Scalar>& weights) {
  return directions * weights;
}

// Raw Gaussian direction matrix, filled column by column.
template <class Scalar>
MatX<Scalar> gaussian_directions(Eigen::Index n, Eigen::Index p,
                                 rng::Xoshiro256pp& gen) {
  MatX<Scalar> dirs(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      dirs(i, j) = static_cast<Scalar>(gen.gaussian());
    }
  }
  return dirs;
}

struct GuidedDirectionsInfo {
  Eigen::Index surrogate_count = 0;  // surrogate columns that survived
  Eigen::Index recycled = 0;         // degenerate slots refilled with random
};

// Direction set for the guided estimator: orthonormalized surrogates first,
// then random orthonormal directions from their orthogonal complement.
// Degenerate or dependent surrogate slots are recycled into extra random
// directions, so the total count (and hence the evaluation budget) depends
// only on the requested sizes.
template <class Scalar>
MatX<Scalar> guided_directions(const MatX<Scalar>& surrogates,
                               Eigen::Index p_random, rng::Xoshiro256pp& gen,
                               GuidedDirectionsInfo* info = nullptr) {
  const Eigen::Index n = surrogates.rows();
  const MatX<Scalar> basis = linalg::gram_schmidt<Scalar>(surrogates);
  const Eigen::Index kept = basis.cols();
  const Eigen::Index recycled = surrogates.cols() - kept;
  const Eigen::Index random_count = p_random + recycled;
  MatX<Scalar> dirs(n, kept + random_count);
  dirs.leftCols(kept) = basis;
  if (random_count > 0) {
    dirs.rightCols(random_count) =
        linalg::sample_orthogonal_complement<Scalar>(basis, random_count, gen)
            .columns();
  }
  if (info != nullptr) {
    info->surrogate_count = kept;
    info->recycled = recycled;
  }
  return dirs;
}

// Classic antithetic estimator over P raw Gaussian directions:
// (1 / 2 sigma P) sum_i (f(theta + sigma e_i) - f(theta - sigma e_i)) e_i.
template <class Scalar, class F>
GradientEstimate<Scalar> es_gradient(F&& f, const VecX<Scalar>& theta,
                                     Eigen::Index p, Scalar sigma,
                                     rng::Xoshiro256pp& gen,
                                     WorkerPool* pool = nullptr,
                                     bool fitness_shaping = false) {
  if (p <= 0) throw NumericError("direction count must be positive");
  GradientEstimate<Scalar> out;
  out.directions = gaussian_directions<Scalar>(theta.size(), p, gen);
  out.coefficients =
      antithetic_coefficients(f, theta, out.directions, sigma, pool);
  out.weights = out.coefficients;
  if (fitness_shaping) {
    std::vector<Scalar> raw(out.coefficients.data(),
                            out.coefficients.data() + p);
    const std::vector<Scalar> shaped = fitness_shape(raw);
    for (Eigen::Index i = 0; i < p; ++i) out.weights[i] = shaped[i];
  }
  out.weights /= static_cast<Scalar>(p);
  out.estimate = combine(out.directions, out.weights);
  out.surrogate_count = 0;
  out.evaluations = 2 * static_cast<long>(p);
  return out;
}

// Guided estimator: coefficient-weighted sum over the orthonormal direction
// set (no averaging). With exact coefficients this is the orthogonal
// projection of the gradient onto the evaluated span.
template <class Scalar, class F>
GradientEstimate<Scalar> guided_gradient(F&& f, const VecX<Scalar>& theta,
                                         const MatX<Scalar>& surrogates,
                                         Eigen::Index p_random, Scalar sigma,
                                         rng::Xoshiro256pp& gen,
                                         WorkerPool* pool = nullptr,
                                         bool fitness_shaping = false) {
  if (surrogates.cols() + p_random <= 0) {
    throw NumericError("direction count must be positive");
  }
  GradientEstimate<Scalar> out;
  GuidedDirectionsInfo info;
  out.directions = guided_directions<Scalar>(surrogates, p_random, gen, &info);
  out.coefficients =
      antithetic_coefficients(f, theta, out.directions, sigma, pool);
  out.weights = out.coefficients;
  if (fitness_shaping) {
    const Eigen::Index count = out.coefficients.size();
    std::vector<Scalar> raw(out.coefficients.data(),
                            out.coefficients.data() + count);
    const std::vector<Scalar> shaped = fitness_shape(raw);
    for (Eigen::Index i = 0; i < count; ++i) out.weights[i] = shaped[i];
  }
  out.estimate = combine(out.directions, out.weights);
  out.surrogate_count = info.surrogate_count;
  out.evaluations = 2 * static_cast<long>(out.directions.cols());
  return out;
}

// Fisher-Yates permutation of the coefficient vector; models adversarial
// fitness shuffling.
template <class Scalar>
VecX<Scalar> permute_fitness(const VecX<Scalar>& coefficients,
                             rng::Xoshiro256pp& gen) {
  VecX<Scalar> shuffled = coefficients;
  for (Eigen::Index i = shuffled.size() - 1; i > 0; --i) {
    const Eigen::Index j = static_cast<Eigen::Index>(
        gen.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(shuffled[i], shuffled[j]);
  }
  return shuffled;
}

// Most recent past directions, newest first. Raw (unnormalized) directions
// are accepted; orthonormalization happens where they are used.
template <class Scalar>
class DirectionHistory {
 public:
  explicit DirectionHistory(Eigen::Index capacity) : capacity_(capacity) {
    if (capacity_ < 0) throw NumericError("history capacity must be >= 0");
  }

  Eigen::Index capacity() const { return capacity_; }
  Eigen::Index count() const {
    return static_cast<Eigen::Index>(entries_.size());
  }

  void push(VecX<Scalar> direction) {
    if (capacity_ == 0) return;
    entries_.push_front(std::move(direction));
    if (count() > capacity_) entries_.pop_back();
  }

  // Matrix with the newest direction in column 0, so orthonormalization
  // favors recent information.
  MatX<Scalar> as_matrix(Eigen::Index rows) const {
    MatX<Scalar> m(rows, count());
    for (Eigen::Index j = 0; j < count(); ++j) {
      m.col(j) = entries_[static_cast<std::size_t>(j)];
    }
    return m;
  }

  void clear() { entries_.clear(); }

 private:
  Eigen::Index capacity_;
  std::deque<VecX<Scalar>> entries_;
};

// One step of the self-guided scheme: estimate with the history as surrogate
// set, then push the fresh estimate. Empty or degenerate history slots are
// recycled into extra random directions, keeping the per-step budget at
// exactly 2 (capacity + p_random) evaluations.
template <class Scalar, class F>
GradientEstimate<Scalar> iterative_step(F&& f, const VecX<Scalar>& theta,
                                        DirectionHistory<Scalar>& history,
                                        Eigen::Index p_random, Scalar sigma,
                                        rng::Xoshiro256pp& gen,
                                        WorkerPool* pool = nullptr,
                                        bool fitness_shaping = false) {
  const Eigen::Index missing = history.capacity() - history.count();
  const MatX<Scalar> surrogates = history.as_matrix(theta.size());
  GradientEstimate<Scalar> estimate =
      guided_gradient(f, theta, surrogates, p_random + missing, sigma, gen,
                      pool, fitness_shaping);
  history.push(estimate.estimate);
  return estimate;
}

}  // namespace ges
