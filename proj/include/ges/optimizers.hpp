#pragma once

// First-order update rules. Both steppers consume a gradient estimate and
// return the applied update so callers can record it or feed it back as a
// surrogate direction.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "ges/errors.hpp"
#include "ges/linalg.hpp"

namespace ges {

template <class Scalar>
struct StepResult {
  VecX<Scalar> params;
  VecX<Scalar> update;
};

// Plain gradient descent; optionally steps along the normalized direction so
// the step length is exactly the learning rate.
template <class Scalar>
class SgdOptimizer {
 public:
  explicit SgdOptimizer(Scalar learning_rate, bool normalize = false)
      : lr_(learning_rate), normalize_(normalize) {
    if (!(lr_ > Scalar(0))) throw NumericError("learning rate must be > 0");
  }

  StepResult<Scalar> step(const VecX<Scalar>& params,
                          const VecX<Scalar>& gradient) {
    VecX<Scalar> direction = gradient;
    if (normalize_) {
      const Scalar norm = direction.norm();
      if (norm > Scalar(0)) direction /= norm;
    }
    VecX<Scalar> update = -lr_ * direction;
    return {params + update, std::move(update)};
  }

 private:
  Scalar lr_;
  bool normalize_;
};

template <class Scalar>
class AdamOptimizer {
 public:
  explicit AdamOptimizer(Scalar learning_rate, Scalar beta1 = Scalar(0.9),
                         Scalar beta2 = Scalar(0.999),
                         Scalar epsilon = Scalar(1e-8))
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
    if (!(lr_ > Scalar(0))) throw NumericError("learning rate must be > 0");
  }

  StepResult<Scalar> step(const VecX<Scalar>& params,
                          const VecX<Scalar>& gradient) {
    if (m_.size() == 0) {
      m_ = VecX<Scalar>::Zero(params.size());
      v_ = VecX<Scalar>::Zero(params.size());
    }
    ++t_;
    m_ = beta1_ * m_ + (Scalar(1) - beta1_) * gradient;
    v_ = beta2_ * v_ +
         (Scalar(1) - beta2_) * gradient.array().square().matrix();
    const Scalar bias1 = Scalar(1) - std::pow(beta1_, static_cast<Scalar>(t_));
    const Scalar bias2 = Scalar(1) - std::pow(beta2_, static_cast<Scalar>(t_));
    const VecX<Scalar> m_hat = m_ / bias1;
    const VecX<Scalar> v_hat = v_ / bias2;
    VecX<Scalar> update =
        (-lr_ * m_hat.array() / (v_hat.array().sqrt() + epsilon_)).matrix();
    return {params + update, std::move(update)};
  }

  long step_count() const { return t_; }

 private:
  Scalar lr_, beta1_, beta2_, epsilon_;
  VecX<Scalar> m_, v_;
  long t_ = 0;
};

// Centered-rank fitness shaping: values are replaced by their rank mapped
// linearly onto [-0.5, +0.5]. Ties break by index (stable), so the output
// always sums to zero; a single value maps to 0.
template <class Scalar>
std::vector<Scalar> fitness_shape(const std::vector<Scalar>& values) {
  const std::size_t m = values.size();
  if (m == 0) return {};
  if (m == 1) return {Scalar(0)};
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return values[a] < values[b];
                   });
  std::vector<Scalar> shaped(m);
  for (std::size_t rank = 0; rank < m; ++rank) {
    shaped[order[rank]] = static_cast<Scalar>(rank) /
                              static_cast<Scalar>(m - 1) -
                          Scalar(0.5);
  }
  return shaped;
}

}  // namespace ges
