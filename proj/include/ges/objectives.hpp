#pragma once

// Test objectives: linear, rotated quadratic, and a tanh MLP classifier with
// exact backprop gradients. All of them expose value() and gradient() over a
// flat parameter vector so estimators can treat them as black boxes while
// tests compare against the exact gradient.

#include <Eigen/Dense>

#include <cmath>
#include <utility>
#include <vector>

#include "ges/errors.hpp"
#include "ges/linalg.hpp"
#include "ges/rng.hpp"

namespace ges {

template <class Scalar>
class LinearObjective {
 public:
  explicit LinearObjective(VecX<Scalar> slope) : slope_(std::move(slope)) {}

  Eigen::Index dim() const { return slope_.size(); }
  Scalar value(const VecX<Scalar>& theta) const { return slope_.dot(theta); }
  VecX<Scalar> gradient(const VecX<Scalar>&) const { return slope_; }

 private:
  VecX<Scalar> slope_;
};

// f(x) = 1/2 (x - x*)^T H (x - x*) with H = Q diag(eigenvalues) Q^T for a
// random rotation Q.
template <class Scalar>
class QuadraticObjective {
 public:
  QuadraticObjective(MatX<Scalar> hessian, VecX<Scalar> minimum)
      : hessian_(std::move(hessian)), minimum_(std::move(minimum)) {
    if (hessian_.rows() != hessian_.cols() ||
        hessian_.rows() != minimum_.size()) {
      throw NumericError("quadratic objective shape mismatch");
    }
  }

  static QuadraticObjective rotated(const VecX<Scalar>& eigenvalues,
                                    const VecX<Scalar>& minimum,
                                    rng::Xoshiro256pp& gen) {
    const Eigen::Index n = eigenvalues.size();
    const MatX<Scalar> q =
        linalg::sample_orthonormal<Scalar>(n, n, gen).columns();
    MatX<Scalar> h = q * eigenvalues.asDiagonal() * q.transpose();
    return QuadraticObjective(std::move(h), minimum);
  }

  Eigen::Index dim() const { return minimum_.size(); }

  Scalar value(const VecX<Scalar>& theta) const {
    const VecX<Scalar> d = theta - minimum_;
    return Scalar(0.5) * d.dot(hessian_ * d);
  }

  VecX<Scalar> gradient(const VecX<Scalar>& theta) const {
    return hessian_ * (theta - minimum_);
  }

  const MatX<Scalar>& hessian() const { return hessian_; }

 private:
  MatX<Scalar> hessian_;
  VecX<Scalar> minimum_;
};

// Fully connected tanh network with a softmax cross-entropy head. Parameters
// live in one flat vector; per layer the weight matrix (fan_in x fan_out) is
// stored row-major, followed by the bias. Loss is the mean negative
// log-likelihood over the batch.
template <class Scalar>
class MlpClassifier {
 public:
  using RowMat =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  explicit MlpClassifier(std::vector<int> layer_sizes)
      : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw NumericError("mlp needs at least two layers");
    for (int s : sizes_) {
      if (s <= 0) throw NumericError("mlp layer sizes must be positive");
    }
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }

  Eigen::Index param_count() const {
    Eigen::Index total = 0;
    for (int l = 0; l < layer_count(); ++l) {
      total += (static_cast<Eigen::Index>(sizes_[l]) + 1) * sizes_[l + 1];
    }
    return total;
  }

  // Scaled-uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
  VecX<Scalar> init_params(rng::Xoshiro256pp& gen) const {
    VecX<Scalar> params = VecX<Scalar>::Zero(param_count());
    Eigen::Index offset = 0;
    for (int l = 0; l < layer_count(); ++l) {
      const Eigen::Index fan_in = sizes_[l];
      const Eigen::Index fan_out = sizes_[l + 1];
      const Scalar limit = Scalar(1) / std::sqrt(static_cast<Scalar>(fan_in));
      for (Eigen::Index i = 0; i < fan_in * fan_out; ++i) {
        params[offset + i] =
            static_cast<Scalar>(2.0 * gen.uniform01() - 1.0) * limit;
      }
      offset += (fan_in + 1) * fan_out;
    }
    return params;
  }

  Scalar loss(const VecX<Scalar>& params, const MatX<Scalar>& x,
              const Eigen::VectorXi& y) const {
    check_batch(params, x, y);
    MatX<Scalar> h = x;
    Eigen::Index offset = 0;
    for (int l = 0; l < layer_count(); ++l) {
      h = affine(params, offset, l, h);
      if (l + 1 < layer_count()) h = h.array().tanh().matrix();
    }
    return batch_nll(h, y);
  }

  VecX<Scalar> loss_gradient(const VecX<Scalar>& params, const MatX<Scalar>& x,
                             const Eigen::VectorXi& y) const {
    check_batch(params, x, y);
    const Eigen::Index batch = x.rows();

    std::vector<MatX<Scalar>> activations;
    activations.reserve(layer_count() + 1);
    activations.push_back(x);
    Eigen::Index offset = 0;
    for (int l = 0; l < layer_count(); ++l) {
      MatX<Scalar> h = affine(params, offset, l, activations.back());
      if (l + 1 < layer_count()) h = h.array().tanh().matrix();
      activations.push_back(std::move(h));
    }

    // Softmax minus one-hot, averaged over the batch.
    MatX<Scalar> delta = activations.back();
    for (Eigen::Index r = 0; r < batch; ++r) {
      const Scalar zmax = delta.row(r).maxCoeff();
      delta.row(r) = (delta.row(r).array() - zmax).exp();
      delta.row(r) /= delta.row(r).sum();
      delta(r, y[r]) -= Scalar(1);
    }
    delta /= static_cast<Scalar>(batch);

    VecX<Scalar> grad = VecX<Scalar>::Zero(params.size());
    for (int l = layer_count() - 1; l >= 0; --l) {
      const Eigen::Index fan_in = sizes_[l];
      const Eigen::Index fan_out = sizes_[l + 1];
      const Eigen::Index layer_offset = layer_param_offset(l);
      Eigen::Map<RowMat> grad_w(grad.data() + layer_offset, fan_in, fan_out);
      Eigen::Map<VecX<Scalar>> grad_b(
          grad.data() + layer_offset + fan_in * fan_out, fan_out);
      grad_w = activations[l].transpose() * delta;
      grad_b = delta.colwise().sum();
      if (l > 0) {
        Eigen::Map<const RowMat> w(params.data() + layer_offset, fan_in,
                                   fan_out);
        delta = (delta * w.transpose()).eval();
        delta.array() *= Scalar(1) - activations[l].array().square();
      }
    }
    return grad;
  }

  Eigen::Index layer_param_offset(int layer) const {
    Eigen::Index offset = 0;
    for (int l = 0; l < layer; ++l) {
      offset += (static_cast<Eigen::Index>(sizes_[l]) + 1) * sizes_[l + 1];
    }
    return offset;
  }

 private:
  MatX<Scalar> affine(const VecX<Scalar>& params, Eigen::Index& offset, int l,
                      const MatX<Scalar>& input) const {
    const Eigen::Index fan_in = sizes_[l];
    const Eigen::Index fan_out = sizes_[l + 1];
    Eigen::Map<const RowMat> w(params.data() + offset, fan_in, fan_out);
    Eigen::Map<const VecX<Scalar>> b(params.data() + offset + fan_in * fan_out,
                                     fan_out);
    offset += (fan_in + 1) * fan_out;
    return (input * w).rowwise() + b.transpose();
  }

  Scalar batch_nll(const MatX<Scalar>& logits, const Eigen::VectorXi& y) const {
    Scalar total = Scalar(0);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      const Scalar zmax = logits.row(r).maxCoeff();
      const Scalar lse =
          std::log((logits.row(r).array() - zmax).exp().sum()) + zmax;
      total += lse - logits(r, y[r]);
    }
    return total / static_cast<Scalar>(logits.rows());
  }

  void check_batch(const VecX<Scalar>& params, const MatX<Scalar>& x,
                   const Eigen::VectorXi& y) const {
    if (params.size() != param_count()) {
      throw NumericError("parameter vector has wrong length");
    }
    if (x.cols() != input_dim()) throw NumericError("batch width mismatch");
    if (x.rows() != y.size() || x.rows() == 0) {
      throw NumericError("batch rows and labels mismatch");
    }
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y[i] < 0 || y[i] >= output_dim()) {
        throw NumericError("label out of range");
      }
    }
  }

  std::vector<int> sizes_;
};

}  // namespace ges
