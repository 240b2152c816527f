#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "latte/neuralnet.hpp"
#include "latte/types.hpp"
#include "support.hpp"

namespace testing {

// True if a walk of exactly `length` steps joins i and j, found by explicit
// depth-first enumeration rather than matrix powers.
inline bool walk_exists(const latte::Matrix& a, latte::Index from, latte::Index to, int length) {
  if (length == 0) return from == to;
  for (latte::Index next = 0; next < a.cols(); ++next)
    if (a(from, next) != 0.0 && walk_exists(a, next, to, length - 1)) return true;
  return false;
}

// Largest |eigenvalue| of a symmetric matrix by power iteration on B^2.
inline double spectral_radius(const latte::Matrix& b, std::mt19937_64& rng) {
  latte::Vector v = random_matrix(static_cast<int>(b.rows()), 1, rng, 0.1, 1.0);
  double estimate = 0.0;
  for (int it = 0; it < 2000; ++it) {
    latte::Vector w = b * (b * v);
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    estimate = std::sqrt(n / v.norm());
    v = w / n;
  }
  return estimate;
}

// A plain masked sigmoid autoencoder trained by full-batch gradient descent,
// written without the library's forward/backward so it can serve as a
// reference for the trainer's reduced configuration.
class PlainAutoencoder {
 public:
  explicit PlainAutoencoder(const latte::AutoencoderModel& init) {
    for (std::size_t k = 0; k < init.depth(); ++k) {
      weights_.push_back(init.encoder(k).weight);
      biases_.push_back(init.encoder(k).bias);
    }
    for (std::size_t k = init.depth(); k-- > 0;) {
      weights_.push_back(init.decoder(k).weight);
      biases_.push_back(init.decoder(k).bias);
    }
  }

  // Column-wise min-max scaling; constant columns become zero.
  static latte::Matrix scale(const latte::Matrix& raw) {
    latte::Matrix out = latte::Matrix::Zero(raw.rows(), raw.cols());
    for (latte::Index j = 0; j < raw.cols(); ++j) {
      const double lo = raw.col(j).minCoeff();
      const double hi = raw.col(j).maxCoeff();
      if (hi > lo)
        for (latte::Index i = 0; i < raw.rows(); ++i) out(i, j) = (raw(i, j) - lo) / (hi - lo);
    }
    return out;
  }

  double loss(const latte::Matrix& x, double gamma) const {
    const std::vector<latte::Matrix> acts = activations(x);
    return weighted_error(x, acts.back(), gamma).squaredNorm();
  }

  void step(const latte::Matrix& x, double gamma, double lr) {
    const std::vector<latte::Matrix> acts = activations(x);
    const latte::Matrix weighted = weighted_error(x, acts.back(), gamma);
    latte::Matrix grad = latte::Matrix::Zero(x.rows(), x.cols());
    for (latte::Index i = 0; i < x.rows(); ++i)
      for (latte::Index j = 0; j < x.cols(); ++j) grad(i, j) = -2.0 * weighted(i, j) * (x(i, j) != 0.0 ? gamma : 1.0);

    std::vector<latte::Matrix> dw(weights_.size());
    std::vector<latte::Vector> db(weights_.size());
    for (std::size_t l = weights_.size(); l-- > 0;) {
      const latte::Matrix& out = acts[l + 1];
      const latte::Matrix delta = grad.array() * out.array() * (1.0 - out.array());
      dw[l] = delta.transpose() * acts[l];
      db[l] = delta.colwise().sum().transpose();
      grad = delta * weights_[l];
    }
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      weights_[l] -= lr * dw[l];
      biases_[l] -= lr * db[l];
    }
  }

 private:
  std::vector<latte::Matrix> activations(const latte::Matrix& x) const {
    std::vector<latte::Matrix> acts = {x};
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      latte::Matrix pre = acts.back() * weights_[l].transpose();
      for (latte::Index i = 0; i < pre.rows(); ++i) pre.row(i) += biases_[l].transpose();
      acts.push_back((1.0 / (1.0 + (-pre.array()).exp())).matrix());
    }
    return acts;
  }

  static latte::Matrix weighted_error(const latte::Matrix& x, const latte::Matrix& xhat, double gamma) {
    latte::Matrix e = x - xhat;
    for (latte::Index i = 0; i < x.rows(); ++i)
      for (latte::Index j = 0; j < x.cols(); ++j)
        if (x(i, j) != 0.0) e(i, j) *= gamma;
    return e;
  }

  std::vector<latte::Matrix> weights_;
  std::vector<latte::Vector> biases_;
};

}  // namespace testing
