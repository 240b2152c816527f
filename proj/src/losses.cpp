#include "latte/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "latte/error.hpp"

namespace latte {

namespace {

// log(sigmoid(s)) without overflow for large |s|.
double log_sigmoid(double s) {
  return s >= 0.0 ? -std::log1p(std::exp(-s)) : s - std::log1p(std::exp(s));
}

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

void require_square(const Matrix& m, Index n, const char* what) {
  if (m.rows() != n || m.cols() != n)
    throw ShapeError(std::string(what) + ": matrix is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected " + std::to_string(n) + "x" + std::to_string(n));
}

}  // namespace

double connection_prob(const Vector& zi, const Vector& zj) {
  if (zi.size() != zj.size()) throw ShapeError("connection_prob: dimension mismatch");
  return sigmoid(zi.dot(zj));
}

double proximity_loss(const Matrix& z, const Matrix& proximity) {
  require_square(proximity, z.rows(), "proximity_loss");
  const Matrix scores = z * z.transpose();
  double total = 0.0;
  for (Index j = 0; j < proximity.cols(); ++j) {
    for (Index i = 0; i < proximity.rows(); ++i) {
      if (i == j || proximity(i, j) == 0.0) continue;
      total -= proximity(i, j) * log_sigmoid(scores(i, j));
    }
  }
  return total;
}

LossGrad proximity_loss_grad(const Matrix& z, const Matrix& proximity) {
  require_square(proximity, z.rows(), "proximity_loss");
  const Matrix scores = z * z.transpose();
  // d/ds [-B log sigmoid(s)] = -B (1 - sigmoid(s)); s_ij = z_i . z_j feeds
  // both z_i and z_j.
  Matrix coeff = Matrix::Zero(z.rows(), z.rows());
  LossGrad out;
  for (Index j = 0; j < proximity.cols(); ++j) {
    for (Index i = 0; i < proximity.rows(); ++i) {
      const double b = proximity(i, j);
      if (i == j || b == 0.0) continue;
      out.value -= b * log_sigmoid(scores(i, j));
      coeff(i, j) = -b * (1.0 - sigmoid(scores(i, j)));
    }
  }
  out.grad = (coeff + coeff.transpose()) * z;
  return out;
}

std::size_t offdiag_support(const Matrix& proximity) {
  std::size_t n = 0;
  for (Index j = 0; j < proximity.cols(); ++j)
    for (Index i = 0; i < proximity.rows(); ++i)
      if (i != j && proximity(i, j) != 0.0) ++n;
  return n;
}

double regularization(const AutoencoderModel& model) {
  double total = 0.0;
  for (std::size_t k = 0; k < model.depth(); ++k) {
    total += model.encoder(k).weight.squaredNorm() + model.decoder(k).weight.squaredNorm();
  }
  return total;
}

void add_regularization_grad(const AutoencoderModel& model, Gradients& grads, double weight) {
  for (std::size_t k = 0; k < model.depth(); ++k) {
    grads.encoder[k].weight += (2.0 * weight) * model.encoder(k).weight;
    grads.decoder[k].weight += (2.0 * weight) * model.decoder(k).weight;
  }
}

double embedding_objective(double reconstruction, std::span<const double> proximity_losses,
                           std::span<const double> alphas, double regularizer, double theta) {
  if (alphas.size() != proximity_losses.size())
    throw ShapeError("embedding_objective: one alpha per proximity order required");
  double total = reconstruction + theta * regularizer;
  for (std::size_t n = 0; n < proximity_losses.size(); ++n) total += alphas[n] * proximity_losses[n];
  return total;
}

double embedding_objective(double reconstruction, std::span<const double> proximity_losses, double alpha,
                           double regularizer, double theta) {
  const std::vector<double> alphas(proximity_losses.size(), alpha);
  return embedding_objective(reconstruction, proximity_losses, alphas, regularizer, theta);
}

LossGrad laplacian_trace(const Matrix& z, const SparseMatrix& adjacency) {
  if (adjacency.rows() != z.rows() || adjacency.cols() != z.rows())
    throw ShapeError("laplacian_trace: adjacency does not match embedding rows");
  const Vector degree = adjacency * Vector::Ones(z.rows());
  LossGrad out;
  out.grad = degree.asDiagonal() * z - adjacency * z;
  // 1/2 Tr(Z^T L Z) = 1/2 <Z, L Z>
  out.value = 0.5 * z.cwiseProduct(out.grad).sum();
  return out;
}

LossGrad orthonormal_penalty(const Matrix& z, double beta, double gram_scale) {
  const Matrix gap = gram_scale * (z.transpose() * z) - Matrix::Identity(z.cols(), z.cols());
  LossGrad out;
  out.value = beta * gap.squaredNorm();
  out.grad = (4.0 * beta * gram_scale) * (z * gap);
  return out;
}

LossGrad community_loss(const Matrix& zu, const SparseMatrix& user_adjacency, double beta) {
  LossGrad trace = laplacian_trace(zu, user_adjacency);
  const LossGrad ortho = orthonormal_penalty(zu, beta);
  trace.value += ortho.value;
  trace.grad += ortho.grad;
  return trace;
}

void DiffusionWeights::validate() const {
  if (!(eta > 1.0)) throw ConfigError("diffusion weight eta must exceed 1");
  if (!(delta < 0.0)) throw ConfigError("diffusion weight delta must be negative");
  if (tau && !(*tau > 0.0)) throw ConfigError("diffusion cap tau must be positive");
}

double diffusion_weight(const Cascade& cascade, std::size_t a, std::size_t b, const DiffusionWeights& w) {
  const bool in_a = cascade.contains(a);
  const bool in_b = cascade.contains(b);
  if (in_a && in_b) return cascade.has_edge(a, b) ? w.eta : 1.0;
  if (in_a || in_b) return w.delta;
  return 0.0;
}

LossGrad diffusion_loss(const Matrix& zu, const CascadeSet& cascades, const DiffusionWeights& w) {
  const double tau = w.tau.value_or(static_cast<double>(zu.cols()));
  const Index n = zu.rows();
  LossGrad out;
  out.grad = Matrix::Zero(n, zu.cols());
  std::vector<char> active(static_cast<std::size_t>(n), 0);

  // Each unordered pair appears twice in the ordered sum, hence the factor 2
  // on values and 4 on gradients.
  for (const Cascade& c : cascades) {
    for (std::size_t u : c.activated) {
      if (u >= static_cast<std::size_t>(n)) throw ShapeError("diffusion_loss: cascade user outside embedding rows");
      active[u] = 1;
    }
    for (std::size_t x = 0; x < c.activated.size(); ++x) {
      const auto j = static_cast<Index>(c.activated[x]);
      for (std::size_t y = x + 1; y < c.activated.size(); ++y) {
        const auto k = static_cast<Index>(c.activated[y]);
        const double s = c.has_edge(c.activated[x], c.activated[y]) ? w.eta : 1.0;
        const Vector diff = (zu.row(j) - zu.row(k)).transpose();
        out.value += 2.0 * s * diff.squaredNorm();
        out.grad.row(j) += (4.0 * s) * diff.transpose();
        out.grad.row(k) -= (4.0 * s) * diff.transpose();
      }
      for (Index k = 0; k < n; ++k) {
        if (active[static_cast<std::size_t>(k)]) continue;
        const Vector diff = (zu.row(j) - zu.row(k)).transpose();
        const double d2 = diff.squaredNorm();
        if (d2 < tau) {
          out.value += 2.0 * w.delta * d2;
          out.grad.row(j) += (4.0 * w.delta) * diff.transpose();
          out.grad.row(k) -= (4.0 * w.delta) * diff.transpose();
        } else {
          out.value += 2.0 * w.delta * tau;
        }
      }
    }
    for (std::size_t u : c.activated) active[u] = 0;
  }
  return out;
}

double joint_objective(double c, double embedding, double task) {
  if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("joint objective weight c must lie in [0, 1]");
  return c * embedding + (1.0 - c) * task;
}

}  // namespace latte
