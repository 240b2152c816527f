#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "latte/cascade.hpp"
#include "latte/neuralnet.hpp"
#include "latte/types.hpp"

namespace latte {

// Loss value together with its gradient with respect to the embedding rows.
struct LossGrad {
  double value = 0.0;
  Matrix grad;
};

// p(v_i, v_j) = sigmoid(z_i . z_j)
double connection_prob(const Vector& zi, const Vector& zj);

// -sum_{i != j} B(i,j) log p(v_i, v_j), unnormalized. The cross-entropy sign
// makes the minimum sit where strongly proximate pairs get high p.
double proximity_loss(const Matrix& z, const Matrix& proximity);
LossGrad proximity_loss_grad(const Matrix& z, const Matrix& proximity);

// Number of nonzero off-diagonal entries; the embedding objective divides
// each proximity loss by it so alpha does not depend on graph size.
std::size_t offdiag_support(const Matrix& proximity);

// sum over all encoder and decoder weight matrices of ||W||_F^2 (biases
// excluded).
double regularization(const AutoencoderModel& model);
// grads += weight * d(regularization)/dW
void add_regularization_grad(const AutoencoderModel& model, Gradients& grads, double weight);

// L_e = L_a + sum_n alpha_n L_n + theta L_reg
double embedding_objective(double reconstruction, std::span<const double> proximity_losses,
                           std::span<const double> alphas, double regularizer, double theta);
// Equal weight alpha for every order.
double embedding_objective(double reconstruction, std::span<const double> proximity_losses, double alpha,
                           double regularizer, double theta);

// 1/2 Tr(Z^T (D - A) Z)
LossGrad laplacian_trace(const Matrix& z, const SparseMatrix& adjacency);
// beta ||s Z^T Z - I||_F^2. `gram_scale` s > 1 rescales a minibatch Gram
// matrix to a full-population estimate.
LossGrad orthonormal_penalty(const Matrix& z, double beta, double gram_scale = 1.0);
// Relaxed normalized-cut objective: laplacian_trace + orthonormal_penalty.
LossGrad community_loss(const Matrix& zu, const SparseMatrix& user_adjacency, double beta);

struct DiffusionWeights {
  double eta = 10.0;    // both activated, diffusion edge present
  double delta = -1.0;  // exactly one activated
  // Cap on the squared distance of delta pairs; unset means the embedding
  // width, which sigmoid embeddings never exceed.
  std::optional<double> tau;

  void validate() const;
};

// Four-case weight of the (unordered) user pair within one cascade.
double diffusion_weight(const Cascade& cascade, std::size_t a, std::size_t b, const DiffusionWeights& w);

// sum over cascades and ordered user pairs of s * ||z_j - z_k||^2, with
// delta pairs using min(||z_j - z_k||^2, tau). Cascade user indices are rows
// of zu.
LossGrad diffusion_loss(const Matrix& zu, const CascadeSet& cascades, const DiffusionWeights& w);

// c L_e + (1 - c) L_t. Throws ConfigError unless 0 <= c <= 1.
double joint_objective(double c, double embedding, double task);

}  // namespace latte
