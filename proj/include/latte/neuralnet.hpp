#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "latte/types.hpp"

namespace latte {

// y = sigmoid(W x + b). Weight is out x in.
struct DenseLayer {
  Matrix weight;
  Vector bias;

  bool operator==(const DenseLayer& o) const { return weight == o.weight && bias == o.bias; }
};

// Sigmoid autoencoder with untied encoder/decoder weights.
//
// The schedule [m_0, m_1, ..., m_o, d] lists the input width, hidden widths
// and embedding width. encoder(k) maps m_k -> m_{k+1}; decoder(k) maps
// m_{k+1} -> m_k, so decoding runs decoder(depth-1) ... decoder(0).
class AutoencoderModel {
 public:
  AutoencoderModel() = default;
  // Glorot-uniform weights, zero biases, drawn from a generator seeded with
  // `seed`.
  AutoencoderModel(std::vector<std::size_t> schedule, std::uint64_t seed);

  const std::vector<std::size_t>& schedule() const { return schedule_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t input_width() const { return schedule_.front(); }
  std::size_t embedding_width() const { return schedule_.back(); }
  // Number of weight matrices per side (o + 1).
  std::size_t depth() const { return encoder_.size(); }
  std::size_t parameter_count() const;

  DenseLayer& encoder(std::size_t k) { return encoder_[k]; }
  const DenseLayer& encoder(std::size_t k) const { return encoder_[k]; }
  DenseLayer& decoder(std::size_t k) { return decoder_[k]; }
  const DenseLayer& decoder(std::size_t k) const { return decoder_[k]; }

  bool all_finite() const;
  bool operator==(const AutoencoderModel&) const = default;

 private:
  std::vector<std::size_t> schedule_;
  std::uint64_t seed_ = 0;
  std::vector<DenseLayer> encoder_;
  std::vector<DenseLayer> decoder_;
};

// Hidden widths for an input of width m_0 and embedding width d:
// [m_0, h_1, h_2, d] with h_1 = clamp(m_0/2, d, 256), h_2 = clamp(m_0/4, d, 128).
std::vector<std::size_t> layer_schedule(std::size_t input_width, std::size_t embedding_width);

// Same layout as the model's parameters.
struct Gradients {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;

  static Gradients zeros_like(const AutoencoderModel& model);
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
  double squared_norm() const;
};

// All activations of one batch pass. Rows are samples.
struct ForwardPass {
  std::vector<Matrix> encoded;  // [X, y^1, ..., y^o, Z]
  std::vector<Matrix> decoded;  // [x_hat, y_hat^1, ..., y_hat^o, Z]

  const Matrix& embedding() const { return encoded.back(); }
  const Matrix& reconstruction() const { return decoded.front(); }
};

ForwardPass forward(const AutoencoderModel& model, const Matrix& x);

Vector encode(const AutoencoderModel& model, const Vector& x);
Matrix encode(const AutoencoderModel& model, const Matrix& x);
Vector decode(const AutoencoderModel& model, const Vector& z);
Matrix decode(const AutoencoderModel& model, const Matrix& z);

// Reconstruction weights: gamma on nonzero inputs, 1 elsewhere.
Matrix mask(const Matrix& x, double gamma);

// sum_j ((x_j - x_hat_j) * c_j)^2 with c built from x and gamma.
double masked_loss(const Vector& x, const Vector& x_hat, double gamma);
double masked_loss(const Matrix& x, const Matrix& x_hat, double gamma);

struct BackwardResult {
  Gradients grads;
  double reconstruction_loss = 0.0;  // unweighted sum over the batch
};

// Exact gradients of
//   recon_weight * sum_i masked_loss(x_i, x_hat_i) + sum_i <upstream_i, z_i>
// with respect to every parameter, summed over the batch rows. `upstream` is
// dL/dZ from embedding-level losses (may be empty = zero). Throws
// NumericError naming the layer if a non-finite value appears.
BackwardResult backward(const AutoencoderModel& model, const Matrix& x, const Matrix& upstream, double gamma,
                        double recon_weight = 1.0);
BackwardResult backward(const AutoencoderModel& model, const ForwardPass& pass, const Matrix& upstream,
                        double gamma, double recon_weight = 1.0);

// theta <- theta - lr * grad
void sgd_step(AutoencoderModel& model, const Gradients& grads, double lr);

// Central differences (step epsilon) of the objective that backward()
// differentiates, one per parameter.
Gradients numeric_gradient(const AutoencoderModel& model, const Matrix& x, const Matrix& upstream, double gamma,
                           double epsilon = 1e-5, double recon_weight = 1.0);

// Max over parameters of |analytic - central difference| / max(1, |a| + |n|)
// for the objective that backward() differentiates.
double grad_check(const AutoencoderModel& model, const Matrix& x, const Matrix& upstream, double gamma,
                  double epsilon = 1e-5, double recon_weight = 1.0);

// JSON checkpoint: format version, schedule, seed and parameter arrays, plus
// an optional caller-defined "meta" object.
nlohmann::json model_to_json(const AutoencoderModel& model);
AutoencoderModel model_from_json(const nlohmann::json& j);
void save_checkpoint(const AutoencoderModel& model, const std::filesystem::path& path,
                     const nlohmann::json& meta = nlohmann::json::object());
AutoencoderModel load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

}  // namespace latte
