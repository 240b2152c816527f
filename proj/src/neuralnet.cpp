#include "latte/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "latte/error.hpp"

namespace latte {

namespace {

constexpr int kCheckpointVersion = 1;

Matrix sigmoid(const Matrix& a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

// Rows of `in` through sigmoid(in W^T + b).
Matrix apply_layer(const DenseLayer& layer, const Matrix& in) {
  Matrix pre = in * layer.weight.transpose();
  pre.rowwise() += layer.bias.transpose();
  return sigmoid(pre);
}

DenseLayer zero_layer(Index out, Index in) {
  return {Matrix::Zero(out, in), Vector::Zero(out)};
}

void require_width(const Matrix& m, std::size_t width, const char* what) {
  if (static_cast<std::size_t>(m.cols()) != width)
    throw ShapeError(std::string(what) + " has " + std::to_string(m.cols()) + " columns, expected " +
                     std::to_string(width));
}

}  // namespace

AutoencoderModel::AutoencoderModel(std::vector<std::size_t> schedule, std::uint64_t seed)
    : schedule_(std::move(schedule)), seed_(seed) {
  if (schedule_.size() < 2) throw ShapeError("layer schedule needs at least input and embedding widths");
  for (std::size_t w : schedule_) {
    if (w == 0) throw ShapeError("layer widths must be positive");
  }
  std::mt19937_64 rng(seed);
  const std::size_t layers = schedule_.size() - 1;
  auto glorot = [&rng](Index out, Index in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(out, in);
    // Fill row-major so the draw order does not depend on Eigen's storage.
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c) w(r, c) = dist(rng);
    return w;
  };
  for (std::size_t k = 0; k < layers; ++k) {
    const auto in = static_cast<Index>(schedule_[k]);
    const auto out = static_cast<Index>(schedule_[k + 1]);
    encoder_.push_back({glorot(out, in), Vector::Zero(out)});
  }
  for (std::size_t k = 0; k < layers; ++k) {
    const auto in = static_cast<Index>(schedule_[k + 1]);
    const auto out = static_cast<Index>(schedule_[k]);
    decoder_.push_back({glorot(out, in), Vector::Zero(out)});
  }
}

std::size_t AutoencoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : encoder_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  for (const auto& l : decoder_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool AutoencoderModel::all_finite() const {
  auto finite = [](const DenseLayer& l) { return l.weight.allFinite() && l.bias.allFinite(); };
  return std::all_of(encoder_.begin(), encoder_.end(), finite) &&
         std::all_of(decoder_.begin(), decoder_.end(), finite);
}

std::vector<std::size_t> layer_schedule(std::size_t input_width, std::size_t embedding_width) {
  const std::size_t h1 = std::clamp<std::size_t>(input_width / 2, embedding_width, std::max<std::size_t>(256, embedding_width));
  const std::size_t h2 = std::clamp<std::size_t>(input_width / 4, embedding_width, std::max<std::size_t>(128, embedding_width));
  return {input_width, h1, h2, embedding_width};
}

Gradients Gradients::zeros_like(const AutoencoderModel& model) {
  Gradients g;
  for (std::size_t k = 0; k < model.depth(); ++k) {
    g.encoder.push_back(zero_layer(model.encoder(k).weight.rows(), model.encoder(k).weight.cols()));
    g.decoder.push_back(zero_layer(model.decoder(k).weight.rows(), model.decoder(k).weight.cols()));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t k = 0; k < encoder.size(); ++k) {
    encoder[k].weight += other.encoder[k].weight;
    encoder[k].bias += other.encoder[k].bias;
    decoder[k].weight += other.decoder[k].weight;
    decoder[k].bias += other.decoder[k].bias;
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (std::size_t k = 0; k < encoder.size(); ++k) {
    encoder[k].weight *= s;
    encoder[k].bias *= s;
    decoder[k].weight *= s;
    decoder[k].bias *= s;
  }
  return *this;
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (std::size_t k = 0; k < encoder.size(); ++k) {
    s += encoder[k].weight.squaredNorm() + encoder[k].bias.squaredNorm();
    s += decoder[k].weight.squaredNorm() + decoder[k].bias.squaredNorm();
  }
  return s;
}

ForwardPass forward(const AutoencoderModel& model, const Matrix& x) {
  require_width(x, model.input_width(), "input");
  const std::size_t depth = model.depth();
  ForwardPass pass;
  pass.encoded.reserve(depth + 1);
  pass.encoded.push_back(x);
  for (std::size_t k = 0; k < depth; ++k) pass.encoded.push_back(apply_layer(model.encoder(k), pass.encoded.back()));

  pass.decoded.resize(depth + 1);
  pass.decoded[depth] = pass.encoded.back();
  for (std::size_t k = depth; k-- > 0;) pass.decoded[k] = apply_layer(model.decoder(k), pass.decoded[k + 1]);
  return pass;
}

Matrix encode(const AutoencoderModel& model, const Matrix& x) {
  require_width(x, model.input_width(), "input");
  Matrix h = x;
  for (std::size_t k = 0; k < model.depth(); ++k) h = apply_layer(model.encoder(k), h);
  return h;
}

Vector encode(const AutoencoderModel& model, const Vector& x) {
  return encode(model, Matrix(x.transpose())).row(0).transpose();
}

Matrix decode(const AutoencoderModel& model, const Matrix& z) {
  require_width(z, model.embedding_width(), "embedding");
  Matrix h = z;
  for (std::size_t k = model.depth(); k-- > 0;) h = apply_layer(model.decoder(k), h);
  return h;
}

Vector decode(const AutoencoderModel& model, const Vector& z) {
  return decode(model, Matrix(z.transpose())).row(0).transpose();
}

Matrix mask(const Matrix& x, double gamma) {
  return (x.array() != 0.0).select(Matrix::Constant(x.rows(), x.cols(), gamma), 1.0);
}

double masked_loss(const Matrix& x, const Matrix& x_hat, double gamma) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) throw ShapeError("masked_loss: shape mismatch");
  return ((x - x_hat).cwiseProduct(mask(x, gamma))).squaredNorm();
}

double masked_loss(const Vector& x, const Vector& x_hat, double gamma) {
  return masked_loss(Matrix(x), Matrix(x_hat), gamma);
}

BackwardResult backward(const AutoencoderModel& model, const Matrix& x, const Matrix& upstream, double gamma,
                        double recon_weight) {
  return backward(model, forward(model, x), upstream, gamma, recon_weight);
}

BackwardResult backward(const AutoencoderModel& model, const ForwardPass& pass, const Matrix& upstream,
                        double gamma, double recon_weight) {
  const Matrix& x = pass.encoded.front();
  if (x.rows() == 0) throw ShapeError("backward: empty batch");
  const std::size_t depth = model.depth();
  const Matrix& z = pass.embedding();
  if (upstream.size() != 0 && (upstream.rows() != z.rows() || upstream.cols() != z.cols()))
    throw ShapeError("backward: upstream gradient shape does not match embeddings");

  BackwardResult out;
  out.grads = Gradients::zeros_like(model);

  const Matrix c = mask(x, gamma);
  const Matrix c2 = c.cwiseProduct(c);
  const Matrix err = x - pass.reconstruction();
  out.reconstruction_loss = err.cwiseProduct(c).squaredNorm();

  auto check = [](const Matrix& m, const char* side, std::size_t layer) {
    if (!m.allFinite())
      throw NumericError(std::string("non-finite gradient at ") + side + " layer " + std::to_string(layer + 1));
  };

  // d/d x_hat of the weighted reconstruction loss.
  Matrix grad = (-2.0 * recon_weight) * err.cwiseProduct(c2);
  for (std::size_t k = 0; k < depth; ++k) {
    const Matrix& y = pass.decoded[k];
    const Matrix delta = grad.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
    check(delta, "decoder", k);
    out.grads.decoder[k].weight = delta.transpose() * pass.decoded[k + 1];
    out.grads.decoder[k].bias = delta.colwise().sum().transpose();
    grad = delta * model.decoder(k).weight;
  }
  if (upstream.size() != 0) grad += upstream;
  for (std::size_t k = depth; k-- > 0;) {
    const Matrix& y = pass.encoded[k + 1];
    const Matrix delta = grad.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
    check(delta, "encoder", k);
    out.grads.encoder[k].weight = delta.transpose() * pass.encoded[k];
    out.grads.encoder[k].bias = delta.colwise().sum().transpose();
    if (k > 0) grad = delta * model.encoder(k).weight;
  }
  return out;
}

void sgd_step(AutoencoderModel& model, const Gradients& grads, double lr) {
  if (grads.encoder.size() != model.depth() || grads.decoder.size() != model.depth())
    throw ShapeError("sgd_step: gradient depth mismatch");
  for (std::size_t k = 0; k < model.depth(); ++k) {
    model.encoder(k).weight -= lr * grads.encoder[k].weight;
    model.encoder(k).bias -= lr * grads.encoder[k].bias;
    model.decoder(k).weight -= lr * grads.decoder[k].weight;
    model.decoder(k).bias -= lr * grads.decoder[k].bias;
  }
}

Gradients numeric_gradient(const AutoencoderModel& model, const Matrix& x, const Matrix& upstream, double gamma,
                           double epsilon, double recon_weight) {
  require_width(x, model.input_width(), "input");
  if (upstream.size() != 0 && (upstream.rows() != x.rows() || upstream.cols() != static_cast<Index>(model.embedding_width())))
    throw ShapeError("numeric_gradient: upstream gradient shape does not match embeddings");
  const std::size_t depth = model.depth();

  // Encoder then decoder as one chain of 2 * depth layers. Perturbing a
  // parameter of layer l moves a single output unit of that layer, so the
  // next layer takes a rank-one update and only the layers after it are
  // recomputed from cached activations.
  std::vector<const DenseLayer*> chain;
  for (std::size_t k = 0; k < depth; ++k) chain.push_back(&model.encoder(k));
  for (std::size_t k = depth; k-- > 0;) chain.push_back(&model.decoder(k));
  std::vector<Matrix> act{x}, pre;
  for (const DenseLayer* layer : chain) {
    pre.push_back((act.back() * layer->weight.transpose()).rowwise() + layer->bias.transpose());
    act.push_back(sigmoid(pre.back()));
  }

  struct Outputs {
    Matrix z;  // empty when the perturbed layer lies past the embedding
    Matrix x_hat;
  };
  // Activations with unit `unit` of layer l driven by pre-activation `column`.
  auto propagate = [&](std::size_t l, Index unit, const Matrix& column) {
    Outputs out;
    const Matrix moved = sigmoid(column);
    Matrix h;
    std::size_t next = l + 1;
    if (next == chain.size()) {
      h = act[next];
      h.col(unit) = moved;
    } else {
      if (next == depth) {
        out.z = act[next];
        out.z.col(unit) = moved;
      }
      h = sigmoid(pre[next] + (moved - act[next].col(unit)) * chain[next]->weight.col(unit).transpose());
      ++next;
    }
    for (std::size_t m = next; m < chain.size(); ++m) {
      if (m == depth) out.z = h;
      h = apply_layer(*chain[m], h);
    }
    out.x_hat = std::move(h);
    return out;
  };

  // The two objective values are large next to their difference, so the
  // difference is formed term by term: (x - a)^2 - (x - b)^2 = (b - a)(2x - a - b).
  const Matrix c2 = mask(x, gamma).array().square().matrix();
  auto central_difference = [&](const Outputs& up, const Outputs& down) {
    double diff = recon_weight * (c2.array() * (down.x_hat - up.x_hat).array() *
                                  (2.0 * x - up.x_hat - down.x_hat).array()).sum();
    if (upstream.size() != 0 && up.z.size() != 0) diff += upstream.cwiseProduct(up.z - down.z).sum();
    return diff / (2.0 * epsilon);
  };

  Gradients numeric = Gradients::zeros_like(model);
  for (std::size_t l = 0; l < chain.size(); ++l) {
    const bool encoder_side = l < depth;
    const std::size_t k = encoder_side ? l : 2 * depth - 1 - l;
    DenseLayer& g = encoder_side ? numeric.encoder[k] : numeric.decoder[k];
    for (Index unit = 0; unit < g.weight.rows(); ++unit) {
      const Matrix base = pre[l].col(unit);
      for (Index in = 0; in < g.weight.cols(); ++in) {
        const Matrix step = epsilon * act[l].col(in);
        g.weight(unit, in) = central_difference(propagate(l, unit, base + step), propagate(l, unit, base - step));
      }
      const Matrix shift = Matrix::Constant(base.rows(), 1, epsilon);
      g.bias(unit) = central_difference(propagate(l, unit, base + shift), propagate(l, unit, base - shift));
    }
  }
  return numeric;
}

double grad_check(const AutoencoderModel& model, const Matrix& x, const Matrix& upstream, double gamma,
                  double epsilon, double recon_weight) {
  const Gradients analytic = backward(model, x, upstream, gamma, recon_weight).grads;
  const Gradients numeric = numeric_gradient(model, x, upstream, gamma, epsilon, recon_weight);
  double worst = 0.0;
  auto compare = [&worst](const Matrix& a, const Matrix& n) {
    const Matrix scale = (a.cwiseAbs() + n.cwiseAbs()).cwiseMax(1.0);
    worst = std::max(worst, ((a - n).cwiseAbs().array() / scale.array()).maxCoeff());
  };
  for (std::size_t k = 0; k < model.depth(); ++k) {
    compare(analytic.encoder[k].weight, numeric.encoder[k].weight);
    compare(analytic.encoder[k].bias, numeric.encoder[k].bias);
    compare(analytic.decoder[k].weight, numeric.decoder[k].weight);
    compare(analytic.decoder[k].bias, numeric.decoder[k].bias);
  }
  return worst;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, Index rows, Index cols) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) throw Error("checkpoint: bad matrix row count");
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto row = j[static_cast<std::size_t>(r)].get<std::vector<double>>();
    if (static_cast<Index>(row.size()) != cols) throw Error("checkpoint: bad matrix column count");
    for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

nlohmann::json layer_to_json(const DenseLayer& l) {
  return {{"weight", matrix_to_json(l.weight)},
          {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}};
}

void layer_from_json(const nlohmann::json& j, DenseLayer& l) {
  l.weight = matrix_from_json(j.at("weight"), l.weight.rows(), l.weight.cols());
  const auto bias = j.at("bias").get<std::vector<double>>();
  if (static_cast<Index>(bias.size()) != l.bias.size()) throw Error("checkpoint: bad bias length");
  l.bias = Eigen::Map<const Vector>(bias.data(), static_cast<Index>(bias.size()));
}

}  // namespace

nlohmann::json model_to_json(const AutoencoderModel& model) {
  nlohmann::json j;
  j["format"] = "latte-autoencoder";
  j["version"] = kCheckpointVersion;
  j["schedule"] = model.schedule();
  j["seed"] = model.seed();
  j["encoder"] = nlohmann::json::array();
  j["decoder"] = nlohmann::json::array();
  for (std::size_t k = 0; k < model.depth(); ++k) {
    j["encoder"].push_back(layer_to_json(model.encoder(k)));
    j["decoder"].push_back(layer_to_json(model.decoder(k)));
  }
  return j;
}

AutoencoderModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "latte-autoencoder") throw Error("checkpoint: unknown format");
    if (j.at("version").get<int>() != kCheckpointVersion) throw Error("checkpoint: unsupported version");
    AutoencoderModel model(j.at("schedule").get<std::vector<std::size_t>>(), j.at("seed").get<std::uint64_t>());
    if (j.at("encoder").size() != model.depth() || j.at("decoder").size() != model.depth())
      throw Error("checkpoint: layer count does not match schedule");
    for (std::size_t k = 0; k < model.depth(); ++k) {
      layer_from_json(j["encoder"][k], model.encoder(k));
      layer_from_json(j["decoder"][k], model.decoder(k));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const AutoencoderModel& model, const std::filesystem::path& path, const nlohmann::json& meta) {
  nlohmann::json j = model_to_json(model);
  j["meta"] = meta;
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

AutoencoderModel load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("checkpoint: ") + e.what());
  }
  if (meta) *meta = j.value("meta", nlohmann::json::object());
  return model_from_json(j);
}

}  // namespace latte
