#include <cmath>
#include <random>

#include "doctest.h"
#include "latte/error.hpp"
#include "latte/neuralnet.hpp"
#include "support.hpp"

using namespace latte;

namespace {

double logistic(double a) { return 1.0 / (1.0 + std::exp(-a)); }

// Scalar loops, one neuron at a time, as an independent forward pass.
std::vector<double> dense_forward(const DenseLayer& layer, const std::vector<double>& in) {
  std::vector<double> out(static_cast<std::size_t>(layer.weight.rows()));
  for (Index r = 0; r < layer.weight.rows(); ++r) {
    double acc = layer.bias(r);
    for (Index c = 0; c < layer.weight.cols(); ++c) acc += layer.weight(r, c) * in[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = logistic(acc);
  }
  return out;
}

AutoencoderModel zeroed(std::vector<std::size_t> schedule) {
  AutoencoderModel m(std::move(schedule), 1);
  for (std::size_t k = 0; k < m.depth(); ++k) {
    m.encoder(k).weight.setZero();
    m.decoder(k).weight.setZero();
  }
  return m;
}

// Sparse-ish inputs in [0,1] resembling scaled raw features.
Matrix feature_batch(int rows, int cols, std::mt19937_64& rng) {
  Matrix x = testing::random_matrix(rows, cols, rng, 0.0, 1.0);
  for (Index i = 0; i < x.size(); ++i)
    if (rng() % 3 != 0) x.data()[i] = 0.0;
  return x;
}

}  // namespace

TEST_CASE("encode") {
  SUBCASE("zero weights give one half everywhere") {
    const AutoencoderModel m = zeroed({5, 3, 2});
    CHECK(encode(m, Vector(Vector::Ones(5))) == Vector::Constant(2, 0.5));
    CHECK(decode(m, Vector(Vector::Ones(2))) == Vector::Constant(5, 0.5));
  }
  SUBCASE("single unit") {
    AutoencoderModel m({1, 1}, 3);
    m.encoder(0).weight(0, 0) = 1.0;
    CHECK(encode(m, Vector(Vector::Zero(1)))(0) == 0.5);
  }
  SUBCASE("seeded 4-2-1 net matches a scalar forward pass") {
    AutoencoderModel m({4, 2, 1}, 17);
    m.encoder(0).bias << 0.3, -0.2;
    m.decoder(1).bias << 0.1, 0.4;
    const std::vector<double> x = {1, 0, 1, 0};
    const std::vector<double> z = dense_forward(m.encoder(1), dense_forward(m.encoder(0), x));
    const Vector got = encode(m, Vector{{1.0, 0.0, 1.0, 0.0}});
    CHECK(got(0) == doctest::Approx(z[0]).epsilon(1e-14));

    const std::vector<double> back = dense_forward(m.decoder(0), dense_forward(m.decoder(1), z));
    const Vector xhat = decode(m, got);
    for (int i = 0; i < 4; ++i) CHECK(xhat(i) == doctest::Approx(back[static_cast<std::size_t>(i)]).epsilon(1e-14));
  }
  SUBCASE("shape mismatch") {
    const AutoencoderModel m({4, 2}, 1);
    CHECK_THROWS_AS(encode(m, Vector(Vector::Zero(3))), ShapeError);
    CHECK_THROWS_AS(decode(m, Vector(Vector::Zero(3))), ShapeError);
  }
}

TEST_CASE("forward outputs stay inside the unit interval") {
  std::mt19937_64 rng(5);
  const AutoencoderModel m({30, 12, 6, 3}, 9);
  const Matrix x = testing::random_matrix(40, 30, rng, -50.0, 50.0);
  const ForwardPass pass = forward(m, x);
  CHECK((pass.embedding().array() > 0.0).all());
  CHECK((pass.embedding().array() < 1.0).all());
  CHECK((pass.reconstruction().array() > 0.0).all());
  CHECK((pass.reconstruction().array() < 1.0).all());
  CHECK(pass.reconstruction() == decode(m, encode(m, x)));
}

TEST_CASE("masked loss") {
  SUBCASE("perfect reconstruction") {
    const Vector x{{0.0, 0.3, 1.0}};
    CHECK(masked_loss(x, x, 1000.0) == 0.0);
  }
  SUBCASE("gamma one is squared error") {
    std::mt19937_64 rng(1);
    const Matrix x = testing::random_matrix(4, 6, rng);
    const Matrix y = testing::random_matrix(4, 6, rng);
    CHECK(masked_loss(x, y, 1.0) == doctest::Approx((x - y).squaredNorm()).epsilon(1e-15));
  }
  SUBCASE("hand value") { CHECK(masked_loss(Vector{{1.0, 0.0}}, Vector{{0.5, 0.5}}, 10.0) == 25.25); }
  SUBCASE("batch loss is the sum of row losses") {
    std::mt19937_64 rng(2);
    const Matrix x = feature_batch(7, 5, rng);
    const Matrix y = testing::random_matrix(7, 5, rng, 0.0, 1.0);
    double sum = 0.0;
    for (Index r = 0; r < x.rows(); ++r)
      sum += masked_loss(Vector(x.row(r).transpose()), Vector(y.row(r).transpose()), 7.0);
    CHECK(masked_loss(x, y, 7.0) == doctest::Approx(sum).epsilon(1e-13));
  }
  SUBCASE("mask entries") {
    Matrix x(1, 3);
    x << 0.0, 0.2, 0.0;
    Matrix expected(1, 3);
    expected << 1.0, 1000.0, 1.0;
    CHECK(mask(x, 1000.0) == expected);
  }
}

TEST_CASE("backward matches finite differences") {
  std::mt19937_64 rng(8);
  SUBCASE("single layer, plain squared error") {
    const AutoencoderModel m({6, 3}, 4);
    const Matrix x = feature_batch(5, 6, rng);
    CHECK(grad_check(m, x, Matrix(), 1.0) < 1e-4);
  }
  SUBCASE("deep net with mask and upstream gradient") {
    const AutoencoderModel m({20, 10, 6, 3}, 4);
    const Matrix x = feature_batch(6, 20, rng);
    const Matrix up = testing::random_matrix(6, 3, rng, -2.0, 2.0);
    CHECK(grad_check(m, x, up, 50.0, 1e-5, 0.5) < 1e-4);
  }
  SUBCASE("upstream gradient alone") {
    const AutoencoderModel m({8, 5, 4}, 21);
    const Matrix x = feature_batch(4, 8, rng);
    const Matrix up = testing::random_matrix(4, 4, rng);
    CHECK(grad_check(m, x, up, 10.0, 1e-5, 0.0) < 1e-4);
  }
  SUBCASE("default schedule at a small input width") {
    const AutoencoderModel m(layer_schedule(24, 4), 2);
    const Matrix x = feature_batch(3, 24, rng);
    CHECK(grad_check(m, x, testing::random_matrix(3, 4, rng), 1000.0) < 1e-4);
  }
}

TEST_CASE("numeric gradient equals naive central differences") {
  std::mt19937_64 rng(13);
  const double gamma = 4.0, w = 0.7, eps = 1e-5;
  for (const auto& schedule : {std::vector<std::size_t>{5, 2}, {9, 6, 4, 3}, {7, 5, 2}}) {
    const AutoencoderModel m(schedule, 3);
    const Matrix x = feature_batch(3, static_cast<int>(schedule.front()), rng);
    const Matrix up = testing::random_matrix(3, static_cast<int>(schedule.back()), rng, -1.0, 1.0);
    const Gradients fast = numeric_gradient(m, x, up, gamma, eps, w);

    // Perturbs one parameter of a full model copy and reruns forward().
    auto value = [&](const AutoencoderModel& probe) {
      const ForwardPass pass = forward(probe, x);
      return w * masked_loss(x, pass.reconstruction(), gamma) + up.cwiseProduct(pass.embedding()).sum();
    };
    auto naive = [&](auto slot) {
      AutoencoderModel probe = m;
      double& p = slot(probe);
      const double saved = p;
      p = saved + eps;
      const double hi = value(probe);
      p = saved - eps;
      return (hi - value(probe)) / (2.0 * eps);
    };
    for (std::size_t k = 0; k < m.depth(); ++k) {
      for (Index i = 0; i < m.encoder(k).weight.size(); ++i)
        CHECK(fast.encoder[k].weight.data()[i] ==
              doctest::Approx(naive([&](AutoencoderModel& p) -> double& { return p.encoder(k).weight.data()[i]; }))
                  .epsilon(1e-6));
      for (Index i = 0; i < m.decoder(k).weight.size(); ++i)
        CHECK(fast.decoder[k].weight.data()[i] ==
              doctest::Approx(naive([&](AutoencoderModel& p) -> double& { return p.decoder(k).weight.data()[i]; }))
                  .epsilon(1e-6));
      for (Index i = 0; i < m.encoder(k).bias.size(); ++i)
        CHECK(fast.encoder[k].bias(i) ==
              doctest::Approx(naive([&](AutoencoderModel& p) -> double& { return p.encoder(k).bias(i); })).epsilon(1e-6));
      for (Index i = 0; i < m.decoder(k).bias.size(); ++i)
        CHECK(fast.decoder[k].bias(i) ==
              doctest::Approx(naive([&](AutoencoderModel& p) -> double& { return p.decoder(k).bias(i); })).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(numeric_gradient(AutoencoderModel({4, 2}, 1), Matrix::Zero(2, 4), Matrix::Zero(2, 3), 1.0),
                  ShapeError);
}

TEST_CASE("duplicating a sample doubles its gradient") {
  std::mt19937_64 rng(3);
  const AutoencoderModel m({7, 4, 2}, 6);
  const Matrix one = feature_batch(1, 7, rng);
  Matrix two(2, 7);
  two << one, one;
  const Gradients g1 = backward(m, one, Matrix(), 10.0).grads;
  Gradients g2 = backward(m, two, Matrix(), 10.0).grads;
  Gradients doubled = g1;
  doubled *= 2.0;
  g2 *= -1.0;
  doubled += g2;
  CHECK(doubled.squared_norm() == doctest::Approx(0.0).epsilon(1e-20));
  CHECK(g1.squared_norm() > 0.0);
}

TEST_CASE("backward rejects bad input") {
  const AutoencoderModel m({3, 2}, 1);
  CHECK_THROWS_AS(backward(m, Matrix(0, 3), Matrix(), 1.0), ShapeError);
  CHECK_THROWS_AS(backward(m, Matrix::Zero(2, 3), Matrix::Zero(3, 2), 1.0), ShapeError);
  AutoencoderModel broken = m;
  broken.decoder(0).weight(0, 0) = std::nan("");
  CHECK_THROWS_AS(backward(broken, Matrix::Ones(1, 3), Matrix(), 1.0), NumericError);
}

TEST_CASE("sgd step") {
  std::mt19937_64 rng(12);
  const AutoencoderModel m({10, 5, 3}, 13);
  const Matrix x = feature_batch(8, 10, rng);
  const Gradients g = backward(m, x, Matrix(), 5.0).grads;

  SUBCASE("zero learning rate") {
    AutoencoderModel copy = m;
    sgd_step(copy, g, 0.0);
    CHECK(copy == m);
  }
  SUBCASE("zero gradient") {
    AutoencoderModel copy = m;
    sgd_step(copy, Gradients::zeros_like(m), 0.1);
    CHECK(copy == m);
  }
  SUBCASE("a small step lowers the loss") {
    AutoencoderModel copy = m;
    const double before = masked_loss(x, decode(m, encode(m, x)), 5.0);
    sgd_step(copy, g, 1e-3);
    CHECK(masked_loss(x, decode(copy, encode(copy, x)), 5.0) < before);
  }
  SUBCASE("update rule") {
    AutoencoderModel copy = m;
    sgd_step(copy, g, 0.25);
    CHECK(copy.encoder(0).weight == m.encoder(0).weight - 0.25 * g.encoder[0].weight);
    CHECK(copy.decoder(1).bias == m.decoder(1).bias - 0.25 * g.decoder[1].bias);
  }
}

TEST_CASE("initialization") {
  const AutoencoderModel a({12, 6, 3}, 99);
  const AutoencoderModel b({12, 6, 3}, 99);
  const AutoencoderModel c({12, 6, 3}, 100);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  const double limit = std::sqrt(6.0 / 18.0);
  CHECK(a.encoder(0).weight.cwiseAbs().maxCoeff() <= limit);
  CHECK(a.encoder(0).bias.isZero());
  CHECK(a.parameter_count() == 2 * (12 * 6 + 6 * 3) + 6 + 3 + 12 + 6);
  CHECK_THROWS_AS(AutoencoderModel({5}, 1), ShapeError);
  CHECK_THROWS_AS(AutoencoderModel({5, 0, 2}, 1), ShapeError);
}

TEST_CASE("layer schedule") {
  CHECK(layer_schedule(1000, 4) == std::vector<std::size_t>{1000, 256, 128, 4});
  CHECK(layer_schedule(400, 64) == std::vector<std::size_t>{400, 200, 100, 64});
  CHECK(layer_schedule(100, 64) == std::vector<std::size_t>{100, 64, 64, 64});
}

TEST_CASE("checkpoint round trip") {
  testing::TempDir tmp;
  AutoencoderModel m({9, 4, 2}, 31);
  m.decoder(0).bias(3) = 0.125;
  save_checkpoint(m, tmp / "model.json", {{"epochs", 7}});
  nlohmann::json meta;
  const AutoencoderModel back = load_checkpoint(tmp / "model.json", &meta);
  CHECK(back == m);
  CHECK(meta.at("epochs") == 7);

  testing::write_file(tmp / "bad.json", R"({"format": "latte-autoencoder", "version": 99})");
  CHECK_THROWS_AS(load_checkpoint(tmp / "bad.json"), Error);
  CHECK_THROWS_AS(load_checkpoint(tmp / "missing.json"), Error);
}
