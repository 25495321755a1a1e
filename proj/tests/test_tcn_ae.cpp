#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentinel/tcn_ae.hpp"

using namespace sentinel;

namespace {

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)}); }

TcnAeConfig tiny_config() {
  TcnAeConfig c;
  c.d = 2;
  c.n_filters = 3;
  c.kernel_size = 2;
  c.dilations = {1, 2};
  c.latent_channels = 2;
  c.pool_factor = 2;
  c.dropout_rate = 0.0;
  c.t_train = 16;
  c.batch_size = 2;
  c.n_epochs = 1;
  c.seed = 9;
  return c;
}

Signal2D sine_mix(std::int64_t T, int d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> freq(static_cast<std::size_t>(d)), phase(static_cast<std::size_t>(d));
  for (int c = 0; c < d; ++c) {
    freq[static_cast<std::size_t>(c)] = rng.uniform(0.01, 0.05);
    phase[static_cast<std::size_t>(c)] = rng.uniform(0.0, 6.28);
  }
  Signal2D x(T, d);
  for (std::int64_t t = 0; t < T; ++t)
    for (int c = 0; c < d; ++c)
      x.at(t, c) = std::sin(freq[static_cast<std::size_t>(c)] * static_cast<double>(t) + phase[static_cast<std::size_t>(c)]) +
                   0.01 * rng.uniform(-1.0, 1.0);
  return x;
}

bool params_bitwise_equal(TcnAeModel& a, TcnAeModel& b) {
  const ParamRefs ra = model_params(a);
  const ParamRefs rb = model_params(b);
  if (ra.total != rb.total || ra.ptr.size() != rb.ptr.size()) return false;
  for (std::size_t i = 0; i < ra.ptr.size(); ++i) {
    if (ra.len[i] != rb.len[i]) return false;
    if (std::memcmp(ra.ptr[i], rb.ptr[i], ra.len[i] * sizeof(double)) != 0) return false;
  }
  return true;
}

// Closed-form parameter count for a stack: each filter contributes
// k*d_in*d_out weights plus d_out gains and d_out biases.
std::size_t expected_param_count(const TcnAeConfig& c) {
  const std::size_t L = c.dilations.size();
  auto conv = [](int k, int din, int dout) { return static_cast<std::size_t>(k) * din * dout + 2u * dout; };
  std::size_t n = 0;
  for (std::size_t i = 0; i < L; ++i) {
    const int din = i == 0 ? c.d : c.n_filters;
    n += conv(c.kernel_size, din, c.n_filters) + conv(c.kernel_size, c.n_filters, c.n_filters);
    if (din != c.n_filters) n += conv(1, din, c.n_filters);
  }
  n += conv(1, c.n_filters, c.latent_channels);
  for (std::size_t i = 0; i < L; ++i) {
    const int din = i == 0 ? c.latent_channels : c.n_filters;
    n += conv(c.kernel_size, din, c.n_filters) + conv(c.kernel_size, c.n_filters, c.n_filters);
    if (din != c.n_filters) n += conv(1, din, c.n_filters);
  }
  n += conv(1, c.n_filters, c.d);
  return n;
}

}  // namespace

TEST_CASE("autoencoder shapes: latent is pooled, reconstruction matches the input") {
  TcnAeConfig c = tiny_config();
  c.pool_factor = 4;
  const TcnAeModel m = build_model(c);
  const Signal2D x = sine_mix(23, c.d, 5);

  const Signal2D z = encode(m, x);
  CHECK(z.T == 6);  // ceil(23/4)
  CHECK(z.d == c.latent_channels);

  const Signal2D y = decode(m, z);
  CHECK(y.T == 24);
  CHECK(y.d == c.d);

  const Signal2D xh = reconstruct(m, x);
  CHECK(xh.T == x.T);
  CHECK(xh.d == x.d);
  for (double v : xh.data) CHECK(std::isfinite(v));
}

TEST_CASE("model construction is seed-deterministic") {
  TcnAeModel a = build_model(tiny_config());
  TcnAeModel b = build_model(tiny_config());
  CHECK(params_bitwise_equal(a, b));

  TcnAeConfig c2 = tiny_config();
  c2.seed = 10;
  TcnAeModel c = build_model(c2);
  CHECK(!params_bitwise_equal(a, c));
}

TEST_CASE("residual block with zeroed gains is exactly the identity") {
  TcnAeConfig c = tiny_config();
  c.d = 3;  // equals n_filters: no skip projection in the first block
  TcnAeModel m = build_model(c);
  REQUIRE(!m.encoder_blocks[0].has_skip);
  ResidualBlock blk = m.encoder_blocks[0];
  std::fill(blk.conv1.g.begin(), blk.conv1.g.end(), 0.0);
  std::fill(blk.conv2.g.begin(), blk.conv2.g.end(), 0.0);
  std::fill(blk.conv1.bias.begin(), blk.conv1.bias.end(), 0.0);
  std::fill(blk.conv2.bias.begin(), blk.conv2.bias.end(), 0.0);

  const Signal2D x = sine_mix(40, 3, 2);
  const Signal2D y = residual_block_forward(blk, x);
  CHECK(std::memcmp(y.data.data(), x.data.data(), x.data.size() * sizeof(double)) == 0);
}

TEST_CASE("parameter count matches the closed form and the flat view") {
  TcnAeConfig def;  // library defaults
  TcnAeModel m = build_model(def);
  CHECK(parameter_count(m) == 23908);
  CHECK(parameter_count(m) == expected_param_count(def));
  CHECK(model_params(m).total == parameter_count(m));

  TcnAeConfig c = tiny_config();
  TcnAeModel t = build_model(c);
  CHECK(parameter_count(t) == expected_param_count(c));
  CHECK(flatten_grads(t, make_zero_grads(t)).size() == parameter_count(t));
}

TEST_CASE("end-to-end gradients match finite differences") {
  for (const double rate : {0.0, 0.5}) {
    TcnAeConfig c = tiny_config();
    c.dropout_rate = rate;
    TcnAeModel m = build_model(c);
    const Signal2D w = sine_mix(15, c.d, 3);  // odd length exercises the truncated tail
    const std::uint64_t drop_seed = 77;

    ModelGrads g = make_zero_grads(m);
    const double f0 = training_loss_and_grads(m, w, drop_seed, &g);
    const std::vector<double> flat = flatten_grads(m, g);
    const ParamRefs refs = model_params(m);
    REQUIRE(flat.size() == refs.total);

    const double h = 1e-5;
    std::size_t fi = 0;
    for (std::size_t a = 0; a < refs.ptr.size(); ++a) {
      for (std::size_t i = 0; i < refs.len[a]; ++i, ++fi) {
        double* p = refs.ptr[a] + i;
        const double save = *p;
        *p = save + h;
        const double fp = training_loss_and_grads(m, w, drop_seed, nullptr);
        *p = save - h;
        const double fm = training_loss_and_grads(m, w, drop_seed, nullptr);
        *p = save;
        const double left = (f0 - fm) / h;
        const double right = (fp - f0) / h;
        if (close(left, right, 1e-3)) {
          // Smooth locally: the analytic gradient must match the central quotient.
          CHECK(close(flat[fi], (fp - fm) / (2 * h), 1e-3));
        } else {
          // A ReLU kink sits inside the stencil; the two one-sided slopes
          // bracket every subgradient, so the analytic value must lie between.
          const double lo = std::min(left, right) - 1e-3 * std::max(1.0, std::fabs(left) + std::fabs(right));
          const double hi = std::max(left, right) + 1e-3 * std::max(1.0, std::fabs(left) + std::fabs(right));
          CHECK(flat[fi] >= lo);
          CHECK(flat[fi] <= hi);
        }
      }
    }
  }
}

TEST_CASE("training with zero learning rate leaves parameters untouched") {
  TcnAeConfig c = tiny_config();
  c.learning_rate = 0.0;
  c.n_epochs = 2;
  TcnAeModel m = build_model(c);
  TcnAeModel fresh = build_model(c);
  const Signal2D x = sine_mix(64, c.d, 8);
  train(m, x);
  CHECK(m.loss_history.size() == 2);
  CHECK(params_bitwise_equal(m, fresh));
}

TEST_CASE("training is deterministic and reduces the loss on periodic telemetry") {
  TcnAeConfig c;
  c.d = 3;
  c.n_filters = 8;
  c.kernel_size = 3;
  c.dilations = {1, 2, 4};
  c.latent_channels = 2;
  c.pool_factor = 2;
  c.dropout_rate = 0.1;
  c.t_train = 256;
  c.batch_size = 4;
  c.n_epochs = 10;
  c.seed = 21;
  const Signal2D x = sine_mix(4096, 3, 13);

  TcnAeModel m = build_model(c);
  train(m, x);
  REQUIRE(m.loss_history.size() == 10);
  for (double v : m.loss_history) CHECK(std::isfinite(v));
  CHECK(m.loss_history.back() < m.loss_history.front());

  TcnAeModel m2 = build_model(c);
  train(m2, x);
  CHECK(params_bitwise_equal(m, m2));
  CHECK(m.loss_history == m2.loss_history);
}

TEST_CASE("model files round-trip bit-exactly and reject tampering") {
  TcnAeConfig c = tiny_config();
  c.n_epochs = 2;
  TcnAeModel m = build_model(c);
  train(m, sine_mix(64, c.d, 4));

  const std::string path = "tcn_ae_roundtrip.json";
  save_model(m, path);
  TcnAeModel r = load_model(path);
  CHECK(params_bitwise_equal(m, r));
  CHECK(r.loss_history == m.loss_history);
  CHECK(r.cfg.n_filters == c.n_filters);
  CHECK(r.cfg.dilations == c.dilations);
  CHECK(r.cfg.seed == c.seed);

  // Bump one stored weight without updating the checksum.
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(read_text(path));
  j["params"][0]["values"][0] = j["params"][0]["values"][0].get<double>() + 1.0;
  const std::string tampered = "tcn_ae_tampered.json";
  write_text_atomic(tampered, j.dump(2));
  CHECK_THROWS_AS(load_model(tampered), ValidationError);

  CHECK_THROWS_AS(load_model("does_not_exist.json"), ValidationError);
  std::remove(path.c_str());
  std::remove(tampered.c_str());
}

TEST_CASE("training rejects windows longer than the series") {
  TcnAeConfig c = tiny_config();
  c.t_train = 100;
  TcnAeModel m = build_model(c);
  const Signal2D x = sine_mix(64, c.d, 1);
  CHECK_THROWS_AS(train(m, x), ValidationError);
}
