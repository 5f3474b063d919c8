#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "dot/network.hpp"

using namespace dot::net;

namespace {

NetworkSpec toy_spec() {
  // #MEAS = 6, 3x3x2 volume, 2 channels, one denoising layer.
  return NetworkSpec::standard(6, 3, 3, 2, 2, 1);
}

NetworkSpec scalar_spec() {
  NetworkSpec s = NetworkSpec::standard(1, 1, 1, 1, 1, 0);
  s.dropout_p = 0.0;
  s.input_noise_sigma = 0.0;
  return s;
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n,
                               double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

double loss_at(const NetworkSpec& spec, const NetworkParams& params,
               const std::vector<double>& input,
               const std::vector<double>& label, std::uint64_t seed) {
  ForwardCache cache;
  network_forward(spec, params, input, Mode::Train, seed, &cache);
  return mse(cache.output, label);
}

}  // namespace

TEST_CASE("parameter counts reproduce the published integers") {
  // Filtered numerical-phantom configuration: 466 inputs, 48x70x16 volume,
  // 64 channels, one denoising layer.
  const NetworkSpec filtered = NetworkSpec::standard(466, 48, 70, 16, 64, 1);
  CHECK(count_fc_params(filtered) == 25105920);
  CHECK(count_params(filtered) == 25219968);
  CHECK(count_params(filtered) - count_fc_params(filtered) ==
        27 * (64 + 64 * 64 + 64));

  // 64->64 denoising layer alone.
  CHECK(std::int64_t(27) * 64 * 64 == 110592);

  // The published unfiltered figure is the fc weight-matrix size (the source
  // omits the bias vector there while including it in the filtered total).
  const NetworkSpec unfiltered = NetworkSpec::standard(2560, 48, 70, 16, 64, 1);
  CHECK(std::int64_t(unfiltered.input_length) * unfiltered.fc_output_size() ==
        137625600);
  CHECK(count_fc_params(unfiltered) ==
        137625600 + unfiltered.fc_output_size());
}

TEST_CASE("standard spec wiring") {
  const NetworkSpec s = NetworkSpec::standard(6, 3, 3, 2, 2, 3);
  REQUIRE(s.conv_layers.size() == 5);
  CHECK(s.conv_layers.front().in_channels == 1);
  CHECK(s.conv_layers.front().out_channels == 2);
  CHECK(s.conv_layers.front().activation == Activation::Tanh);
  for (int l = 1; l <= 3; ++l) {
    CHECK(s.conv_layers[std::size_t(l)].in_channels == 2);
    CHECK(s.conv_layers[std::size_t(l)].out_channels == 2);
  }
  CHECK(s.conv_layers.back().out_channels == 1);
  CHECK(s.conv_layers.back().activation == Activation::Relu);
}

TEST_CASE("fc_forward scalar toy case") {
  const NetworkSpec s = scalar_spec();
  NetworkParams p = xavier_init(s, 1);
  p.fc_w = {2.0};
  p.fc_b = {0.5};
  const auto out = fc_forward(s, p, {1.0});
  REQUIRE(out.size() == 1);
  CHECK(out[0] == doctest::Approx(std::tanh(2.5)).epsilon(1e-12));
  CHECK(out[0] == doctest::Approx(0.98661).epsilon(1e-4));

  p.fc_w = {0.0};
  p.fc_b = {0.0};
  CHECK(fc_forward(s, p, {1.0})[0] == 0.0);
  CHECK_THROWS_AS(fc_forward(s, p, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("conv3d delta kernel is the identity") {
  std::mt19937_64 rng(3);
  const int nx = 4, ny = 4, nz = 3;
  const auto x = random_vec(rng, std::size_t(nx) * ny * nz);
  std::vector<double> filt(27, 0.0);
  filt[13] = 1.0;  // kz = ky = kx = 1 (center tap)
  const auto y = conv3d_forward(x, 1, 1, nx, ny, nz, filt);
  REQUIRE(y.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("conv3d matches a brute-force oracle") {
  std::mt19937_64 rng(5);
  const int nx = 5, ny = 5, nz = 5, cin = 2, cout = 3;
  const std::size_t nvox = std::size_t(nx) * ny * nz;
  const auto x = random_vec(rng, nvox * cin);
  const auto filt = random_vec(rng, std::size_t(27) * cin * cout);

  const auto y = conv3d_forward(x, cin, cout, nx, ny, nz, filt);

  for (int o = 0; o < cout; ++o)
    for (int z = 0; z < nz; ++z)
      for (int yy = 0; yy < ny; ++yy)
        for (int xx = 0; xx < nx; ++xx) {
          double acc = 0.0;
          for (int i = 0; i < cin; ++i)
            for (int kz = 0; kz < 3; ++kz)
              for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx) {
                  const int sz = z + kz - 1, sy = yy + ky - 1, sx = xx + kx - 1;
                  if (sz < 0 || sz >= nz || sy < 0 || sy >= ny || sx < 0 ||
                      sx >= nx)
                    continue;
                  const double w =
                      filt[((std::size_t(o) * cin + i) * 3 + kz) * 9 +
                           std::size_t(ky) * 3 + kx];
                  acc += w * x[std::size_t(i) * nvox +
                               (std::size_t(sz) * ny + sy) * nx + sx];
                }
          const double got =
              y[std::size_t(o) * nvox + (std::size_t(z) * ny + yy) * nx + xx];
          CHECK(got == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("conv3d rejects malformed shapes") {
  std::vector<double> x(8, 0.0), filt(27, 0.0);
  CHECK_THROWS_AS(conv3d_forward(x, 1, 1, 2, 2, 3, filt),
                  std::invalid_argument);
  CHECK_THROWS_AS(conv3d_forward(x, 1, 2, 2, 2, 2, filt),
                  std::invalid_argument);
}

TEST_CASE("network_forward determinism, stochasticity, nonnegativity") {
  std::mt19937_64 rng(7);
  const NetworkSpec s = toy_spec();
  const NetworkParams p = xavier_init(s, 11);
  const auto g = random_vec(rng, 6);

  const auto a = network_forward(s, p, g, Mode::Infer, 1);
  const auto b = network_forward(s, p, g, Mode::Infer, 999);
  CHECK(a == b);  // infer mode ignores the seed entirely
  REQUIRE(a.size() == 18);
  for (double v : a) CHECK(v >= 0.0);

  const auto t1 = network_forward(s, p, g, Mode::Train, 1);
  const auto t2 = network_forward(s, p, g, Mode::Train, 2);
  const auto t1b = network_forward(s, p, g, Mode::Train, 1);
  CHECK(t1 == t1b);
  CHECK(t1 != t2);
}

TEST_CASE("backprop matches central finite differences on the toy net") {
  std::mt19937_64 rng(13);
  const NetworkSpec s = toy_spec();
  NetworkParams p = xavier_init(s, 17);
  const auto g = random_vec(rng, 6);
  const auto label = random_vec(rng, 18, 0.5);
  const std::uint64_t seed = 101;

  ForwardCache cache;
  network_forward(s, p, g, Mode::Train, seed, &cache);
  Gradients grads = zero_gradients(s);
  const double loss = backward(s, p, cache, label, grads);
  CHECK(loss == doctest::Approx(mse(cache.output, label)).epsilon(1e-12));

  const double h = 1e-5;
  double max_rel = 0.0;
  int sampled = 0;
  auto check_block = [&](std::vector<double>& w, const std::vector<double>& gw,
                         int count) {
    for (int k = 0; k < count; ++k) {
      const std::size_t i = rng() % w.size();
      const double save = w[i];
      w[i] = save + h;
      const double lp = loss_at(s, p, g, label, seed);
      w[i] = save - h;
      const double lm = loss_at(s, p, g, label, seed);
      w[i] = save;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = gw[i];
      const double rel =
          std::abs(fd - an) / std::max(1e-6, std::max(std::abs(fd),
                                                      std::abs(an)));
      max_rel = std::max(max_rel, rel);
      ++sampled;
    }
  };
  check_block(p.fc_w, grads.fc_w, 80);
  check_block(p.fc_b, grads.fc_b, 18);
  for (std::size_t l = 0; l < p.conv.size(); ++l)
    check_block(p.conv[l], grads.conv[l], 40);
  CHECK(sampled >= 200);
  CHECK(max_rel < 1e-4);
}

TEST_CASE("label equal to the output zeroes every gradient") {
  std::mt19937_64 rng(19);
  const NetworkSpec s = toy_spec();
  const NetworkParams p = xavier_init(s, 23);
  const auto g = random_vec(rng, 6);
  ForwardCache cache;
  network_forward(s, p, g, Mode::Train, 5, &cache);
  Gradients grads = zero_gradients(s);
  const double loss = backward(s, p, cache, cache.output, grads);
  CHECK(loss == 0.0);
  for (double v : grads.fc_w) CHECK(v == 0.0);
  for (double v : grads.fc_b) CHECK(v == 0.0);
  for (const auto& c : grads.conv)
    for (double v : c) CHECK(v == 0.0);
}

TEST_CASE("fc weight gradient is the outer product of delta and input") {
  std::mt19937_64 rng(29);
  const NetworkSpec s = toy_spec();
  const NetworkParams p = xavier_init(s, 31);
  const auto g = random_vec(rng, 6);
  const auto label = random_vec(rng, 18, 0.5);
  ForwardCache cache;
  network_forward(s, p, g, Mode::Train, 7, &cache);
  Gradients grads = zero_gradients(s);
  backward(s, p, cache, label, grads);
  // grads.fc_b[j] is the delta reaching fc unit j; the weight row follows by
  // the chain rule as delta_j * input.
  for (std::size_t j = 0; j < grads.fc_b.size(); ++j)
    for (std::size_t k = 0; k < 6; ++k)
      CHECK(grads.fc_w[j * 6 + k] ==
            doctest::Approx(grads.fc_b[j] * cache.input[k]).epsilon(1e-12));
}

TEST_CASE("backward requires a forward cache") {
  const NetworkSpec s = toy_spec();
  const NetworkParams p = xavier_init(s, 1);
  Gradients grads = zero_gradients(s);
  ForwardCache empty;
  CHECK_THROWS_AS(backward(s, p, empty, std::vector<double>(18, 0.0), grads),
                  std::logic_error);
}

TEST_CASE("adam single-step hand computation") {
  const NetworkSpec s = scalar_spec();
  NetworkParams p = xavier_init(s, 1);
  p.fc_w = {1.0};
  Gradients g = zero_gradients(s);
  g.fc_w = {0.5};
  AdamState st = AdamState::zero(s);
  adam_step(p, g, st, 1);
  // m_hat = 0.5, v_hat = 0.25 -> w' = 1 - 1e-4 * 0.5/(0.5 + 1e-8).
  CHECK(p.fc_w[0] ==
        doctest::Approx(1.0 - 1e-4 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(p.fc_w[0] == doctest::Approx(0.9999).epsilon(1e-7));
  CHECK_THROWS_AS(adam_step(p, g, st, 0), std::invalid_argument);
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
  const NetworkSpec s = toy_spec();
  NetworkParams p = xavier_init(s, 3);
  const NetworkParams before = p;
  Gradients g = zero_gradients(s);
  AdamState st = AdamState::zero(s);
  adam_step(p, g, st, 1);
  CHECK(p.fc_w == before.fc_w);
  CHECK(p.fc_b == before.fc_b);
  for (std::size_t l = 0; l < p.conv.size(); ++l)
    CHECK(p.conv[l] == before.conv[l]);
}

TEST_CASE("adam first-step magnitude is bounded by the learning rate") {
  std::mt19937_64 rng(37);
  const NetworkSpec s = toy_spec();
  NetworkParams p = xavier_init(s, 41);
  const NetworkParams before = p;
  Gradients g = zero_gradients(s);
  for (double& x : g.fc_w) x = random_vec(rng, 1, 2.0)[0];
  AdamState st = AdamState::zero(s);
  const AdamConfig cfg;
  adam_step(p, g, st, 1, cfg);
  for (std::size_t i = 0; i < p.fc_w.size(); ++i)
    CHECK(std::abs(p.fc_w[i] - before.fc_w[i]) <= cfg.lr * (1.0 + 1e-6));
}

TEST_CASE("xavier initialization statistics") {
  // fc layer with 100 * 10,000 = 1e6 weights.
  const NetworkSpec s = NetworkSpec::standard(100, 20, 20, 25, 2, 1);
  const NetworkParams p = xavier_init(s, 77);
  REQUIRE(p.fc_w.size() == 1000000);
  const double fan_in = 100.0, fan_out = 10000.0;
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  double mean = 0.0;
  for (double v : p.fc_w) {
    CHECK(std::abs(v) <= bound);
    mean += v;
  }
  mean /= double(p.fc_w.size());
  double var = 0.0;
  for (double v : p.fc_w) var += (v - mean) * (v - mean);
  var /= double(p.fc_w.size());
  CHECK(var == doctest::Approx(2.0 / (fan_in + fan_out)).epsilon(0.05));

  for (double b : p.fc_b) CHECK(b == 0.0);

  const NetworkParams q = xavier_init(s, 77);
  CHECK(p.fc_w == q.fc_w);
  CHECK(p.conv[0] == q.conv[0]);
  const NetworkParams r = xavier_init(s, 78);
  CHECK(p.fc_w != r.fc_w);
}

TEST_CASE("inverted dropout preserves the activation expectation") {
  const NetworkSpec s = toy_spec();
  const NetworkParams p = xavier_init(s, 51);
  std::mt19937_64 rng(53);
  const auto g = random_vec(rng, 6);

  double mask_sum = 0.0;
  std::size_t mask_count = 0;
  const double keep_scale = 1.0 / (1.0 - s.dropout_p);
  for (int trial = 0; trial < 6000; ++trial) {
    ForwardCache cache;
    network_forward(s, p, g, Mode::Train, std::uint64_t(trial), &cache);
    for (double m : cache.dropout_mask) {
      CHECK((m == 0.0 || m == doctest::Approx(keep_scale).epsilon(1e-12)));
      mask_sum += m;
      ++mask_count;
    }
  }
  CHECK(mask_count >= 100000);
  CHECK(mask_sum / double(mask_count) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("training loop stopping rules and reproducibility") {
  std::mt19937_64 rng(61);
  const NetworkSpec s = toy_spec();
  std::vector<Sample> train_set, val_set;
  for (int i = 0; i < 12; ++i)
    train_set.push_back({random_vec(rng, 6), random_vec(rng, 18, 0.2)});
  for (int i = 0; i < 4; ++i)
    val_set.push_back({random_vec(rng, 6), random_vec(rng, 18, 0.2)});

  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_epochs = 6;

  SUBCASE("patience zero runs exactly one epoch") {
    cfg.patience = 0;
    const TrainResult r = train(s, train_set, val_set, 7, cfg);
    CHECK(r.train_loss.size() == 1);
    CHECK(r.val_loss.size() == 1);
    CHECK(r.best_epoch == 1);
  }

  SUBCASE("history never exceeds max_epochs") {
    cfg.patience = 100;
    const TrainResult r = train(s, train_set, val_set, 7, cfg);
    CHECK(r.train_loss.size() <= std::size_t(cfg.max_epochs));
    CHECK(r.val_loss.size() == r.train_loss.size());
    CHECK(r.best_val_loss ==
          *std::min_element(r.val_loss.begin(), r.val_loss.end()));
  }

  SUBCASE("fixed seed is bit-reproducible") {
    cfg.patience = 3;
    const TrainResult a = train(s, train_set, val_set, 99, cfg);
    const TrainResult b = train(s, train_set, val_set, 99, cfg);
    CHECK(a.train_loss == b.train_loss);
    CHECK(a.val_loss == b.val_loss);
    CHECK(a.best_params.fc_w == b.best_params.fc_w);
    CHECK(a.best_params.conv == b.best_params.conv);
  }

  SUBCASE("empty sets are rejected") {
    CHECK_THROWS_AS(train(s, {}, val_set, 1, cfg), std::invalid_argument);
    CHECK_THROWS_AS(train(s, train_set, {}, 1, cfg), std::invalid_argument);
  }
}
