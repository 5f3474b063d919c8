#include "dot/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dot/simd/kernels.hpp"

namespace dot::net {

NetworkSpec NetworkSpec::standard(int input_length, int nx, int ny, int nz,
                                  int channels, int denoise_layers,
                                  int fc_channels) {
  NetworkSpec s;
  s.input_length = input_length;
  s.nx = nx;
  s.ny = ny;
  s.nz = nz;
  s.fc_channels = fc_channels;
  s.conv_layers.push_back({fc_channels, channels, Activation::Tanh});
  for (int i = 0; i < denoise_layers; ++i)
    s.conv_layers.push_back({channels, channels, Activation::Tanh});
  s.conv_layers.push_back({channels, 1, Activation::Relu});
  return s;
}

std::int64_t count_fc_params(const NetworkSpec& spec) {
  return (std::int64_t(spec.input_length) + 1) * spec.fc_output_size();
}

std::int64_t count_params(const NetworkSpec& spec) {
  std::int64_t total = count_fc_params(spec);
  for (const auto& l : spec.conv_layers)
    total += 27LL * l.in_channels * l.out_channels;
  return total;
}

NetworkParams xavier_init(const NetworkSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform_fill = [&](std::vector<double>& w, double fan_in,
                          double fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& x : w) x = dist(rng);
  };
  NetworkParams p;
  const std::int64_t out = spec.fc_output_size();
  p.fc_w.resize(std::size_t(out) * spec.input_length);
  p.fc_b.assign(std::size_t(out), 0.0);
  uniform_fill(p.fc_w, double(spec.input_length), double(out));
  for (const auto& l : spec.conv_layers) {
    std::vector<double> w(std::size_t(27) * l.in_channels * l.out_channels);
    uniform_fill(w, 27.0 * l.in_channels, 27.0 * l.out_channels);
    p.conv.push_back(std::move(w));
  }
  return p;
}

Gradients zero_gradients(const NetworkSpec& spec) {
  Gradients g;
  g.fc_w.assign(std::size_t(spec.fc_output_size()) * spec.input_length, 0.0);
  g.fc_b.assign(std::size_t(spec.fc_output_size()), 0.0);
  for (const auto& l : spec.conv_layers)
    g.conv.emplace_back(std::size_t(27) * l.in_channels * l.out_channels, 0.0);
  return g;
}

void Gradients::scale(double s) {
  simd::scale(s, fc_w.data(), fc_w.size());
  simd::scale(s, fc_b.data(), fc_b.size());
  for (auto& c : conv) simd::scale(s, c.data(), c.size());
}

void Gradients::accumulate(const Gradients& other) {
  simd::axpy(1.0, other.fc_w.data(), fc_w.data(), fc_w.size());
  simd::axpy(1.0, other.fc_b.data(), fc_b.data(), fc_b.size());
  for (std::size_t i = 0; i < conv.size(); ++i)
    simd::axpy(1.0, other.conv[i].data(), conv[i].data(), conv[i].size());
}

std::vector<double> fc_forward(const NetworkSpec& spec,
                               const NetworkParams& params,
                               const std::vector<double>& g) {
  if (int(g.size()) != spec.input_length)
    throw std::invalid_argument("fc_forward: input length mismatch");
  const std::size_t out = std::size_t(spec.fc_output_size());
  std::vector<double> y = params.fc_b;
  simd::gemv(params.fc_w.data(), g.data(), y.data(), out,
             std::size_t(spec.input_length));
  for (double& v : y) v = std::tanh(v);
  return y;
}

namespace {

// Accumulate one shifted filter tap: out_plane += w * in_plane shifted by
// (dz, dy, dx) with zero padding. Rows along x are contiguous.
void conv_tap(const double* in, double* out, int nx, int ny, int nz, int dz,
              int dy, int dx, double w) {
  const int x_lo = std::max(0, -dx), x_hi = std::min(nx, nx - dx);
  if (x_hi <= x_lo) return;
  const int len = x_hi - x_lo;
  for (int z = std::max(0, -dz); z < std::min(nz, nz - dz); ++z)
    for (int y = std::max(0, -dy); y < std::min(ny, ny - dy); ++y) {
      const double* src =
          in + (std::size_t(z + dz) * ny + (y + dy)) * nx + (x_lo + dx);
      double* dst = out + (std::size_t(z) * ny + y) * nx + x_lo;
      simd::axpy(w, src, dst, std::size_t(len));
    }
}

inline std::size_t filter_index(int o, int i, int cin, int kz, int ky, int kx) {
  return ((std::size_t(o) * cin + i) * 3 + kz) * 9 + std::size_t(ky) * 3 + kx;
}

}  // namespace

std::vector<double> conv3d_forward(const std::vector<double>& x, int cin,
                                   int cout, int nx, int ny, int nz,
                                   const std::vector<double>& filters) {
  const std::size_t nvox = std::size_t(nx) * ny * nz;
  if (x.size() != nvox * cin)
    throw std::invalid_argument("conv3d_forward: input shape mismatch");
  if (filters.size() != std::size_t(27) * cin * cout)
    throw std::invalid_argument("conv3d_forward: filter bank size mismatch");
  std::vector<double> y(nvox * cout, 0.0);
  for (int o = 0; o < cout; ++o)
    for (int i = 0; i < cin; ++i)
      for (int kz = 0; kz < 3; ++kz)
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx)
            conv_tap(x.data() + std::size_t(i) * nvox,
                     y.data() + std::size_t(o) * nvox, nx, ny, nz, kz - 1,
                     ky - 1, kx - 1,
                     filters[filter_index(o, i, cin, kz, ky, kx)]);
  return y;
}

namespace {

// dL/dx given dL/dy: correlation with the flipped kernel.
void conv3d_backward_input(const std::vector<double>& dy, int cin, int cout,
                           int nx, int ny, int nz,
                           const std::vector<double>& filters,
                           std::vector<double>& dx) {
  const std::size_t nvox = std::size_t(nx) * ny * nz;
  dx.assign(nvox * cin, 0.0);
  for (int o = 0; o < cout; ++o)
    for (int i = 0; i < cin; ++i)
      for (int kz = 0; kz < 3; ++kz)
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx)
            conv_tap(dy.data() + std::size_t(o) * nvox,
                     dx.data() + std::size_t(i) * nvox, nx, ny, nz, 1 - kz,
                     1 - ky, 1 - kx,
                     filters[filter_index(o, i, cin, kz, ky, kx)]);
}

void conv3d_backward_filters(const std::vector<double>& x,
                             const std::vector<double>& dy, int cin, int cout,
                             int nx, int ny, int nz, std::vector<double>& dw) {
  const std::size_t nvox = std::size_t(nx) * ny * nz;
  for (int o = 0; o < cout; ++o)
    for (int i = 0; i < cin; ++i)
      for (int kz = 0; kz < 3; ++kz)
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            const int dz = kz - 1, dyo = ky - 1, dxo = kx - 1;
            const int x_lo = std::max(0, -dxo), x_hi = std::min(nx, nx - dxo);
            if (x_hi <= x_lo) continue;
            double acc = 0.0;
            for (int z = std::max(0, -dz); z < std::min(nz, nz - dz); ++z)
              for (int y = std::max(0, -dyo); y < std::min(ny, ny - dyo); ++y) {
                const double* xin = x.data() + std::size_t(i) * nvox +
                                    (std::size_t(z + dz) * ny + (y + dyo)) * nx +
                                    (x_lo + dxo);
                const double* dyp = dy.data() + std::size_t(o) * nvox +
                                    (std::size_t(z) * ny + y) * nx + x_lo;
                acc += simd::dot(xin, dyp, std::size_t(x_hi - x_lo));
              }
            dw[filter_index(o, i, cin, kz, ky, kx)] += acc;
          }
}

}  // namespace

std::vector<double> network_forward(const NetworkSpec& spec,
                                    const NetworkParams& params,
                                    const std::vector<double>& g, Mode mode,
                                    std::uint64_t rng_seed,
                                    ForwardCache* cache) {
  if (spec.conv_layers.empty() ||
      spec.conv_layers.front().in_channels != spec.fc_channels ||
      spec.conv_layers.back().out_channels != 1)
    throw std::invalid_argument("network_forward: malformed spec");

  std::mt19937_64 rng(rng_seed);
  std::vector<double> input = g;
  if (mode == Mode::Train && spec.input_noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.input_noise_sigma);
    for (double& v : input) v += noise(rng);
  }

  std::vector<double> act = fc_forward(spec, params, input);
  std::vector<double> fc_act = act;

  std::vector<double> mask;
  if (mode == Mode::Train && spec.dropout_p > 0.0) {
    const double keep = 1.0 - spec.dropout_p;
    std::bernoulli_distribution drop(spec.dropout_p);
    mask.resize(act.size());
    for (std::size_t i = 0; i < act.size(); ++i) {
      mask[i] = drop(rng) ? 0.0 : 1.0 / keep;
      act[i] *= mask[i];
    }
  }

  if (cache) {
    cache->input = input;
    cache->fc_act = std::move(fc_act);
    cache->dropout_mask = std::move(mask);
    cache->conv_in.clear();
    cache->conv_pre.clear();
  }

  for (const auto& layer : spec.conv_layers) {
    if (cache) cache->conv_in.push_back(act);
    std::vector<double> pre = conv3d_forward(
        act, layer.in_channels, layer.out_channels, spec.nx, spec.ny, spec.nz,
        params.conv[std::size_t(&layer - spec.conv_layers.data())]);
    if (cache) cache->conv_pre.push_back(pre);
    if (layer.activation == Activation::Tanh)
      for (double& v : pre) v = std::tanh(v);
    else
      for (double& v : pre) v = std::max(0.0, v);
    act = std::move(pre);
  }

  if (cache) cache->output = act;
  return act;
}

double mse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("mse: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / double(a.size());
}

double backward(const NetworkSpec& spec, const NetworkParams& params,
                const ForwardCache& cache,
                const std::vector<double>& label_weighted, Gradients& grads) {
  if (cache.conv_pre.size() != spec.conv_layers.size() || cache.output.empty())
    throw std::logic_error("backward: forward cache missing");
  const std::size_t nvox = std::size_t(spec.voxel_count());
  if (label_weighted.size() != nvox)
    throw std::invalid_argument("backward: label shape mismatch");

  const double loss = mse(cache.output, label_weighted);

  // dL/d(output)
  std::vector<double> delta(nvox);
  for (std::size_t i = 0; i < nvox; ++i)
    delta[i] = 2.0 * (cache.output[i] - label_weighted[i]) / double(nvox);

  for (int l = int(spec.conv_layers.size()) - 1; l >= 0; --l) {
    const auto& layer = spec.conv_layers[std::size_t(l)];
    const auto& pre = cache.conv_pre[std::size_t(l)];
    // Activation derivative applied to the pre-activation.
    if (layer.activation == Activation::Tanh) {
      for (std::size_t i = 0; i < delta.size(); ++i) {
        const double t = std::tanh(pre[i]);
        delta[i] *= 1.0 - t * t;
      }
    } else {
      for (std::size_t i = 0; i < delta.size(); ++i)
        if (pre[i] <= 0.0) delta[i] = 0.0;
    }
    conv3d_backward_filters(cache.conv_in[std::size_t(l)], delta,
                            layer.in_channels, layer.out_channels, spec.nx,
                            spec.ny, spec.nz, grads.conv[std::size_t(l)]);
    std::vector<double> dx;
    conv3d_backward_input(delta, layer.in_channels, layer.out_channels, spec.nx,
                          spec.ny, spec.nz, params.conv[std::size_t(l)], dx);
    delta = std::move(dx);
  }

  // Through dropout, then tanh of the fc layer.
  if (!cache.dropout_mask.empty())
    for (std::size_t i = 0; i < delta.size(); ++i)
      delta[i] *= cache.dropout_mask[i];
  for (std::size_t i = 0; i < delta.size(); ++i)
    delta[i] *= 1.0 - cache.fc_act[i] * cache.fc_act[i];

  simd::axpy(1.0, delta.data(), grads.fc_b.data(), delta.size());
  const std::size_t meas = std::size_t(spec.input_length);
  for (std::size_t j = 0; j < delta.size(); ++j)
    simd::axpy(delta[j], cache.input.data(), grads.fc_w.data() + j * meas,
               meas);
  return loss;
}

AdamState AdamState::zero(const NetworkSpec& spec) {
  return {zero_gradients(spec), zero_gradients(spec)};
}

namespace {

void adam_update(std::vector<double>& w, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v, int t,
                 const AdamConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace

void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               int t, const AdamConfig& cfg) {
  if (t < 1) throw std::invalid_argument("adam_step: t must be >= 1");
  adam_update(params.fc_w, grads.fc_w, state.m.fc_w, state.v.fc_w, t, cfg);
  adam_update(params.fc_b, grads.fc_b, state.m.fc_b, state.v.fc_b, t, cfg);
  for (std::size_t l = 0; l < params.conv.size(); ++l)
    adam_update(params.conv[l], grads.conv[l], state.m.conv[l],
                state.v.conv[l], t, cfg);
}

TrainResult train(const NetworkSpec& spec, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, std::uint64_t seed,
                  const TrainConfig& cfg) {
  if (train_set.empty() || val_set.empty())
    throw std::invalid_argument("train: empty dataset");

  std::mt19937_64 shuffle_rng(seed);
  NetworkParams params = xavier_init(spec, seed ^ 0x9e3779b97f4a7c15ULL);
  AdamState adam = AdamState::zero(spec);

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  int t = 0;
  int since_best = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t(0));

  auto validate = [&]() {
    double acc = 0.0;
    for (std::size_t i = 0; i < val_set.size(); ++i) {
      const auto out = network_forward(spec, params, val_set[i].input,
                                       Mode::Infer, 0);
      acc += mse(out, val_set[i].label);
    }
    return acc / double(val_set.size());
  };

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double train_acc = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += std::size_t(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + std::size_t(cfg.batch_size));
      Gradients batch_grads = zero_gradients(spec);
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = train_set[order[k]];
        ForwardCache cache;
        const std::uint64_t sample_seed =
            seed + 0x100000001ULL * (std::uint64_t(epoch) << 20 | order[k]);
        network_forward(spec, params, s.input, Mode::Train, sample_seed,
                        &cache);
        train_acc += backward(spec, params, cache, s.label, batch_grads);
      }
      batch_grads.scale(1.0 / double(end - start));
      adam_step(params, batch_grads, adam, ++t, cfg.adam);
      seen += end - start;
    }
    result.train_loss.push_back(train_acc / double(seen));
    const double val = validate();
    result.val_loss.push_back(val);
    if (cfg.verbose)
      std::fprintf(stderr, "epoch %d train %.6g val %.6g\n", epoch,
                   result.train_loss.back(), val);
    if (val < result.best_val_loss) {
      result.best_val_loss = val;
      result.best_epoch = epoch;
      result.best_params = params;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= cfg.patience) break;
  }
  return result;
}

}  // namespace dot::net
