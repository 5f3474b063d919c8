#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dot::net {

enum class Activation { Tanh, Relu };

struct ConvLayerSpec {
  int in_channels = 1;
  int out_channels = 1;
  Activation activation = Activation::Tanh;
};

/// Fully connected inversion layer followed by a 3D convolutional
/// encoder / denoiser / decoder chain. Kernels are 3x3x3, stride 1, zero
/// padded, no conv bias.
struct NetworkSpec {
  int input_length = 0;  // #MEAS
  int nx = 0, ny = 0, nz = 0;
  int fc_channels = 1;
  std::vector<ConvLayerSpec> conv_layers;
  double dropout_p = 0.7;
  double input_noise_sigma = 0.2;

  /// fc -> [encoder ch->r] -> denoise_layers x [r->r] -> [decoder r->1, relu].
  static NetworkSpec standard(int input_length, int nx, int ny, int nz,
                              int channels, int denoise_layers = 1,
                              int fc_channels = 1);

  std::int64_t voxel_count() const {
    return std::int64_t(nx) * ny * nz;
  }
  std::int64_t fc_output_size() const { return voxel_count() * fc_channels; }
};

std::int64_t count_params(const NetworkSpec& spec);
std::int64_t count_fc_params(const NetworkSpec& spec);

struct NetworkParams {
  // fc weights row-major: row = output unit (channel-major over the volume),
  // column = measurement index.
  std::vector<double> fc_w;
  std::vector<double> fc_b;
  // Per layer, index (((o * Cin + i) * 3 + kz) * 3 + ky) * 3 + kx.
  std::vector<std::vector<double>> conv;
};

struct Gradients {
  std::vector<double> fc_w;
  std::vector<double> fc_b;
  std::vector<std::vector<double>> conv;
  void scale(double s);
  void accumulate(const Gradients& other);
};

NetworkParams xavier_init(const NetworkSpec& spec, std::uint64_t seed);
Gradients zero_gradients(const NetworkSpec& spec);

enum class Mode { Train, Infer };

/// Per-sample forward cache for backprop.
struct ForwardCache {
  std::vector<double> input;            // (possibly noise-corrupted) input
  std::vector<double> fc_act;           // tanh(W g + b), before dropout
  std::vector<double> dropout_mask;     // inverted-dropout scale per unit
  std::vector<std::vector<double>> conv_in;   // activations entering each conv
  std::vector<std::vector<double>> conv_pre;  // pre-activation conv outputs
  std::vector<double> output;           // final (nx*ny*nz) volume
};

/// fc layer alone: tanh(W g + b), channel-major volume layout.
std::vector<double> fc_forward(const NetworkSpec& spec,
                               const NetworkParams& params,
                               const std::vector<double>& g);

/// One conv layer, spatial shape preserved, no bias.
std::vector<double> conv3d_forward(const std::vector<double>& x, int cin,
                                   int cout, int nx, int ny, int nz,
                                   const std::vector<double>& filters);

std::vector<double> network_forward(const NetworkSpec& spec,
                                    const NetworkParams& params,
                                    const std::vector<double>& g, Mode mode,
                                    std::uint64_t rng_seed,
                                    ForwardCache* cache = nullptr);

/// MSE loss and gradients for one sample; requires the cache from a Train
/// mode forward pass.
double backward(const NetworkSpec& spec, const NetworkParams& params,
                const ForwardCache& cache,
                const std::vector<double>& label_weighted, Gradients& grads);

struct AdamState {
  Gradients m, v;
  static AdamState zero(const NetworkSpec& spec);
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               int t, const AdamConfig& cfg = {});

struct Sample {
  std::vector<double> input;  // normalized measurement vector
  std::vector<double> label;  // weighted delta-mu volume
};

struct TrainConfig {
  int batch_size = 64;
  int max_epochs = 120;
  int patience = 10;
  AdamConfig adam;
  bool verbose = false;
};

struct TrainResult {
  NetworkParams best_params;
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;    // per epoch
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

TrainResult train(const NetworkSpec& spec, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, std::uint64_t seed,
                  const TrainConfig& cfg = {});

double mse(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace dot::net
