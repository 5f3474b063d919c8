#include <cstring>
#include <fstream>
#include <stdexcept>

#include "dot/io.hpp"
#include "json.hpp"

namespace dot {
namespace {

using nlohmann::json;

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  // Little-endian host assumed (x86/aarch64); asserted at build below.
  static_assert(sizeof(double) == 8);
  out.write(reinterpret_cast<const char*>(v.data()),
            std::streamsize(v.size() * 8));
}

void read_doubles(std::ifstream& in, std::vector<double>& v) {
  in.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * 8));
  if (in.gcount() != std::streamsize(v.size() * 8))
    throw std::runtime_error("load_checkpoint: truncated parameter blob");
}

}  // namespace

void save_checkpoint(const net::NetworkParams& params,
                     const CheckpointMeta& meta, const std::string& stem) {
  json j;
  j["input_length"] = meta.spec.input_length;
  j["nx"] = meta.spec.nx;
  j["ny"] = meta.spec.ny;
  j["nz"] = meta.spec.nz;
  j["fc_channels"] = meta.spec.fc_channels;
  json layers = json::array();
  for (const auto& l : meta.spec.conv_layers)
    layers.push_back({{"in", l.in_channels},
                      {"out", l.out_channels},
                      {"activation",
                       l.activation == net::Activation::Tanh ? "tanh" : "relu"}});
  j["conv_layers"] = layers;
  j["dropout_p"] = meta.spec.dropout_p;
  j["input_noise_sigma"] = meta.spec.input_noise_sigma;
  j["seed"] = meta.seed;
  j["epoch"] = meta.epoch;
  j["val_loss"] = meta.val_loss;

  std::ofstream mf(stem + ".json", std::ios::trunc);
  mf << j.dump(2) << "\n";

  std::ofstream bin(stem + ".bin", std::ios::binary | std::ios::trunc);
  write_doubles(bin, params.fc_w);
  write_doubles(bin, params.fc_b);
  for (const auto& c : params.conv) write_doubles(bin, c);
}

net::NetworkParams load_checkpoint(const std::string& stem,
                                   CheckpointMeta* meta_out) {
  std::ifstream mf(stem + ".json");
  if (!mf)
    throw std::runtime_error("load_checkpoint: missing manifest " + stem);
  json j;
  mf >> j;

  CheckpointMeta meta;
  meta.spec.input_length = j.at("input_length");
  meta.spec.nx = j.at("nx");
  meta.spec.ny = j.at("ny");
  meta.spec.nz = j.at("nz");
  meta.spec.fc_channels = j.at("fc_channels");
  for (const auto& l : j.at("conv_layers"))
    meta.spec.conv_layers.push_back(
        {l.at("in"), l.at("out"),
         l.at("activation") == "tanh" ? net::Activation::Tanh
                                      : net::Activation::Relu});
  meta.spec.dropout_p = j.at("dropout_p");
  meta.spec.input_noise_sigma = j.at("input_noise_sigma");
  meta.seed = j.at("seed");
  meta.epoch = j.at("epoch");
  meta.val_loss = j.at("val_loss");

  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("load_checkpoint: missing blob " + stem);
  net::NetworkParams p;
  p.fc_w.resize(std::size_t(meta.spec.fc_output_size()) *
                std::size_t(meta.spec.input_length));
  p.fc_b.resize(std::size_t(meta.spec.fc_output_size()));
  read_doubles(bin, p.fc_w);
  read_doubles(bin, p.fc_b);
  for (const auto& l : meta.spec.conv_layers) {
    std::vector<double> w(std::size_t(27) * l.in_channels * l.out_channels);
    read_doubles(bin, w);
    p.conv.push_back(std::move(w));
  }
  if (meta_out) *meta_out = meta;
  return p;
}

}  // namespace dot
