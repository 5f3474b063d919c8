#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "dot/io.hpp"
#include "json.hpp"

namespace dot {
namespace {

using nlohmann::json;

void append_f32(std::vector<unsigned char>& buf, const std::vector<double>& v) {
  for (double x : v) {
    const float f = float(x);
    unsigned char b[4];
    std::memcpy(b, &f, 4);
    buf.insert(buf.end(), b, b + 4);
  }
}

std::vector<double> take_f32(const std::vector<unsigned char>& buf,
                             std::size_t& pos, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    float f;
    std::memcpy(&f, buf.data() + pos, 4);
    pos += 4;
    out[i] = double(f);
  }
  return out;
}

}  // namespace

void write_dataset(const std::vector<net::Sample>& samples,
                   DatasetManifest manifest, const std::string& stem) {
  if (manifest.train_count + manifest.val_count != int(samples.size()))
    throw std::invalid_argument("write_dataset: split does not sum to count");
  manifest.sample_count = int(samples.size());
  manifest.offsets.clear();

  std::ofstream bin(stem + ".bin", std::ios::binary | std::ios::trunc);
  if (!bin) throw std::runtime_error("write_dataset: cannot open " + stem);
  std::uint64_t offset = 0;
  for (const auto& s : samples) {
    manifest.offsets.push_back(offset);
    std::vector<unsigned char> payload;
    append_f32(payload, s.input);
    append_f32(payload, s.label);
    const std::uint32_t crc =
        std::uint32_t(crc32(0, payload.data(), uInt(payload.size())));
    unsigned char cb[4] = {
        (unsigned char)(crc & 0xff), (unsigned char)(crc >> 8 & 0xff),
        (unsigned char)(crc >> 16 & 0xff), (unsigned char)(crc >> 24 & 0xff)};
    bin.write(reinterpret_cast<const char*>(payload.data()),
              std::streamsize(payload.size()));
    bin.write(reinterpret_cast<const char*>(cb), 4);
    offset += payload.size() + 4;
  }
  bin.close();

  json j;
  j["version"] = manifest.version;
  j["grid"] = {{"nx", manifest.grid.nx},
               {"ny", manifest.grid.ny},
               {"nz", manifest.grid.nz},
               {"resolution", manifest.grid.resolution},
               {"origin", manifest.grid.origin}};
  j["probe"] = {{"n_src_x", manifest.n_src_x},
                {"n_src_y", manifest.n_src_y},
                {"n_det_x", manifest.n_det_x},
                {"n_det_y", manifest.n_det_y}};
  j["optics"] = {{"mu0", manifest.mu0},
                 {"musp", manifest.musp},
                 {"refractive_index", manifest.refractive_index},
                 {"modulation_frequency_hz", manifest.modulation_frequency_hz}};
  j["rho_max"] = manifest.rho_max;
  j["calibration"] = {{"scale", manifest.calibration.scale},
                      {"offset", manifest.calibration.offset}};
  j["meas_length"] = manifest.meas_length;
  j["sample_count"] = manifest.sample_count;
  j["train_count"] = manifest.train_count;
  j["val_count"] = manifest.val_count;
  j["base_seed"] = manifest.base_seed;
  j["offsets"] = manifest.offsets;

  std::ofstream mf(stem + ".json", std::ios::trunc);
  mf << j.dump(2) << "\n";
}

std::vector<net::Sample> read_dataset(const std::string& stem,
                                      DatasetManifest* manifest_out) {
  std::ifstream mf(stem + ".json");
  if (!mf) throw std::runtime_error("read_dataset: missing manifest " + stem);
  json j;
  mf >> j;

  DatasetManifest m;
  m.version = j.at("version").get<int>();
  if (m.version != 1)
    throw std::runtime_error("read_dataset: unsupported version " +
                             std::to_string(m.version));
  const auto& jg = j.at("grid");
  m.grid = build_grid(jg.at("nx"), jg.at("ny"), jg.at("nz"),
                      jg.at("resolution"));
  const auto org = jg.at("origin").get<std::vector<double>>();
  m.grid.origin = {org[0], org[1], org[2]};
  const auto& jp = j.at("probe");
  m.n_src_x = jp.at("n_src_x");
  m.n_src_y = jp.at("n_src_y");
  m.n_det_x = jp.at("n_det_x");
  m.n_det_y = jp.at("n_det_y");
  const auto& jo = j.at("optics");
  m.mu0 = jo.at("mu0");
  m.musp = jo.at("musp");
  m.refractive_index = jo.at("refractive_index");
  m.modulation_frequency_hz = jo.at("modulation_frequency_hz");
  m.rho_max = j.at("rho_max");
  m.calibration.scale = j.at("calibration").at("scale");
  m.calibration.offset = j.at("calibration").at("offset");
  m.meas_length = j.at("meas_length");
  m.sample_count = j.at("sample_count");
  m.train_count = j.at("train_count");
  m.val_count = j.at("val_count");
  m.base_seed = j.at("base_seed");
  m.offsets = j.at("offsets").get<std::vector<std::uint64_t>>();

  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("read_dataset: missing payload " + stem);
  const std::size_t nvox = std::size_t(m.grid.voxel_count());
  const std::size_t meas = std::size_t(m.meas_length);
  const std::size_t sample_bytes = (meas + nvox) * 4 + 4;

  std::vector<net::Sample> samples;
  samples.reserve(std::size_t(m.sample_count));
  for (int s = 0; s < m.sample_count; ++s) {
    bin.seekg(std::streamoff(m.offsets[std::size_t(s)]));
    std::vector<unsigned char> buf(sample_bytes);
    bin.read(reinterpret_cast<char*>(buf.data()),
             std::streamsize(sample_bytes));
    if (bin.gcount() != std::streamsize(sample_bytes))
      throw std::runtime_error("read_dataset: truncated payload at sample " +
                               std::to_string(s));
    const std::uint32_t stored = std::uint32_t(buf[sample_bytes - 4]) |
                                 std::uint32_t(buf[sample_bytes - 3]) << 8 |
                                 std::uint32_t(buf[sample_bytes - 2]) << 16 |
                                 std::uint32_t(buf[sample_bytes - 1]) << 24;
    const std::uint32_t actual = std::uint32_t(
        crc32(0, buf.data(), uInt(sample_bytes - 4)));
    if (stored != actual)
      throw std::runtime_error("read_dataset: checksum failure at sample " +
                               std::to_string(s));
    std::size_t pos = 0;
    net::Sample sample;
    sample.input = take_f32(buf, pos, meas);
    sample.label = take_f32(buf, pos, nvox);
    samples.push_back(std::move(sample));
  }
  if (manifest_out) *manifest_out = m;
  return samples;
}

}  // namespace dot
