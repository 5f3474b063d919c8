#include "dot/pipeline.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dot {

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_config: cannot open " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key, eq, value;
    if (!(ss >> key)) continue;
    if (!(ss >> eq >> value) || eq != "=")
      throw std::runtime_error("parse_config: bad line " +
                               std::to_string(lineno));
    auto d = [&] { return std::stod(value); };
    auto i = [&] { return std::stoi(value); };
    if (key == "nx") cfg.nx = i();
    else if (key == "ny") cfg.ny = i();
    else if (key == "nz") cfg.nz = i();
    else if (key == "resolution") cfg.resolution = d();
    else if (key == "n_src_x") cfg.n_src_x = i();
    else if (key == "n_src_y") cfg.n_src_y = i();
    else if (key == "n_det_x") cfg.n_det_x = i();
    else if (key == "n_det_y") cfg.n_det_y = i();
    else if (key == "mu0") cfg.mu0 = d();
    else if (key == "musp") cfg.musp = d();
    else if (key == "refractive_index") cfg.refractive_index = d();
    else if (key == "modulation_frequency_hz") cfg.modulation_frequency_hz = d();
    else if (key == "rho_max") cfg.rho_max = d();
    else if (key == "radius_min") cfg.radius_min = d();
    else if (key == "radius_max") cfg.radius_max = d();
    else if (key == "contrast_min") cfg.contrast_min = d();
    else if (key == "contrast_max") cfg.contrast_max = d();
    else if (key == "count_min") cfg.count_min = i();
    else if (key == "count_max") cfg.count_max = i();
    else if (key == "refine") cfg.refine = i();
    else if (key == "channels") cfg.channels = i();
    else if (key == "denoise_layers") cfg.denoise_layers = i();
    else if (key == "dropout_p") cfg.dropout_p = d();
    else if (key == "input_noise_sigma") cfg.input_noise_sigma = d();
    else
      throw std::runtime_error("parse_config: unknown key '" + key + "'");
  }
  return cfg;
}

VoxelGrid coarse_grid(const ExperimentConfig& cfg) {
  return build_grid(cfg.nx, cfg.ny, cfg.nz, cfg.resolution);
}

VoxelGrid fine_grid(const ExperimentConfig& cfg) {
  return build_grid(cfg.nx * cfg.refine, cfg.ny * cfg.refine,
                    cfg.nz * cfg.refine, cfg.resolution / cfg.refine);
}

SourceDetectorConfig probe(const ExperimentConfig& cfg) {
  SourceDetectorConfig p =
      grid_probe_layout(coarse_grid(cfg), cfg.musp, cfg.n_src_x, cfg.n_src_y,
                        cfg.n_det_x, cfg.n_det_y);
  p.modulation_frequency_hz = cfg.modulation_frequency_hz;
  return p;
}

PhantomSpec phantom_spec(const ExperimentConfig& cfg) {
  PhantomSpec s;
  s.count_min = cfg.count_min;
  s.count_max = cfg.count_max;
  s.radius_min = cfg.radius_min;
  s.radius_max = cfg.radius_max;
  s.contrast_min = cfg.contrast_min;
  s.contrast_max = cfg.contrast_max;
  s.mu0 = cfg.mu0;
  s.musp = cfg.musp;
  return s;
}

BackgroundWorkspace make_fine_workspace(const ExperimentConfig& cfg,
                                        double reff_override) {
  const OpticalMedium fine_bg = OpticalMedium::homogeneous(
      fine_grid(cfg), cfg.mu0, cfg.musp, cfg.refractive_index);
  return make_background_workspace(fine_bg, probe(cfg), reff_override);
}

GeneratedSample generate_sample(const ExperimentConfig& cfg,
                                std::uint64_t seed, double reff_override,
                                const BackgroundWorkspace* workspace,
                                const SolveOptions& opts) {
  const VoxelGrid coarse = coarse_grid(cfg);
  const VoxelGrid fine = fine_grid(cfg);
  const SourceDetectorConfig cfg_probe = probe(cfg);
  const auto pairs = filter_pairs(cfg_probe, cfg.rho_max);
  if (pairs.empty())
    throw std::runtime_error("generate_sample: pair filter removed all pairs");

  GeneratedSample out;
  out.phantom = random_phantom(seed, coarse, phantom_spec(cfg));

  const DeltaMuVolume fine_delta = rasterize(out.phantom, fine);
  MultiStaticMatrix msd;
  if (workspace) {
    if (reff_override >= 0.0 && reff_override != workspace->reff_override)
      throw std::invalid_argument(
          "generate_sample: workspace built for a different R_eff");
    msd = multistatic(*workspace, fine_delta, cfg_probe, opts);
  } else {
    const OpticalMedium fine_bg = OpticalMedium::homogeneous(
        fine, cfg.mu0, cfg.musp, cfg.refractive_index);
    msd = multistatic(fine_bg, fine_delta, cfg_probe, reff_override, opts);
  }

  const MeasurementVector amps = amplitudes(msd, cfg_probe, pairs);
  out.raw_amplitudes = amps.values;
  out.data_pairs = flatten_pairs(msd, cfg_probe, pairs);

  const MeasurementVector norm = normalize_input(amps);
  out.label_physical = rasterize(out.phantom, coarse);
  const WeightedLabel weighted = weight_label(out.label_physical);
  out.weight_factor = weighted.factor;

  // Quantize through float32 so dataset persistence round-trips bit-exactly.
  out.sample.input.reserve(norm.values.size());
  for (double v : norm.values) out.sample.input.push_back(double(float(v)));
  out.sample.label.reserve(weighted.volume.values.size());
  for (double v : weighted.volume.values)
    out.sample.label.push_back(double(float(v)));
  return out;
}

net::NetworkSpec make_network_spec(const ExperimentConfig& cfg,
                                   int meas_length) {
  net::NetworkSpec spec = net::NetworkSpec::standard(
      meas_length, cfg.nx, cfg.ny, cfg.nz, cfg.channels, cfg.denoise_layers);
  spec.dropout_p = cfg.dropout_p;
  spec.input_noise_sigma = cfg.input_noise_sigma;
  return spec;
}

DatasetManifest make_manifest(const ExperimentConfig& cfg, int meas_length,
                              int train_count, int val_count,
                              std::uint64_t base_seed) {
  DatasetManifest m;
  m.grid = coarse_grid(cfg);
  m.n_src_x = cfg.n_src_x;
  m.n_src_y = cfg.n_src_y;
  m.n_det_x = cfg.n_det_x;
  m.n_det_y = cfg.n_det_y;
  m.mu0 = cfg.mu0;
  m.musp = cfg.musp;
  m.refractive_index = cfg.refractive_index;
  m.modulation_frequency_hz = cfg.modulation_frequency_hz;
  m.rho_max = cfg.rho_max;
  m.meas_length = meas_length;
  m.train_count = train_count;
  m.val_count = val_count;
  m.base_seed = base_seed;
  return m;
}

double label_weight_factor(const std::vector<double>& label) {
  std::size_t nnz = 0;
  for (double v : label)
    if (v != 0.0) ++nnz;
  return nnz == 0 ? 1.0 : double(label.size()) / double(nnz);
}

MetricsReport evaluate_pair(const std::vector<double>& estimate_weighted,
                            const std::vector<double>& label_weighted,
                            const VoxelGrid& grid) {
  MetricsReport r;
  r.rmse = rmse(estimate_weighted, label_weighted);
  r.pearson = pearson(estimate_weighted, label_weighted);
  r.ssim = ssim(estimate_weighted, label_weighted, grid.nx, grid.ny, grid.nz);
  r.cnr = cnr(estimate_weighted, label_weighted);
  return r;
}

std::vector<double> infer_weighted(const net::NetworkSpec& spec,
                                   const net::NetworkParams& params,
                                   const std::vector<double>& raw_amplitudes) {
  MeasurementVector v;
  v.values = raw_amplitudes;
  const MeasurementVector norm = normalize_input(v);
  return net::network_forward(spec, params, norm.values, net::Mode::Infer, 0);
}

}  // namespace dot
