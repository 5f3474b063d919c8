// Command-line surface for the toolkit: dataset generation, training,
// reconstruction, batch evaluation, and the boundary-mismatch experiment.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dot/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dot;

namespace {

struct Args {
  std::map<std::string, std::string> kv;

  static Args parse(int argc, char** argv, int first,
                    const std::set<std::string>& allowed) {
    Args a;
    for (int i = first; i < argc; ++i) {
      std::string key = argv[i];
      if (key.rfind("--", 0) != 0)
        throw std::runtime_error("expected flag, got '" + key + "'");
      key = key.substr(2);
      if (!allowed.count(key))
        throw std::runtime_error("unknown flag --" + key);
      if (i + 1 >= argc)
        throw std::runtime_error("flag --" + key + " needs a value");
      a.kv[key] = argv[++i];
    }
    return a;
  }

  bool has(const std::string& k) const { return kv.count(k) != 0; }
  std::string str(const std::string& k) const {
    auto it = kv.find(k);
    if (it == kv.end()) throw std::runtime_error("missing flag --" + k);
    return it->second;
  }
  std::string str(const std::string& k, const std::string& def) const {
    auto it = kv.find(k);
    return it == kv.end() ? def : it->second;
  }
  int num(const std::string& k) const { return std::stoi(str(k)); }
  int num(const std::string& k, int def) const {
    return has(k) ? std::stoi(str(k)) : def;
  }
  double real(const std::string& k) const { return std::stod(str(k)); }
  double real(const std::string& k, double def) const {
    return has(k) ? std::stod(str(k)) : def;
  }
  std::uint64_t seed(const std::string& k, std::uint64_t def = 0) const {
    return has(k) ? std::stoull(str(k)) : def;
  }
};

ExperimentConfig load_config(const Args& a) {
  return a.has("config") ? parse_config(a.str("config")) : ExperimentConfig{};
}

/// Rebuilds the experiment configuration recorded in a dataset manifest;
/// phantom-recipe fields not persisted there keep their defaults.
ExperimentConfig config_from_manifest(const DatasetManifest& m) {
  ExperimentConfig cfg;
  cfg.nx = m.grid.nx;
  cfg.ny = m.grid.ny;
  cfg.nz = m.grid.nz;
  cfg.resolution = m.grid.resolution;
  cfg.n_src_x = m.n_src_x;
  cfg.n_src_y = m.n_src_y;
  cfg.n_det_x = m.n_det_x;
  cfg.n_det_y = m.n_det_y;
  cfg.mu0 = m.mu0;
  cfg.musp = m.musp;
  cfg.refractive_index = m.refractive_index;
  cfg.modulation_frequency_hz = m.modulation_frequency_hz;
  cfg.rho_max = m.rho_max;
  return cfg;
}

std::vector<GeneratedSample> generate_batch(const ExperimentConfig& cfg,
                                            std::uint64_t base_seed, int count,
                                            double reff_override = -1.0) {
  std::vector<GeneratedSample> out(count);
  // The background factorization is shared; samples fan out across threads.
  const BackgroundWorkspace ws = make_fine_workspace(cfg, reff_override);
  const unsigned workers =
      std::max(1u, std::min(std::thread::hardware_concurrency(),
                            unsigned(count)));
  std::vector<std::future<void>> futures;
  std::atomic<int> next{0};
  for (unsigned w = 0; w < workers; ++w)
    futures.push_back(std::async(std::launch::async, [&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
        out[i] = generate_sample(cfg, base_seed + std::uint64_t(i),
                                 reff_override, &ws);
    }));
  for (auto& f : futures) f.get();
  return out;
}

void write_raw_volume(const std::vector<double>& values,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (double v : values) {
    const float f = float(v);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<double> read_raw_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open " + path);
  const auto bytes = in.tellg();
  if (bytes % 4 != 0)
    throw std::runtime_error("raw volume size not a float multiple: " + path);
  in.seekg(0);
  std::vector<double> v(std::size_t(bytes) / 4);
  for (double& x : v) {
    float f;
    in.read(reinterpret_cast<char*>(&f), 4);
    x = double(f);
  }
  if (!in) throw std::runtime_error("read failed: " + path);
  return v;
}

int cmd_gen_data(int argc, char** argv) {
  const Args a = Args::parse(argc, argv, 2,
                             {"config", "count", "val", "seed", "out"});
  const ExperimentConfig cfg = load_config(a);
  const int count = a.num("count");
  const int val = a.num("val", count / 4);
  if (count <= 0 || val < 0 || val >= count)
    throw std::runtime_error("need count > 0 and 0 <= val < count");
  const std::uint64_t seed = a.seed("seed", 1);
  const std::string out = a.str("out");

  const auto generated = generate_batch(cfg, seed, count);
  std::vector<net::Sample> samples;
  samples.reserve(generated.size());
  for (const auto& g : generated) samples.push_back(g.sample);

  DatasetManifest manifest = make_manifest(
      cfg, int(samples.front().input.size()), count - val, val, seed);
  write_dataset(samples, manifest, out);
  std::printf("wrote %d samples (%d train / %d val) to %s.{json,bin}\n", count,
              count - val, val, out.c_str());
  return 0;
}

int cmd_train(int argc, char** argv) {
  const Args a = Args::parse(argc, argv, 2,
                             {"data", "seed", "out", "epochs", "batch",
                              "patience", "lr", "channels", "denoise-layers",
                              "dropout", "noise-sigma"});
  DatasetManifest m;
  const auto samples = read_dataset(a.str("data"), &m);
  const std::vector<net::Sample> train_set(samples.begin(),
                                           samples.begin() + m.train_count);
  const std::vector<net::Sample> val_set(samples.begin() + m.train_count,
                                         samples.end());

  net::NetworkSpec spec = net::NetworkSpec::standard(
      m.meas_length, m.grid.nx, m.grid.ny, m.grid.nz, a.num("channels", 8),
      a.num("denoise-layers", 1));
  spec.dropout_p = a.real("dropout", 0.7);
  spec.input_noise_sigma = a.real("noise-sigma", 0.2);

  net::TrainConfig tc;
  tc.max_epochs = a.num("epochs", tc.max_epochs);
  tc.batch_size = a.num("batch", tc.batch_size);
  tc.patience = a.num("patience", tc.patience);
  tc.adam.lr = a.real("lr", tc.adam.lr);
  tc.verbose = true;

  const std::uint64_t seed = a.seed("seed", 1);
  const net::TrainResult result = net::train(spec, train_set, val_set, seed, tc);

  CheckpointMeta meta;
  meta.spec = spec;
  meta.seed = seed;
  meta.epoch = result.best_epoch;
  meta.val_loss = result.best_val_loss;
  save_checkpoint(result.best_params, meta, a.str("out"));
  std::printf("best epoch %d val %.6g; checkpoint %s.{json,bin}\n",
              result.best_epoch, result.best_val_loss, a.str("out").c_str());
  return 0;
}

int cmd_recon(int argc, char** argv) {
  const Args a = Args::parse(argc, argv, 2,
                             {"method", "data", "index", "ckpt", "lambda",
                              "config", "out"});
  const std::string method = a.str("method");
  DatasetManifest m;
  const auto samples = read_dataset(a.str("data"), &m);
  const int index = a.num("index");
  if (index < 0 || index >= int(samples.size()))
    throw std::runtime_error("sample index out of range");

  // Grid/probe/optics come from the manifest; an optional --config supplies
  // the phantom recipe for regenerating the complex data (classical methods).
  ExperimentConfig cfg = config_from_manifest(m);
  if (a.has("config")) {
    const ExperimentConfig file = parse_config(a.str("config"));
    cfg.radius_min = file.radius_min;
    cfg.radius_max = file.radius_max;
    cfg.contrast_min = file.contrast_min;
    cfg.contrast_max = file.contrast_max;
    cfg.count_min = file.count_min;
    cfg.count_max = file.count_max;
    cfg.refine = file.refine;
  }
  DeltaMuVolume vol;
  vol.grid = m.grid;

  if (method == "nn") {
    CheckpointMeta meta;
    const net::NetworkParams params = load_checkpoint(a.str("ckpt"), &meta);
    const std::vector<double> weighted = net::network_forward(
        meta.spec, params, samples[index].input, net::Mode::Infer, 0);
    // Undo the label weighting recorded in the ground truth.
    const double factor = label_weight_factor(samples[index].label);
    vol.values.resize(weighted.size());
    for (std::size_t i = 0; i < weighted.size(); ++i)
      vol.values[i] = weighted[i] / factor;
  } else if (method == "lm" || method == "l1" || method == "l2") {
    // The dataset stores normalized amplitudes only; the classical solvers
    // need complex scattered data, so regenerate the sample from its seed.
    const GeneratedSample g =
        generate_sample(cfg, m.base_seed + std::uint64_t(index));
    const SourceDetectorConfig cfg_probe = probe(cfg);
    const auto pairs = filter_pairs(cfg_probe, cfg.rho_max);
    const OpticalMedium bg = OpticalMedium::homogeneous(
        coarse_grid(cfg), cfg.mu0, cfg.musp, cfg.refractive_index);
    ReconResult r;
    if (method == "lm") {
      LMConfig lc;
      lc.lambda_constant = a.real("lambda", lc.lambda_constant);
      r = lm_reconstruct(g.data_pairs, bg, cfg_probe, pairs, lc);
    } else {
      SparseConfig sc;
      sc.p = method == "l1" ? 1 : 2;
      sc.lambda_constant = a.real("lambda", sc.lambda_constant);
      r = mm_sparse_reconstruct(g.data_pairs, bg, cfg_probe, pairs, sc);
    }
    vol = r.delta_mu;
    std::printf("%s: %d iterations, final residual %.6g\n", method.c_str(),
                r.iterations_used,
                r.residual_history.empty() ? 0.0 : r.residual_history.back());
  } else {
    throw std::runtime_error("unknown method '" + method +
                             "' (expected nn, lm, l1, l2)");
  }

  const std::string out = a.str("out");
  write_raw_volume(vol.values, out + ".raw");
  export_vtk(vol, out + ".vtk");
  std::printf("wrote %s.raw and %s.vtk\n", out.c_str(), out.c_str());
  return 0;
}

void emit_box(std::ofstream& out, const char* name, const BoxStats& s) {
  out << "summary metric=" << name << " median=" << s.median
      << " q25=" << s.q25 << " q75=" << s.q75
      << " whisker_lo=" << s.whisker_lo << " whisker_hi=" << s.whisker_hi
      << " outliers=" << s.outliers.size() << "\n";
}

int cmd_eval(int argc, char** argv) {
  const Args a = Args::parse(argc, argv, 2,
                             {"pred-dir", "label-dir", "out", "nx", "ny",
                              "nz"});
  const fs::path pred_dir = a.str("pred-dir");
  const fs::path label_dir = a.str("label-dir");
  VoxelGrid grid = build_grid(a.num("nx"), a.num("ny"), a.num("nz"), 1.0);

  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(pred_dir))
    if (e.path().extension() == ".raw") names.push_back(e.path().filename());
  std::sort(names.begin(), names.end());
  if (names.empty()) throw std::runtime_error("no .raw volumes in pred-dir");

  std::vector<MetricsReport> reports;
  std::ofstream out(a.str("out"));
  if (!out) throw std::runtime_error("cannot open " + a.str("out"));
  for (const auto& name : names) {
    const auto pred = read_raw_volume((pred_dir / name).string());
    const auto label = read_raw_volume((label_dir / name).string());
    if (std::int64_t(pred.size()) != grid.voxel_count() ||
        pred.size() != label.size())
      throw std::runtime_error("volume size mismatch for " + name);
    MetricsReport r = evaluate_pair(pred, label, grid);
    r.estimate_id = (pred_dir / name).string();
    r.label_id = (label_dir / name).string();
    reports.push_back(r);
    out << "pair name=" << name << " rmse=" << r.rmse
        << " pearson=" << r.pearson << " ssim=" << r.ssim << " cnr=" << r.cnr
        << "\n";
  }
  const BatchSummary s = batch_evaluate(reports);
  emit_box(out, "rmse", s.rmse);
  emit_box(out, "pearson", s.pearson);
  emit_box(out, "ssim", s.ssim);
  emit_box(out, "cnr", s.cnr);
  std::printf("evaluated %zu pairs; report %s\n", reports.size(),
              a.str("out").c_str());
  return 0;
}

int cmd_bc_mismatch(int argc, char** argv) {
  const Args a = Args::parse(argc, argv, 2,
                             {"config", "train-reff", "test-reff", "ckpt",
                              "count", "seed", "out"});
  const ExperimentConfig cfg = load_config(a);
  const double train_reff = a.real("train-reff");
  const double test_reff = a.real("test-reff");
  const int count = a.num("count", 20);
  const std::uint64_t seed = a.seed("seed", 7);

  CheckpointMeta meta;
  const net::NetworkParams params = load_checkpoint(a.str("ckpt"), &meta);

  const SourceDetectorConfig cfg_probe = probe(cfg);
  const auto pairs = filter_pairs(cfg_probe, cfg.rho_max);
  const OpticalMedium bg = OpticalMedium::homogeneous(
      coarse_grid(cfg), cfg.mu0, cfg.musp, cfg.refractive_index);

  // Measurements simulated with the test-side boundary; both reconstructions
  // keep assuming the training-side boundary.
  const auto generated = generate_batch(cfg, seed, count, test_reff);

  std::ofstream out(a.str("out"));
  if (!out) throw std::runtime_error("cannot open " + a.str("out"));
  std::vector<MetricsReport> nn_reports, lm_reports;
  for (int i = 0; i < count; ++i) {
    const GeneratedSample& g = generated[i];
    const std::vector<double> nn_weighted =
        infer_weighted(meta.spec, params, g.raw_amplitudes);
    const MetricsReport rn =
        evaluate_pair(nn_weighted, g.sample.label, g.label_physical.grid);

    const ReconResult lm = lm_reconstruct(g.data_pairs, bg, cfg_probe, pairs,
                                          {}, train_reff);
    std::vector<double> lm_weighted = lm.delta_mu.values;
    const double factor = label_weight_factor(g.sample.label);
    for (double& v : lm_weighted) v *= factor;
    const MetricsReport rl =
        evaluate_pair(lm_weighted, g.sample.label, g.label_physical.grid);

    nn_reports.push_back(rn);
    lm_reports.push_back(rl);
    out << "case index=" << i << " nn_pearson=" << rn.pearson
        << " nn_ssim=" << rn.ssim << " lm_pearson=" << rl.pearson
        << " lm_ssim=" << rl.ssim << "\n";
  }
  const BatchSummary sn = batch_evaluate(nn_reports);
  const BatchSummary sl = batch_evaluate(lm_reports);
  out << "median nn_pearson=" << sn.pearson.median
      << " nn_ssim=" << sn.ssim.median << " lm_pearson=" << sl.pearson.median
      << " lm_ssim=" << sl.ssim.median << "\n";
  std::printf(
      "medians: nn pearson %.4f ssim %.4f | lm pearson %.4f ssim %.4f\n",
      sn.pearson.median, sn.ssim.median, sl.pearson.median, sl.ssim.median);
  return 0;
}

int usage() {
  std::fprintf(stderr,
               "usage: dot <command> [flags]\n"
               "  gen-data    --count K [--val V] [--seed S] [--config C] --out STEM\n"
               "  train       --data STEM [--seed S] [--epochs N] [--batch B]\n"
               "              [--patience P] [--lr LR] [--channels C]\n"
               "              [--denoise-layers L] [--dropout P] [--noise-sigma S]\n"
               "              --out CKPT\n"
               "  recon       --method {nn,lm,l1,l2} --data STEM --index I\n"
               "              [--ckpt CKPT] [--lambda C] [--config C] --out STEM\n"
               "  eval        --pred-dir A --label-dir B --nx NX --ny NY --nz NZ\n"
               "              --out REPORT\n"
               "  bc-mismatch --train-reff X --test-reff Y --ckpt CKPT\n"
               "              [--count K] [--seed S] [--config C] --out REPORT\n");
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage();
  const std::string cmd = argv[1];
  try {
    if (cmd == "gen-data") return cmd_gen_data(argc, argv);
    if (cmd == "train") return cmd_train(argc, argv);
    if (cmd == "recon") return cmd_recon(argc, argv);
    if (cmd == "eval") return cmd_eval(argc, argv);
    if (cmd == "bc-mismatch") return cmd_bc_mismatch(argc, argv);
    std::fprintf(stderr, "unknown command '%s'\n", cmd.c_str());
    return usage();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
