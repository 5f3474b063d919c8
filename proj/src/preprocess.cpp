#include "dot/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace dot {

std::vector<std::pair<int, int>> filter_pairs(const SourceDetectorConfig& config,
                                              double rho_max) {
  std::vector<std::pair<int, int>> pairs;
  for (int n = 0; n < int(config.detectors.size()); ++n)
    for (int m = 0; m < int(config.sources.size()); ++m) {
      const Vec3& d = config.detectors[std::size_t(n)];
      const Vec3& t = config.sources[std::size_t(m)];
      const double dx = d[0] - t[0], dy = d[1] - t[1], dz = d[2] - t[2];
      if (std::sqrt(dx * dx + dy * dy + dz * dz) < rho_max)
        pairs.emplace_back(n, m);
    }
  return pairs;
}

MeasurementVector amplitudes(const MultiStaticMatrix& msd,
                             const SourceDetectorConfig& config,
                             const std::vector<std::pair<int, int>>& pairs) {
  MeasurementVector v;
  v.pair_index = pairs;
  v.values.reserve(pairs.size());
  v.separation.reserve(pairs.size());
  const std::size_t nt = config.sources.size();
  for (const auto& [n, m] : pairs) {
    v.values.push_back(std::abs(msd.data(n, m)));
    v.separation.push_back(msd.separation[std::size_t(n) * nt + std::size_t(m)]);
  }
  return v;
}

Calibration calibrate(const MeasurementVector& measured,
                      const MeasurementVector& simulated, double bin_width_mm) {
  if (measured.pair_index != simulated.pair_index ||
      measured.values.size() != simulated.values.size())
    throw std::invalid_argument("calibrate: pair sets differ");
  const double max_sim =
      *std::max_element(simulated.values.begin(), simulated.values.end());
  if (max_sim == 0.0)
    throw std::invalid_argument("calibrate: degenerate simulated vector");
  const double max_meas =
      *std::max_element(measured.values.begin(), measured.values.end());

  // Envelope: max amplitude per separation bin, for both vectors.
  std::map<int, std::pair<double, double>> env;  // bin -> (meas, sim)
  for (std::size_t i = 0; i < measured.values.size(); ++i) {
    const int bin = int(std::floor(measured.separation[i] / bin_width_mm));
    auto it = env.find(bin);
    if (it == env.end())
      env[bin] = {measured.values[i], simulated.values[i]};
    else {
      it->second.first = std::max(it->second.first, measured.values[i]);
      it->second.second = std::max(it->second.second, simulated.values[i]);
    }
  }

  // Least-squares affine fit env_meas ~ a * env_sim + b over the bins, then
  // pin the scale so that scale * max_sim + offset == max_meas.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double nb = double(env.size());
  for (const auto& [bin, e] : env) {
    sx += e.second;
    sy += e.first;
    sxx += e.second * e.second;
    sxy += e.second * e.first;
  }
  Calibration cal;
  const double det = nb * sxx - sx * sx;
  if (det != 0.0 && env.size() >= 2) {
    cal.offset = (sxx * sy - sx * sxy) / det;
  } else {
    cal.offset = 0.0;
  }
  cal.scale = (max_meas - cal.offset) / max_sim;
  return cal;
}

MeasurementVector apply_calibration(const MeasurementVector& v,
                                    const Calibration& cal) {
  MeasurementVector out = v;
  for (double& x : out.values) x = cal.scale * x + cal.offset;
  return out;
}

BulkFit fit_bulk(const MeasurementVector& amps, double omega,
                 double refractive_index, double mu_init, double d_init) {
  const std::size_t n = amps.values.size();
  if (n < 10)
    throw std::invalid_argument("fit_bulk: need at least 10 pairs");
  const auto [lo, hi] =
      std::minmax_element(amps.separation.begin(), amps.separation.end());
  if (*hi - *lo < 20.0)
    throw std::invalid_argument("fit_bulk: separations must span >= 20 mm");

  const double c0 = kSpeedOfLightVacuum / refractive_index;
  auto log_model = [&](double mu, double d, double rho) {
    const Complex kappa = std::sqrt(Complex(mu, -omega / c0) / d);
    return -kappa.real() * rho - std::log(4.0 * M_PI * d * rho);
  };

  BulkFit fit;
  fit.mu_bulk = mu_init;
  fit.d_bulk = d_init;
  for (int iter = 1; iter <= 50; ++iter) {
    fit.iterations = iter;
    // Gauss-Newton step on the 2-parameter log-amplitude least squares.
    double jtj[2][2] = {{0, 0}, {0, 0}};
    double jtr[2] = {0, 0};
    const double hmu = std::max(1e-8, 1e-6 * fit.mu_bulk);
    const double hd = std::max(1e-8, 1e-6 * fit.d_bulk);
    for (std::size_t i = 0; i < n; ++i) {
      if (amps.values[i] <= 0.0) continue;
      const double rho = amps.separation[i];
      const double r =
          log_model(fit.mu_bulk, fit.d_bulk, rho) - std::log(amps.values[i]);
      const double jmu = (log_model(fit.mu_bulk + hmu, fit.d_bulk, rho) -
                          log_model(fit.mu_bulk - hmu, fit.d_bulk, rho)) /
                         (2 * hmu);
      const double jd = (log_model(fit.mu_bulk, fit.d_bulk + hd, rho) -
                         log_model(fit.mu_bulk, fit.d_bulk - hd, rho)) /
                        (2 * hd);
      jtj[0][0] += jmu * jmu;
      jtj[0][1] += jmu * jd;
      jtj[1][1] += jd * jd;
      jtr[0] += jmu * r;
      jtr[1] += jd * r;
    }
    jtj[1][0] = jtj[0][1];
    const double det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
    if (det == 0.0) break;
    const double step_mu = (jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / det;
    const double step_d = (jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / det;
    fit.mu_bulk -= step_mu;
    fit.d_bulk -= step_d;
    if (!(fit.mu_bulk > 0.0) || !(fit.d_bulk > 0.0)) {
      fit.converged = false;
      return fit;
    }
    const double rel = std::max(std::abs(step_mu) / std::abs(fit.mu_bulk),
                                std::abs(step_d) / std::abs(fit.d_bulk));
    if (rel < 1e-8) {
      fit.converged = true;
      return fit;
    }
  }
  return fit;
}

MeasurementVector normalize_input(const MeasurementVector& v) {
  MeasurementVector out = v;
  const std::size_t n = v.values.size();
  if (n == 0) throw std::invalid_argument("normalize_input: empty vector");
  double mean = 0.0;
  for (double x : v.values) mean += x;
  mean /= double(n);
  double max_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = v.values[i] - mean;
    max_abs = std::max(max_abs, std::abs(out.values[i]));
  }
  if (max_abs == 0.0)
    throw std::invalid_argument("normalize_input: constant vector");
  for (double& x : out.values) x /= max_abs;
  return out;
}

WeightedLabel weight_label(const DeltaMuVolume& volume) {
  WeightedLabel out;
  out.volume = volume;
  std::size_t nnz = 0;
  for (double x : volume.values)
    if (x != 0.0) ++nnz;
  if (nnz == 0) {
    out.factor = 1.0;
    return out;
  }
  out.factor = double(volume.values.size()) / double(nnz);
  for (double& x : out.volume.values)
    if (x != 0.0) x *= out.factor;
  return out;
}

DeltaMuVolume unweight_label(const DeltaMuVolume& weighted, double factor) {
  DeltaMuVolume out = weighted;
  for (double& x : out.values) x /= factor;
  return out;
}

std::vector<double> add_gaussian(const std::vector<double>& v, double sigma,
                                 std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("add_gaussian: sigma < 0");
  if (sigma == 0.0) return v;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> out = v;
  for (double& x : out) x += noise(rng);
  return out;
}

std::vector<double> add_noise_snr(const std::vector<double>& v, double snr_db,
                                  std::uint64_t seed) {
  double power = 0.0;
  for (double x : v) power += x * x;
  power /= double(v.size());
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  return add_gaussian(v, sigma, seed);
}

}  // namespace dot
