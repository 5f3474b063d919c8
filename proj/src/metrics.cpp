#include "dot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dot {
namespace {

double quantile_type7(const std::vector<double>& sorted, double q) {
  const double pos = q * double(sorted.size() - 1);
  const std::size_t lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(sorted.size() - 1, lo + 1);
  const double frac = pos - double(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

double rmse(const std::vector<double>& estimate,
            const std::vector<double>& label) {
  if (estimate.size() != label.size() || estimate.empty())
    throw std::invalid_argument("rmse: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate[i] - label[i];
    s += d * d;
  }
  return std::sqrt(s / double(estimate.size()));
}

double pearson(const std::vector<double>& estimate,
               const std::vector<double>& label) {
  if (estimate.size() != label.size() || estimate.empty())
    throw std::invalid_argument("pearson: shape mismatch");
  const double n = double(estimate.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    ma += estimate[i];
    mb += label[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double da = estimate[i] - ma, db = label[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0)
    throw std::invalid_argument("pearson: constant input");
  return cov / std::sqrt(va * vb);
}

double ssim(const std::vector<double>& estimate,
            const std::vector<double>& label, int nx, int ny, int nz,
            const SsimConfig& cfg) {
  const std::size_t nvox = std::size_t(nx) * ny * nz;
  if (estimate.size() != nvox || label.size() != nvox)
    throw std::invalid_argument("ssim: shape mismatch");

  const auto [lmin, lmax] = std::minmax_element(label.begin(), label.end());
  double range = *lmax - *lmin;
  if (range == 0.0) range = 1.0;
  const double c1 = (cfg.k1 * range) * (cfg.k1 * range);
  const double c2 = (cfg.k2 * range) * (cfg.k2 * range);

  const int half = cfg.window / 2;
  std::vector<double> gauss(std::size_t(cfg.window));
  for (int i = 0; i < cfg.window; ++i) {
    const double d = double(i - half);
    gauss[std::size_t(i)] = std::exp(-d * d / (2.0 * cfg.sigma * cfg.sigma));
  }

  auto at = [&](const std::vector<double>& v, int x, int y, int z) {
    return v[(std::size_t(z) * ny + y) * nx + x];
  };

  double total = 0.0;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        double wsum = 0, mx = 0, my = 0;
        for (int dz = -half; dz <= half; ++dz) {
          const int zz = z + dz;
          if (zz < 0 || zz >= nz) continue;
          for (int dy = -half; dy <= half; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= ny) continue;
            for (int dx = -half; dx <= half; ++dx) {
              const int xx = x + dx;
              if (xx < 0 || xx >= nx) continue;
              const double w = gauss[std::size_t(dz + half)] *
                               gauss[std::size_t(dy + half)] *
                               gauss[std::size_t(dx + half)];
              wsum += w;
              mx += w * at(estimate, xx, yy, zz);
              my += w * at(label, xx, yy, zz);
            }
          }
        }
        mx /= wsum;
        my /= wsum;
        double vx = 0, vy = 0, cxy = 0;
        for (int dz = -half; dz <= half; ++dz) {
          const int zz = z + dz;
          if (zz < 0 || zz >= nz) continue;
          for (int dy = -half; dy <= half; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= ny) continue;
            for (int dx = -half; dx <= half; ++dx) {
              const int xx = x + dx;
              if (xx < 0 || xx >= nx) continue;
              const double w = gauss[std::size_t(dz + half)] *
                               gauss[std::size_t(dy + half)] *
                               gauss[std::size_t(dx + half)] /
                               wsum;
              const double ex = at(estimate, xx, yy, zz) - mx;
              const double ey = at(label, xx, yy, zz) - my;
              vx += w * ex * ex;
              vy += w * ey * ey;
              cxy += w * ex * ey;
            }
          }
        }
        total += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
  return total / double(nvox);
}

double cnr(const std::vector<double>& estimate,
           const std::vector<double>& label_binary) {
  if (estimate.size() != label_binary.size())
    throw std::invalid_argument("cnr: shape mismatch");
  double sum_roi = 0, sum_back = 0;
  std::size_t n_roi = 0, n_back = 0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    if (label_binary[i] != 0.0) {
      sum_roi += estimate[i];
      ++n_roi;
    } else {
      sum_back += estimate[i];
      ++n_back;
    }
  }
  if (n_roi < 2 || n_back < 2)
    throw std::invalid_argument("cnr: need >= 2 voxels in ROI and background");
  const double mean_roi = sum_roi / double(n_roi);
  const double mean_back = sum_back / double(n_back);
  double var_roi = 0, var_back = 0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    if (label_binary[i] != 0.0) {
      const double d = estimate[i] - mean_roi;
      var_roi += d * d;
    } else {
      const double d = estimate[i] - mean_back;
      var_back += d * d;
    }
  }
  var_roi /= double(n_roi - 1);
  var_back /= double(n_back - 1);
  const double a_roi = double(n_roi) / double(estimate.size());
  const double a_back = double(n_back) / double(estimate.size());
  const double numerator = mean_roi - mean_back;
  if (numerator == 0.0) return 0.0;
  const double denom2 = a_roi * var_roi + a_back * var_back;
  if (denom2 == 0.0)
    throw std::domain_error("cnr: undefined (zero variance, nonzero contrast)");
  return numerator / std::sqrt(denom2);
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("box_stats: empty input");
  std::sort(values.begin(), values.end());
  BoxStats s;
  s.median = quantile_type7(values, 0.5);
  s.q25 = quantile_type7(values, 0.25);
  s.q75 = quantile_type7(values, 0.75);
  const double iqr = s.q75 - s.q25;
  const double lo_fence = s.q25 - 1.5 * iqr;
  const double hi_fence = s.q75 + 1.5 * iqr;
  s.whisker_lo = s.median;
  s.whisker_hi = s.median;
  bool found = false;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      s.outliers.push_back(v);
    } else {
      if (!found) {
        s.whisker_lo = v;
        found = true;
      }
      s.whisker_hi = v;
    }
  }
  return s;
}

BatchSummary batch_evaluate(const std::vector<MetricsReport>& reports) {
  if (reports.empty())
    throw std::invalid_argument("batch_evaluate: no reports");
  std::vector<double> a, b, c, d;
  for (const auto& r : reports) {
    a.push_back(r.rmse);
    b.push_back(r.pearson);
    c.push_back(r.ssim);
    d.push_back(r.cnr);
  }
  return {box_stats(a), box_stats(b), box_stats(c), box_stats(d)};
}

}  // namespace dot
