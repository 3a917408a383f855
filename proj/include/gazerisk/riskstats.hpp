#pragma once

// Prediction-error statistics. Waypoint errors are expressed in a frame
// aligned with the true motion (e_x along travel, e_y perpendicular), fitted
// per prediction step as 2-D Gaussians, and queried through density /
// confidence-region helpers. A small product-kernel KDE is included for
// visual inspection of the pooled error clouds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazerisk/geometry.hpp"
#include "gazerisk/serialization.hpp"

namespace gazerisk {

/// One waypoint displacement error in the motion-aligned frame: e_x along the
/// true direction of travel, e_y perpendicular to it (left of travel is
/// positive). `step` is the 1-based prediction step the error belongs to.
struct ErrorSample {
  int step = 0;
  double e_x = 0.0;
  double e_y = 0.0;
};

/// Gaussian error model for one prediction step: sample mean and covariance
/// of the motion-aligned error, plus the number of samples used for the fit.
struct StepErrorModel {
  int step = 0;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double s_xx = 0.0;
  double s_xy = 0.0;
  double s_yy = 0.0;
  std::size_t count = 0;

  double det() const { return s_xx * s_yy - s_xy * s_xy; }

  /// Squared Mahalanobis distance of (x, y) from the mean.
  double mahalanobis2(double x, double y) const {
    const double d = det();
    if (!(d > 0.0)) throw std::runtime_error("StepErrorModel: singular covariance");
    const double dx = x - mean_x;
    const double dy = y - mean_y;
    return (s_yy * dx * dx - 2.0 * s_xy * dx * dy + s_xx * dy * dy) / d;
  }
};

/// Rotates the displacement (pred - truth) into the frame whose x-axis points
/// along `direction`. The mapping is a pure rotation, so the error norm is
/// preserved. Throws if the direction is zero.
inline ErrorSample decompose_error(const Vec2& pred, const Vec2& truth, const Vec2& direction) {
  const double n = direction.norm();
  if (!(n > 0.0)) throw std::invalid_argument("decompose_error: direction must be nonzero");
  const double c = direction.x / n;
  const double s = direction.y / n;
  const Vec2 e = pred - truth;
  ErrorSample out;
  out.e_x = c * e.x + s * e.y;
  out.e_y = -s * e.x + c * e.y;
  return out;
}

/// Decomposes a predicted trajectory against the true future positions,
/// producing one motion-aligned ErrorSample per step (1-based). The reference
/// direction at step k is the true displacement over that step; when the true
/// speed falls below `min_speed` the previous step's direction is reused. Both
/// sequences are expressed in the frame anchored at the observation end, so
/// the (implicit) position before the first step is the origin. Throws when a
/// direction is needed before any motion has occurred.
inline std::vector<ErrorSample> trajectory_errors(std::span<const Vec2> pred,
                                                  std::span<const Vec2> truth, double dt = 0.3,
                                                  double min_speed = 0.1) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("trajectory_errors: length mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("trajectory_errors: dt must be positive");
  std::vector<ErrorSample> out;
  out.reserve(pred.size());
  Vec2 direction{0.0, 0.0};
  bool have_direction = false;
  Vec2 prev{0.0, 0.0};
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const Vec2 d = truth[k] - prev;
    if (d.norm() / dt >= min_speed) {
      direction = d;
      have_direction = true;
    } else if (!have_direction) {
      throw std::invalid_argument("trajectory_errors: standstill with no prior motion direction");
    }
    ErrorSample sample = decompose_error(pred[k], truth[k], direction);
    sample.step = static_cast<int>(k) + 1;
    out.push_back(sample);
    prev = truth[k];
  }
  return out;
}

/// Smallest admissible variance after regularization. Keeps fitted
/// covariances invertible even when the errors are constant.
inline constexpr double kCovarianceFloor = 1e-9;

/// Fits one Gaussian per prediction step from pooled error samples. Every
/// step from 1 to the largest step present must have at least `min_count`
/// samples. Covariances use the unbiased (n-1) estimator and the diagonal is
/// floored at kCovarianceFloor. Models are returned ordered by step.
inline std::vector<StepErrorModel> fit_step_models(std::span<const ErrorSample> samples,
                                                   std::size_t min_count = 30) {
  if (samples.empty()) throw std::invalid_argument("fit_step_models: no samples");
  int max_step = 0;
  for (const ErrorSample& s : samples) {
    if (s.step < 1) throw std::invalid_argument("fit_step_models: steps must be 1-based");
    max_step = std::max(max_step, s.step);
  }
  std::vector<std::vector<const ErrorSample*>> buckets(static_cast<std::size_t>(max_step));
  for (const ErrorSample& s : samples) buckets[static_cast<std::size_t>(s.step - 1)].push_back(&s);

  std::vector<StepErrorModel> models;
  models.reserve(buckets.size());
  for (int step = 1; step <= max_step; ++step) {
    const auto& bucket = buckets[static_cast<std::size_t>(step - 1)];
    if (bucket.size() < min_count)
      throw std::invalid_argument("fit_step_models: step " + std::to_string(step) + " has " +
                                  std::to_string(bucket.size()) + " samples, need " +
                                  std::to_string(min_count));
    StepErrorModel m;
    m.step = step;
    m.count = bucket.size();
    const double n = static_cast<double>(bucket.size());
    for (const ErrorSample* s : bucket) {
      m.mean_x += s->e_x;
      m.mean_y += s->e_y;
    }
    m.mean_x /= n;
    m.mean_y /= n;
    for (const ErrorSample* s : bucket) {
      const double dx = s->e_x - m.mean_x;
      const double dy = s->e_y - m.mean_y;
      m.s_xx += dx * dx;
      m.s_xy += dx * dy;
      m.s_yy += dy * dy;
    }
    m.s_xx /= n - 1.0;
    m.s_xy /= n - 1.0;
    m.s_yy /= n - 1.0;
    m.s_xx = std::max(m.s_xx, kCovarianceFloor);
    m.s_yy = std::max(m.s_yy, kCovarianceFloor);
    models.push_back(m);
  }
  return models;
}

/// Bivariate normal density of the model at (x, y).
inline double gaussian_pdf(const StepErrorModel& m, double x, double y) {
  const double d = m.det();
  if (!(d > 0.0)) throw std::runtime_error("gaussian_pdf: singular covariance");
  const double q = m.mahalanobis2(x, y);
  return std::exp(-0.5 * q) / (2.0 * kPi * std::sqrt(d));
}

/// Squared-Mahalanobis threshold enclosing `level` probability mass of a 2-D
/// Gaussian. For two degrees of freedom the chi-square quantile has the
/// closed form -2 ln(1 - level); level 0.95 gives 5.9915.
inline double confidence_boundary(double level) {
  if (!(level > 0.0) || !(level < 1.0))
    throw std::invalid_argument("confidence_boundary: level must be in (0, 1)");
  return -2.0 * std::log1p(-level);
}

/// True when (x, y) lies inside (or on) the `level` confidence ellipse.
inline bool inside_confidence_region(const StepErrorModel& m, double x, double y,
                                     double level = 0.95) {
  return m.mahalanobis2(x, y) <= confidence_boundary(level);
}

/// Summary statistics of a 2-D sample: mean, unbiased standard deviations and
/// the Pearson correlation.
struct SampleStats {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double x_std = 0.0;
  double y_std = 0.0;
  double corr = 0.0;
};

inline SampleStats sample_stats(std::span<const Vec2> samples) {
  if (samples.size() < 2) throw std::invalid_argument("sample_stats: need at least 2 samples");
  SampleStats st;
  const double n = static_cast<double>(samples.size());
  for (const Vec2& p : samples) {
    st.mean_x += p.x;
    st.mean_y += p.y;
  }
  st.mean_x /= n;
  st.mean_y /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const Vec2& p : samples) {
    const double dx = p.x - st.mean_x;
    const double dy = p.y - st.mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  sxx /= n - 1.0;
  sxy /= n - 1.0;
  syy /= n - 1.0;
  st.x_std = std::sqrt(sxx);
  st.y_std = std::sqrt(syy);
  if (st.x_std > 0.0 && st.y_std > 0.0) st.corr = sxy / (st.x_std * st.y_std);
  return st;
}

/// Kernel density estimate on a regular grid. `density[iy * size + ix]` is
/// the estimated density at the cell center (x0 + ix*dx, y0 + iy*dy).
struct Kde2d {
  int size = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double h_x = 0.0;
  double h_y = 0.0;
  std::vector<double> density;
  SampleStats stats;

  double mass() const {
    double sum = 0.0;
    for (double v : density) sum += v;
    return sum * dx * dy;
  }
};

/// Product-Gaussian KDE with per-axis Silverman bandwidth h_i = std_i *
/// n^(-1/6), evaluated on a size x size grid spanning mean +/- 4 sample
/// standard deviations per axis. Requires at least two samples and nonzero
/// spread on both axes.
inline Kde2d kde2d(std::span<const Vec2> samples, int size = 100) {
  if (size < 2) throw std::invalid_argument("kde2d: grid size must be at least 2");
  Kde2d out;
  out.stats = sample_stats(samples);
  if (!(out.stats.x_std > 0.0) || !(out.stats.y_std > 0.0))
    throw std::invalid_argument("kde2d: degenerate sample (zero spread on an axis)");
  const double n = static_cast<double>(samples.size());
  out.size = size;
  out.h_x = out.stats.x_std * std::pow(n, -1.0 / 6.0);
  out.h_y = out.stats.y_std * std::pow(n, -1.0 / 6.0);
  const double span_x = 8.0 * out.stats.x_std;
  const double span_y = 8.0 * out.stats.y_std;
  out.dx = span_x / size;
  out.dy = span_y / size;
  out.x0 = out.stats.mean_x - 4.0 * out.stats.x_std + 0.5 * out.dx;
  out.y0 = out.stats.mean_y - 4.0 * out.stats.y_std + 0.5 * out.dy;
  out.density.assign(static_cast<std::size_t>(size) * static_cast<std::size_t>(size), 0.0);

  const double inv_hx = 1.0 / out.h_x;
  const double inv_hy = 1.0 / out.h_y;
  const double norm = 1.0 / (n * 2.0 * kPi * out.h_x * out.h_y);
  for (int iy = 0; iy < size; ++iy) {
    const double y = out.y0 + iy * out.dy;
    for (int ix = 0; ix < size; ++ix) {
      const double x = out.x0 + ix * out.dx;
      double acc = 0.0;
      for (const Vec2& p : samples) {
        const double zx = (x - p.x) * inv_hx;
        const double zy = (y - p.y) * inv_hy;
        acc += std::exp(-0.5 * (zx * zx + zy * zy));
      }
      out.density[static_cast<std::size_t>(iy) * size + ix] = acc * norm;
    }
  }
  return out;
}

/// Writes step error models as CSV with the canonical float format, so a
/// write/read round trip reproduces every value bit for bit.
inline void write_error_models_csv(const std::filesystem::path& path,
                                   std::span<const StepErrorModel> models) {
  std::string out = "step,mean_x,mean_y,s_xx,s_xy,s_yy,n\n";
  for (const StepErrorModel& m : models) {
    out += std::to_string(m.step);
    out += ',';
    detail::append_f64(out, m.mean_x);
    out += ',';
    detail::append_f64(out, m.mean_y);
    out += ',';
    detail::append_f64(out, m.s_xx);
    out += ',';
    detail::append_f64(out, m.s_xy);
    out += ',';
    detail::append_f64(out, m.s_yy);
    out += ',';
    out += std::to_string(m.count);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_error_models_csv: cannot open " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_error_models_csv: write failed for " + path.string());
}

inline std::vector<StepErrorModel> read_error_models_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_error_models_csv: cannot open " + path.string());
  std::vector<StepErrorModel> models;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (first) {
      first = false;  // header
      continue;
    }
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7)
      throw std::runtime_error("read_error_models_csv: malformed row in " + path.string());
    StepErrorModel m;
    m.step = std::stoi(fields[0]);
    m.mean_x = std::strtod(fields[1].c_str(), nullptr);
    m.mean_y = std::strtod(fields[2].c_str(), nullptr);
    m.s_xx = std::strtod(fields[3].c_str(), nullptr);
    m.s_xy = std::strtod(fields[4].c_str(), nullptr);
    m.s_yy = std::strtod(fields[5].c_str(), nullptr);
    m.count = static_cast<std::size_t>(std::stoull(fields[6]));
    models.push_back(m);
  }
  return models;
}

}  // namespace gazerisk
