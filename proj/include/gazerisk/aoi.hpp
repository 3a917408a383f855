#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace gazerisk {

/// One eye-tracker record in image coordinates (pixels).
struct GazeSample {
  double u = 0.0;  // horizontal, 0..1920
  double v = 0.0;  // vertical, 0..1080
  double t = 0.0;  // seconds
};

/// Bivariate Gaussian fitted to the gaze samples of one video frame.
struct AoiGaussian {
  double mu_x = 0.0;
  double mu_y = 0.0;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  double rho = 0.0;
};

inline constexpr double kSigmaFloorPx = 1e-6;

/// Fits the per-frame AOI Gaussian: sample means, Bessel-corrected standard
/// deviations and correlation. Sigmas below the floor are clamped and rho is
/// zeroed when either sigma collapses (frozen gaze).
inline AoiGaussian fit_aoi(std::span<const GazeSample> samples) {
  const std::size_t n = samples.size();
  if (n < 2)
    throw std::invalid_argument("fit_aoi: fewer than two samples in frame");
  double mu = 0.0, mv = 0.0;
  for (const auto& s : samples) {
    mu += s.u;
    mv += s.v;
  }
  mu /= static_cast<double>(n);
  mv /= static_cast<double>(n);
  double suu = 0.0, svv = 0.0, suv = 0.0;
  for (const auto& s : samples) {
    const double du = s.u - mu, dv = s.v - mv;
    suu += du * du;
    svv += dv * dv;
    suv += du * dv;
  }
  const double denom = static_cast<double>(n - 1);
  double sx = std::sqrt(suu / denom);
  double sy = std::sqrt(svv / denom);
  const bool clamped = sx < kSigmaFloorPx || sy < kSigmaFloorPx;
  sx = std::max(sx, kSigmaFloorPx);
  sy = std::max(sy, kSigmaFloorPx);
  double rho = clamped ? 0.0 : (suv / denom) / (sx * sy);
  rho = std::clamp(rho, -1.0, 1.0);
  return {mu, mv, sx, sy, rho};
}

/// Groups a 90 Hz gaze stream into 10 Hz frames by timestamp binning and fits
/// one AoiGaussian per frame. Frames with fewer than two samples carry the
/// previous frame's Gaussian forward (leading empty frames take the first
/// fittable one).
inline std::vector<AoiGaussian> fit_aoi_frames(std::span<const GazeSample> gaze,
                                               std::size_t n_frames,
                                               double frame_rate = 10.0) {
  std::vector<std::vector<GazeSample>> bins(n_frames);
  for (const auto& s : gaze) {
    const auto k = static_cast<long>(std::floor(s.t * frame_rate));
    if (k >= 0 && k < static_cast<long>(n_frames)) bins[k].push_back(s);
  }
  std::vector<AoiGaussian> out(n_frames);
  std::vector<bool> ok(n_frames, false);
  for (std::size_t k = 0; k < n_frames; ++k) {
    if (bins[k].size() >= 2) {
      out[k] = fit_aoi(bins[k]);
      ok[k] = true;
    }
  }
  const auto first = std::find(ok.begin(), ok.end(), true);
  if (first == ok.end())
    throw std::runtime_error("fit_aoi_frames: no frame has two gaze samples");
  for (std::size_t k = first - ok.begin(); k-- > 0;) out[k] = out[k + 1];
  for (std::size_t k = static_cast<std::size_t>(first - ok.begin()) + 1;
       k < n_frames; ++k)
    if (!ok[k]) out[k] = out[k - 1];
  return out;
}

/// Parameters of the AOI shift detector. The paper labeled shift onsets by
/// hand; these thresholds automate the same judgement and are configuration.
struct OnsetParams {
  double k_sigma = 2.0;       // deviation threshold in baseline stddevs
  int confirm_frames = 3;     // consecutive frames required
  int baseline_frames = 10;   // 1 s at 10 Hz
  double frame_rate = 10.0;
  double steer_threshold = 0.0873;  // 5 deg
  double steer_quiet_s = 1.0;       // required below-threshold dwell
};

namespace detail {
inline double sample_std(std::span<const double> xs) {
  const std::size_t n = xs.size();
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(n);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return n > 1 ? std::sqrt(acc / static_cast<double>(n - 1)) : 0.0;
}

inline double median_of(std::vector<double> xs) {
  const std::size_t n = xs.size();
  std::nth_element(xs.begin(), xs.begin() + n / 2, xs.end());
  const double hi = xs[n / 2];
  if (n % 2 == 1) return hi;
  std::nth_element(xs.begin(), xs.begin() + n / 2 - 1, xs.end());
  return 0.5 * (xs[n / 2 - 1] + hi);
}
}  // namespace detail

/// Detects the time the AOI horizontal center starts to shift: the first of
/// `confirm_frames` consecutive frames whose deviation from the trailing 1 s
/// rolling median exceeds k_sigma times the baseline noise. Returns the onset
/// in seconds from the series start, or nullopt when no shift occurs.
inline std::optional<double> detect_aoi_onset(std::span<const double> mu_x,
                                              const OnsetParams& params = {}) {
  const int base = params.baseline_frames;
  if (static_cast<int>(mu_x.size()) < base)
    throw std::invalid_argument("detect_aoi_onset: series shorter than baseline window");
  const double sigma_base = detail::sample_std(mu_x.subspan(0, base));
  int run = 0;
  for (std::size_t i = base; i < mu_x.size(); ++i) {
    std::vector<double> window(mu_x.begin() + (i - base), mu_x.begin() + i);
    const double med = detail::median_of(std::move(window));
    if (std::abs(mu_x[i] - med) > params.k_sigma * sigma_base) {
      if (++run >= params.confirm_frames)
        return static_cast<double>(i - params.confirm_frames + 1) / params.frame_rate;
    } else {
      run = 0;
    }
  }
  return std::nullopt;
}

/// Detects the steering onset: the first sample whose magnitude exceeds the
/// threshold after at least `steer_quiet_s` of continuous below-threshold
/// steering. Returns seconds from the series start, or nullopt.
inline std::optional<double> detect_steer_onset(std::span<const double> steer,
                                                const OnsetParams& params = {}) {
  if (steer.empty())
    throw std::invalid_argument("detect_steer_onset: empty series");
  const int quiet = static_cast<int>(std::lround(params.steer_quiet_s * params.frame_rate));
  int below_run = 0;
  for (std::size_t i = 0; i < steer.size(); ++i) {
    if (std::abs(steer[i]) > params.steer_threshold) {
      if (below_run >= quiet) return static_cast<double>(i) / params.frame_rate;
      below_run = 0;
    } else {
      ++below_run;
    }
  }
  return std::nullopt;
}

/// Onsets of one turn event; leading_time = steer_onset - aoi_onset.
struct OnsetReport {
  std::optional<double> aoi_onset;
  std::optional<double> steer_onset;
  std::optional<double> leading_time;
};

inline OnsetReport make_onset_report(std::span<const double> mu_x,
                                     std::span<const double> steer,
                                     const OnsetParams& params = {}) {
  OnsetReport r;
  r.aoi_onset = detect_aoi_onset(mu_x, params);
  r.steer_onset = detect_steer_onset(steer, params);
  if (r.aoi_onset && r.steer_onset)
    r.leading_time = *r.steer_onset - *r.aoi_onset;
  return r;
}

/// Summary of detected leading times over a set of turn events. Histogram
/// bins are 0.3 s wide starting at 0.
struct LeadingTimeDistribution {
  std::vector<double> leads;
  int excluded = 0;  // turns where either onset was absent
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<int> histogram;     // count per bin
  double bin_width = 0.3;
};

inline LeadingTimeDistribution leading_time_distribution(
    std::span<const OnsetReport> reports) {
  LeadingTimeDistribution d;
  for (const auto& r : reports) {
    if (r.leading_time)
      d.leads.push_back(*r.leading_time);
    else
      ++d.excluded;
  }
  if (d.leads.empty()) return d;
  double m = 0.0;
  d.min = d.leads.front();
  d.max = d.leads.front();
  for (double v : d.leads) {
    m += v;
    d.min = std::min(d.min, v);
    d.max = std::max(d.max, v);
  }
  d.mean = m / static_cast<double>(d.leads.size());
  d.stddev = detail::sample_std(d.leads);
  const int n_bins = std::max(1, static_cast<int>(std::ceil(std::max(d.max, 0.0) / d.bin_width)) + 1);
  d.histogram.assign(n_bins, 0);
  for (double v : d.leads) {
    const int b = std::clamp(static_cast<int>(std::floor(v / d.bin_width)), 0, n_bins - 1);
    ++d.histogram[b];
  }
  return d;
}

}  // namespace gazerisk
