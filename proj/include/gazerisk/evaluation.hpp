#pragma once

// Evaluation metrics: displacement errors at fixed horizons, multiclass
// intention scores with detection lead times, error-exceedance fractions and
// the alarm audit that partitions fired alarms into true/false and conflicts
// into covered/missed. Includes the CSV table writers for the result files.

#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazerisk/geometry.hpp"
#include "gazerisk/serialization.hpp"

namespace gazerisk {

/// Number of whole prediction steps inside a time horizon.
inline int horizon_steps(double horizon_s, double step_s = 0.3) {
  if (!(horizon_s > 0.0) || !(step_s > 0.0))
    throw std::invalid_argument("horizon_steps: times must be positive");
  return static_cast<int>(std::floor(horizon_s / step_s + 1e-9));
}

/// Aggregate displacement errors of predicted against true positions over the
/// first `steps` waypoints. `ade` averages the per-step Euclidean error,
/// `fde` averages the error at the final step only, and `sde` is the square
/// root of the mean squared per-step error, so `ade <= sde` always holds.
struct DisplacementMetrics {
  double ade = 0.0;
  double fde = 0.0;
  double sde = 0.0;
  std::size_t count = 0;  ///< Number of record pairs aggregated.
};

inline DisplacementMetrics displacement_metrics(std::span<const std::vector<Vec2>> preds,
                                                std::span<const std::vector<Vec2>> truths,
                                                int steps) {
  if (preds.size() != truths.size())
    throw std::invalid_argument("displacement_metrics: prediction/truth count mismatch");
  if (preds.empty()) throw std::invalid_argument("displacement_metrics: no records");
  if (steps < 1) throw std::invalid_argument("displacement_metrics: need at least one step");
  double sum = 0.0, sum_sq = 0.0, sum_final = 0.0;
  for (std::size_t r = 0; r < preds.size(); ++r) {
    const auto& p = preds[r];
    const auto& t = truths[r];
    if (p.size() < static_cast<std::size_t>(steps) || t.size() < static_cast<std::size_t>(steps))
      throw std::invalid_argument("displacement_metrics: record shorter than the horizon");
    for (int k = 0; k < steps; ++k) {
      const double d = (p[static_cast<std::size_t>(k)] - t[static_cast<std::size_t>(k)]).norm();
      sum += d;
      sum_sq += d * d;
      if (k == steps - 1) sum_final += d;
    }
  }
  DisplacementMetrics out;
  out.count = preds.size();
  const double n_steps = static_cast<double>(preds.size()) * static_cast<double>(steps);
  out.ade = sum / n_steps;
  out.sde = std::sqrt(sum_sq / n_steps);
  out.fde = sum_final / static_cast<double>(preds.size());
  return out;
}

/// Final-step displacement error of a single record at the given horizon.
inline double final_displacement(const std::vector<Vec2>& pred, const std::vector<Vec2>& truth,
                                 int steps) {
  if (steps < 1 || pred.size() < static_cast<std::size_t>(steps) ||
      truth.size() < static_cast<std::size_t>(steps))
    throw std::invalid_argument("final_displacement: record shorter than the horizon");
  const std::size_t k = static_cast<std::size_t>(steps) - 1;
  return (pred[k] - truth[k]).norm();
}

inline constexpr int kNumClasses = 3;

/// Precision/recall/F1 for one class of the intention classifier.
struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

/// Multiclass classification scores with the raw confusion matrix
/// (confusion[true_label][predicted_label]).
struct IntentMetrics {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
  std::array<ClassMetrics, kNumClasses> per_class{};
  double accuracy = 0.0;
  std::size_t count = 0;
};

inline IntentMetrics intent_metrics(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size())
    throw std::invalid_argument("intent_metrics: label count mismatch");
  if (truth.empty()) throw std::invalid_argument("intent_metrics: no labels");
  IntentMetrics out;
  out.count = truth.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= kNumClasses || pred[i] < 0 || pred[i] >= kNumClasses)
      throw std::invalid_argument("intent_metrics: labels must be in 0..2");
    ++out.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
    if (truth[i] == pred[i]) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t tp = out.confusion[c][c];
    std::size_t fp = 0, fn = 0;
    for (std::size_t o = 0; o < kNumClasses; ++o) {
      if (o == c) continue;
      fp += out.confusion[o][c];
      fn += out.confusion[c][o];
    }
    ClassMetrics& m = out.per_class[c];
    m.support = tp + fn;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
  }
  return out;
}

/// Detection lead time for one turn event. The detection locks at the first
/// tick whose predicted class equals the eventual turn class and stays
/// correct through the steer onset; the lead is onset minus lock time, so a
/// detection that only appears after the onset yields a negative lead. Ticks
/// must be in increasing time order. Returns nothing when the class is never
/// predicted.
inline std::optional<double> time_to_maneuver(std::span<const double> times,
                                              std::span<const int> preds, int turn_class,
                                              double steer_onset) {
  if (times.size() != preds.size())
    throw std::invalid_argument("time_to_maneuver: times and predictions must align");
  // Last tick at or before the onset; a pre-onset lock must hold up to it.
  std::ptrdiff_t onset_idx = -1;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] <= steer_onset) onset_idx = static_cast<std::ptrdiff_t>(i);
  std::ptrdiff_t lock = -1;
  if (onset_idx >= 0 && preds[static_cast<std::size_t>(onset_idx)] == turn_class) {
    lock = onset_idx;
    while (lock > 0 && preds[static_cast<std::size_t>(lock - 1)] == turn_class) --lock;
  } else {
    for (std::ptrdiff_t i = onset_idx + 1; i < static_cast<std::ptrdiff_t>(preds.size()); ++i) {
      if (preds[static_cast<std::size_t>(i)] == turn_class) {
        lock = i;
        break;
      }
    }
  }
  if (lock == -1) return std::nullopt;
  return steer_onset - times[static_cast<std::size_t>(lock)];
}

/// Fraction of values strictly exceeding each threshold.
inline std::vector<double> exceedance_fractions(std::span<const double> values,
                                                std::span<const double> thresholds) {
  if (values.empty()) throw std::invalid_argument("exceedance_fractions: no values");
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double thr : thresholds) {
    std::size_t over = 0;
    for (double v : values)
      if (v > thr) ++over;
    out.push_back(static_cast<double>(over) / static_cast<double>(values.size()));
  }
  return out;
}

/// An alarm with the obstacle it attributed the risk to.
struct ScenarioAlarm {
  double t = 0.0;
  int obstacle_id = -1;
};

/// A scripted conflict: the obstacle involved and the collision instant.
struct ConflictWindow {
  int obstacle_id = -1;
  double collision_t = 0.0;
};

/// Verdict for one fired alarm.
struct AlarmVerdict {
  double t = 0.0;
  int obstacle_id = -1;
  bool true_alarm = false;
  double lead = 0.0;  ///< collision time minus onset, valid for true alarms
};

/// Audit of a scenario run: every fired alarm is classified as exactly one of
/// true (onset precedes the scripted collision of the attributed obstacle) or
/// false; conflicts no true alarm points at are counted as missed.
struct AlarmAudit {
  std::vector<AlarmVerdict> verdicts;
  std::size_t true_alarms = 0;
  std::size_t false_alarms = 0;
  std::size_t missed_conflicts = 0;
  double min_lead = 0.0;   ///< Smallest true-alarm lead, 0 when none fired.
  double mean_lead = 0.0;  ///< Mean true-alarm lead, 0 when none fired.
};

inline AlarmAudit audit_alarms(std::span<const ScenarioAlarm> alarms,
                               std::span<const ConflictWindow> conflicts) {
  AlarmAudit out;
  std::vector<bool> covered(conflicts.size(), false);
  double lead_sum = 0.0;
  for (const ScenarioAlarm& a : alarms) {
    AlarmVerdict v;
    v.t = a.t;
    v.obstacle_id = a.obstacle_id;
    // Earliest matching collision that the alarm still precedes.
    std::ptrdiff_t best = -1;
    for (std::size_t c = 0; c < conflicts.size(); ++c) {
      if (conflicts[c].obstacle_id != a.obstacle_id) continue;
      if (a.t >= conflicts[c].collision_t) continue;
      if (best == -1 || conflicts[c].collision_t < conflicts[static_cast<std::size_t>(best)].collision_t)
        best = static_cast<std::ptrdiff_t>(c);
    }
    if (best >= 0) {
      v.true_alarm = true;
      v.lead = conflicts[static_cast<std::size_t>(best)].collision_t - a.t;
      covered[static_cast<std::size_t>(best)] = true;
      ++out.true_alarms;
      lead_sum += v.lead;
      out.min_lead = out.true_alarms == 1 ? v.lead : std::min(out.min_lead, v.lead);
    } else {
      ++out.false_alarms;
    }
    out.verdicts.push_back(v);
  }
  for (bool c : covered)
    if (!c) ++out.missed_conflicts;
  if (out.true_alarms > 0) out.mean_lead = lead_sum / static_cast<double>(out.true_alarms);
  return out;
}

// ---------------------------------------------------------------------------
// CSV table writers. Every file starts with a header row naming the columns;
// floats use the canonical format shared with the other serializers.

/// One row of the intention table: a model label with its per-class scores
/// and the mean detection lead over turn events.
struct IntentTableRow {
  std::string model;
  IntentMetrics metrics;
  std::optional<double> mean_t2m;
  std::size_t turn_events = 0;
};

inline void write_intent_table_csv(const std::filesystem::path& path,
                                   std::span<const IntentTableRow> rows) {
  std::string out =
      "model,precision_straight,recall_straight,f1_straight,precision_right,recall_right,"
      "f1_right,precision_left,recall_left,f1_left,accuracy,mean_t2m_s,turn_events\n";
  for (const IntentTableRow& row : rows) {
    out += row.model;
    for (int c = 0; c < kNumClasses; ++c) {
      const ClassMetrics& m = row.metrics.per_class[static_cast<std::size_t>(c)];
      out += ',';
      detail::append_f64(out, m.precision);
      out += ',';
      detail::append_f64(out, m.recall);
      out += ',';
      detail::append_f64(out, m.f1);
    }
    out += ',';
    detail::append_f64(out, row.metrics.accuracy);
    out += ',';
    if (row.mean_t2m)
      detail::append_f64(out, *row.mean_t2m);
    else
      out += "nan";
    out += ',';
    out += std::to_string(row.turn_events);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_intent_table_csv: cannot open " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_intent_table_csv: write failed for " + path.string());
}

/// One row of the trajectory table: a model evaluated at one horizon.
struct TrajTableRow {
  std::string model;
  double horizon_s = 0.0;
  int steps = 0;
  DisplacementMetrics metrics;
};

inline void write_traj_table_csv(const std::filesystem::path& path,
                                 std::span<const TrajTableRow> rows) {
  std::string out = "model,horizon_s,steps,ade,fde,sde,records\n";
  for (const TrajTableRow& row : rows) {
    out += row.model;
    out += ',';
    detail::append_f64(out, row.horizon_s);
    out += ',';
    out += std::to_string(row.steps);
    out += ',';
    detail::append_f64(out, row.metrics.ade);
    out += ',';
    detail::append_f64(out, row.metrics.fde);
    out += ',';
    detail::append_f64(out, row.metrics.sde);
    out += ',';
    out += std::to_string(row.metrics.count);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_traj_table_csv: cannot open " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_traj_table_csv: write failed for " + path.string());
}

/// One row of the exceedance table: the fraction of records whose final
/// displacement exceeds each threshold.
struct ExceedanceTableRow {
  std::string model;
  std::vector<double> fractions;  ///< Aligned with the threshold list.
};

inline void write_exceedance_table_csv(const std::filesystem::path& path,
                                       std::span<const double> thresholds,
                                       std::span<const ExceedanceTableRow> rows) {
  std::string out = "model";
  for (double thr : thresholds) {
    out += ",frac_fde_gt_";
    detail::append_f64(out, thr);
    out += 'm';
  }
  out += '\n';
  for (const ExceedanceTableRow& row : rows) {
    if (row.fractions.size() != thresholds.size())
      throw std::invalid_argument("write_exceedance_table_csv: row/threshold mismatch");
    out += row.model;
    for (double f : row.fractions) {
      out += ',';
      detail::append_f64(out, f);
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_exceedance_table_csv: cannot open " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f)
    throw std::runtime_error("write_exceedance_table_csv: write failed for " + path.string());
}

/// One audited scenario for the alarm table.
struct AlarmTableRow {
  std::string scenario;
  std::string model;
  AlarmAudit audit;
};

inline void write_alarm_table_csv(const std::filesystem::path& path,
                                  std::span<const AlarmTableRow> rows) {
  std::string out =
      "scenario,model,true_alarms,false_alarms,missed_conflicts,min_lead_s,mean_lead_s\n";
  for (const AlarmTableRow& row : rows) {
    out += row.scenario;
    out += ',';
    out += row.model;
    out += ',';
    out += std::to_string(row.audit.true_alarms);
    out += ',';
    out += std::to_string(row.audit.false_alarms);
    out += ',';
    out += std::to_string(row.audit.missed_conflicts);
    out += ',';
    detail::append_f64(out, row.audit.min_lead);
    out += ',';
    detail::append_f64(out, row.audit.mean_lead);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_alarm_table_csv: cannot open " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_alarm_table_csv: write failed for " + path.string());
}

}  // namespace gazerisk
