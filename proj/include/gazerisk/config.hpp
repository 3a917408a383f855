#pragma once

// Run configuration. One JSON file drives every pipeline command; every field
// has a default, so an empty file (or none at all) reproduces the reference
// experiment. Unknown keys are rejected to catch typos, and the canonical
// serialization below is what run manifests hash.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gazerisk/risk.hpp"
#include "gazerisk/scenegen.hpp"
#include "gazerisk/serialization.hpp"

namespace gazerisk {

/// Synthetic corpus composition for gen-data.
struct CorpusSpec {
  int straight = 120;
  int right = 40;
  int left = 40;
  double tau_mean = 1.35;  ///< Gaze-lead distribution before clipping.
  double tau_std = 0.45;
  double tau_min = 0.3;
  double tau_max = 2.4;
  double straight_duration_s = 12.0;
  double turn_duration_s = 12.0;
  double approach_speed = 10.0;
  double gaze_noise_px = 30.0;
  int max_benign_peds = 2;  ///< Per episode, scripted off the ego path.
};

/// Optimizer settings shared by the training commands.
struct TrainSpec {
  double lr = 0.001;
  int batch = 32;
  int max_epochs = 50;
  int patience = 5;
};

/// Separate, lighter optimizer settings for the feature-masking study, which
/// trains four intention models back to back.
struct AblateSpec {
  double lr = 0.003;
  int max_epochs = 12;
  int patience = 3;
};

/// Scripted scenario suite for risk-sim.
struct ScenarioSpec {
  int turns = 20;      ///< Turn episodes in the suite.
  int conflicts = 8;   ///< Of which this many have a scripted collision.
  double ped_speed = 1.2;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string data_dir;  ///< Where dataset artifacts live; empty = the --out dir.
  double obs_horizon_s = 2.0;
  int future_steps = 10;
  double obs_dt = 0.1;
  double pred_dt = 0.3;
  TrainSpec train;
  AblateSpec ablate;
  CorpusSpec corpus;
  ScenarioSpec scenario;
  RiskConfig risk;

  void validate() const {
    // The record schema fixes the horizon layout at compile time; the config
    // restates it for visibility and must agree.
    if (std::abs(obs_horizon_s / obs_dt - kObsFrames) > 1e-9)
      throw std::invalid_argument(
          "RunConfig: obs_horizon_s / obs_dt must equal the 20-frame record schema");
    if (future_steps != kFutureSteps)
      throw std::invalid_argument("RunConfig: future_steps must be 10 (record schema)");
    if (std::abs(obs_dt - kFrameDt) > 1e-12)
      throw std::invalid_argument("RunConfig: obs_dt must be 0.1 s (record schema)");
    if (std::abs(pred_dt - kFutureStride * kFrameDt) > 1e-12)
      throw std::invalid_argument("RunConfig: pred_dt must be 0.3 s (record schema)");
    if (corpus.straight < 0 || corpus.right < 0 || corpus.left < 0)
      throw std::invalid_argument("RunConfig: corpus counts must be nonnegative");
    if (!(corpus.tau_min >= 0.3) || !(corpus.tau_max <= 2.4) ||
        !(corpus.tau_min < corpus.tau_max))
      throw std::invalid_argument("RunConfig: tau range must lie inside [0.3, 2.4]");
    if (!(corpus.tau_std > 0.0))
      throw std::invalid_argument("RunConfig: tau_std must be positive");
    if (train.batch < 1 || train.max_epochs < 1 || train.patience < 1 ||
        ablate.max_epochs < 1 || ablate.patience < 1)
      throw std::invalid_argument("RunConfig: training settings must be positive");
    if (!(train.lr > 0.0) || !(ablate.lr > 0.0))
      throw std::invalid_argument("RunConfig: learning rates must be positive");
    if (scenario.turns < scenario.conflicts + 1 || scenario.conflicts < 0)
      throw std::invalid_argument(
          "RunConfig: scenario.turns must exceed scenario.conflicts (benign episodes needed)");
    if (!(scenario.ped_speed > 0.0))
      throw std::invalid_argument("RunConfig: ped_speed must be positive");
    risk.validate();
  }
};

namespace detail {

/// Applies `fn(key, value)` to every member of a JSON object and rejects keys
/// the caller did not consume.
template <typename Fn>
inline void parse_object(const nlohmann::json& j, const char* what, Fn&& fn) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!fn(key, value))
      throw std::invalid_argument(std::string(what) + ": unknown key '" + key + "'");
  }
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  detail::parse_object(j, "RunConfig", [&](const std::string& key, const nlohmann::json& v) {
    if (key == "seed") {
      cfg.seed = v.get<std::uint64_t>();
    } else if (key == "data_dir") {
      cfg.data_dir = v.get<std::string>();
    } else if (key == "obs_horizon_s") {
      cfg.obs_horizon_s = v.get<double>();
    } else if (key == "future_steps") {
      cfg.future_steps = v.get<int>();
    } else if (key == "obs_dt") {
      cfg.obs_dt = v.get<double>();
    } else if (key == "pred_dt") {
      cfg.pred_dt = v.get<double>();
    } else if (key == "train") {
      detail::parse_object(v, "train", [&](const std::string& k, const nlohmann::json& w) {
        if (k == "lr") cfg.train.lr = w.get<double>();
        else if (k == "batch") cfg.train.batch = w.get<int>();
        else if (k == "max_epochs") cfg.train.max_epochs = w.get<int>();
        else if (k == "patience") cfg.train.patience = w.get<int>();
        else return false;
        return true;
      });
    } else if (key == "ablate") {
      detail::parse_object(v, "ablate", [&](const std::string& k, const nlohmann::json& w) {
        if (k == "lr") cfg.ablate.lr = w.get<double>();
        else if (k == "max_epochs") cfg.ablate.max_epochs = w.get<int>();
        else if (k == "patience") cfg.ablate.patience = w.get<int>();
        else return false;
        return true;
      });
    } else if (key == "corpus") {
      detail::parse_object(v, "corpus", [&](const std::string& k, const nlohmann::json& w) {
        if (k == "straight") cfg.corpus.straight = w.get<int>();
        else if (k == "right") cfg.corpus.right = w.get<int>();
        else if (k == "left") cfg.corpus.left = w.get<int>();
        else if (k == "tau_mean") cfg.corpus.tau_mean = w.get<double>();
        else if (k == "tau_std") cfg.corpus.tau_std = w.get<double>();
        else if (k == "tau_min") cfg.corpus.tau_min = w.get<double>();
        else if (k == "tau_max") cfg.corpus.tau_max = w.get<double>();
        else if (k == "straight_duration_s") cfg.corpus.straight_duration_s = w.get<double>();
        else if (k == "turn_duration_s") cfg.corpus.turn_duration_s = w.get<double>();
        else if (k == "approach_speed") cfg.corpus.approach_speed = w.get<double>();
        else if (k == "gaze_noise_px") cfg.corpus.gaze_noise_px = w.get<double>();
        else if (k == "max_benign_peds") cfg.corpus.max_benign_peds = w.get<int>();
        else return false;
        return true;
      });
    } else if (key == "scenario") {
      detail::parse_object(v, "scenario", [&](const std::string& k, const nlohmann::json& w) {
        if (k == "turns") cfg.scenario.turns = w.get<int>();
        else if (k == "conflicts") cfg.scenario.conflicts = w.get<int>();
        else if (k == "ped_speed") cfg.scenario.ped_speed = w.get<double>();
        else return false;
        return true;
      });
    } else if (key == "risk") {
      detail::parse_object(v, "risk", [&](const std::string& k, const nlohmann::json& w) {
        if (k == "n_particles") cfg.risk.n_particles = w.get<int>();
        else if (k == "threshold") cfg.risk.threshold = w.get<double>();
        else if (k == "consecutive") cfg.risk.consecutive = w.get<int>();
        else if (k == "assess_dt") cfg.risk.assess_dt = w.get<double>();
        else if (k == "risk_horizon") cfg.risk.risk_horizon = w.get<double>();
        else if (k == "ego_length") cfg.risk.ego_length = w.get<double>();
        else if (k == "ego_width") cfg.risk.ego_width = w.get<double>();
        else if (k == "ped_length") cfg.risk.ped_length = w.get<double>();
        else if (k == "ped_width") cfg.risk.ped_width = w.get<double>();
        else return false;
        return true;
      });
    } else {
      return false;
    }
    return true;
  });
  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_run_config: cannot open " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("load_run_config: " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

/// Canonical single-line serialization with a fixed key order; this is the
/// byte stream whose FNV-1a hash identifies the resolved configuration in run
/// manifests.
inline std::string run_config_to_json(const RunConfig& cfg) {
  std::string o = "{\"seed\":";
  o += std::to_string(cfg.seed);
  o += ",\"data_dir\":";
  detail::append_json_string(o, cfg.data_dir);
  o += ",\"obs_horizon_s\":";
  detail::append_f64(o, cfg.obs_horizon_s);
  o += ",\"future_steps\":";
  o += std::to_string(cfg.future_steps);
  o += ",\"obs_dt\":";
  detail::append_f64(o, cfg.obs_dt);
  o += ",\"pred_dt\":";
  detail::append_f64(o, cfg.pred_dt);
  o += ",\"train\":{\"lr\":";
  detail::append_f64(o, cfg.train.lr);
  o += ",\"batch\":";
  o += std::to_string(cfg.train.batch);
  o += ",\"max_epochs\":";
  o += std::to_string(cfg.train.max_epochs);
  o += ",\"patience\":";
  o += std::to_string(cfg.train.patience);
  o += "},\"ablate\":{\"lr\":";
  detail::append_f64(o, cfg.ablate.lr);
  o += ",\"max_epochs\":";
  o += std::to_string(cfg.ablate.max_epochs);
  o += ",\"patience\":";
  o += std::to_string(cfg.ablate.patience);
  o += "},\"corpus\":{\"straight\":";
  o += std::to_string(cfg.corpus.straight);
  o += ",\"right\":";
  o += std::to_string(cfg.corpus.right);
  o += ",\"left\":";
  o += std::to_string(cfg.corpus.left);
  o += ",\"tau_mean\":";
  detail::append_f64(o, cfg.corpus.tau_mean);
  o += ",\"tau_std\":";
  detail::append_f64(o, cfg.corpus.tau_std);
  o += ",\"tau_min\":";
  detail::append_f64(o, cfg.corpus.tau_min);
  o += ",\"tau_max\":";
  detail::append_f64(o, cfg.corpus.tau_max);
  o += ",\"straight_duration_s\":";
  detail::append_f64(o, cfg.corpus.straight_duration_s);
  o += ",\"turn_duration_s\":";
  detail::append_f64(o, cfg.corpus.turn_duration_s);
  o += ",\"approach_speed\":";
  detail::append_f64(o, cfg.corpus.approach_speed);
  o += ",\"gaze_noise_px\":";
  detail::append_f64(o, cfg.corpus.gaze_noise_px);
  o += ",\"max_benign_peds\":";
  o += std::to_string(cfg.corpus.max_benign_peds);
  o += "},\"scenario\":{\"turns\":";
  o += std::to_string(cfg.scenario.turns);
  o += ",\"conflicts\":";
  o += std::to_string(cfg.scenario.conflicts);
  o += ",\"ped_speed\":";
  detail::append_f64(o, cfg.scenario.ped_speed);
  o += "},\"risk\":{\"n_particles\":";
  o += std::to_string(cfg.risk.n_particles);
  o += ",\"threshold\":";
  detail::append_f64(o, cfg.risk.threshold);
  o += ",\"consecutive\":";
  o += std::to_string(cfg.risk.consecutive);
  o += ",\"assess_dt\":";
  detail::append_f64(o, cfg.risk.assess_dt);
  o += ",\"risk_horizon\":";
  detail::append_f64(o, cfg.risk.risk_horizon);
  o += ",\"ego_length\":";
  detail::append_f64(o, cfg.risk.ego_length);
  o += ",\"ego_width\":";
  detail::append_f64(o, cfg.risk.ego_width);
  o += ",\"ped_length\":";
  detail::append_f64(o, cfg.risk.ped_length);
  o += ",\"ped_width\":";
  detail::append_f64(o, cfg.risk.ped_width);
  o += "}}";
  return o;
}

inline std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a64(run_config_to_json(cfg)); }

}  // namespace gazerisk
