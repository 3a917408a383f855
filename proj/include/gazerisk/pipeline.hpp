#pragma once

// Pipeline commands behind the CLI. Each run_* function reads prerequisites
// from the data directory (default: the output directory), writes its
// artifacts plus a run manifest, and is bit-deterministic for a fixed config:
// rerunning any command with the same inputs and seed reproduces every output
// byte for byte. Missing prerequisites raise errors naming the command that
// produces them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gazerisk/config.hpp"
#include "gazerisk/evaluation.hpp"
#include "gazerisk/predictor.hpp"
#include "gazerisk/risk.hpp"
#include "gazerisk/riskstats.hpp"
#include "gazerisk/scenegen.hpp"
#include "gazerisk/serialization.hpp"
#include "gazerisk/train.hpp"

namespace gazerisk {

// ---------------------------------------------------------------------------
// Directories, artifacts, manifests
// ---------------------------------------------------------------------------

struct RunDirs {
  std::filesystem::path out;   ///< Where this command writes.
  std::filesystem::path data;  ///< Where prerequisites are read from.
};

inline RunDirs resolve_dirs(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  RunDirs d;
  d.out = out_dir;
  d.data = cfg.data_dir.empty() ? out_dir : std::filesystem::path(cfg.data_dir);
  std::filesystem::create_directories(d.out);
  return d;
}

inline std::filesystem::path require_artifact(const std::filesystem::path& dir,
                                              const std::string& name, const char* producer) {
  std::filesystem::path p = dir / name;
  if (!std::filesystem::exists(p))
    throw std::runtime_error("missing artifact '" + name + "' (expected at " + p.string() +
                             "); run 'gazerisk " + producer + "' first");
  return p;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Writes `<command with - as _>_manifest.json`: the resolved config hash, the
/// master seed, and content hashes of every input and output keyed by file
/// name (never by path), so manifests from runs in different directories still
/// compare byte-identical.
inline void write_manifest(const RunDirs& dirs, const std::string& command, const RunConfig& cfg,
                           const std::map<std::string, std::filesystem::path>& inputs,
                           const std::vector<std::string>& outputs) {
  std::string o = "{\"command\":\"" + command + "\",\"config_hash\":\"" +
                  hash_hex(config_hash(cfg)) + "\",\"seed\":" + std::to_string(cfg.seed) +
                  ",\"inputs\":{";
  bool first = true;
  for (const auto& [name, path] : inputs) {
    if (!first) o += ',';
    first = false;
    o += '"' + name + "\":\"" + hash_hex(fnv1a64_file(path)) + '"';
  }
  o += "},\"outputs\":{";
  std::map<std::string, std::string> out_hashes;
  for (const std::string& name : outputs)
    out_hashes[name] = hash_hex(fnv1a64_file(dirs.out / name));
  first = true;
  for (const auto& [name, hash] : out_hashes) {
    if (!first) o += ',';
    first = false;
    o += '"' + name + "\":\"" + hash + '"';
  }
  o += "}}\n";
  std::string slug = command;
  std::replace(slug.begin(), slug.end(), '-', '_');
  const std::filesystem::path path = dirs.out / (slug + "_manifest.json");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_manifest: cannot open " + path.string());
  f << o;
  if (!f) throw std::runtime_error("write_manifest: write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Dataset artifacts
// ---------------------------------------------------------------------------

inline void write_id_lines(const std::filesystem::path& path, const std::set<std::string>& ids) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_id_lines: cannot open " + path.string());
  for (const std::string& id : ids) f << id << '\n';
  if (!f) throw std::runtime_error("write_id_lines: write failed for " + path.string());
}

inline std::set<std::string> read_id_lines(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_id_lines: cannot open " + path.string());
  std::set<std::string> ids;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) ids.insert(line);
  return ids;
}

struct Dataset {
  std::vector<EpisodeRecord> train, val, test;
};

/// Loads the windowed records and partitions them by the split manifests,
/// preserving file order inside each part.
inline Dataset load_dataset(const std::filesystem::path& data_dir) {
  const auto records_path = require_artifact(data_dir, "records.jsonl", "gen-data");
  const auto train_ids = read_id_lines(require_artifact(data_dir, "split_train.txt", "gen-data"));
  const auto val_ids = read_id_lines(require_artifact(data_dir, "split_val.txt", "gen-data"));
  const auto test_ids = read_id_lines(require_artifact(data_dir, "split_test.txt", "gen-data"));
  Dataset ds;
  for (auto& rec : read_records_jsonl(records_path)) {
    if (train_ids.count(rec.episode_id)) ds.train.push_back(std::move(rec));
    else if (val_ids.count(rec.episode_id)) ds.val.push_back(std::move(rec));
    else if (test_ids.count(rec.episode_id)) ds.test.push_back(std::move(rec));
    else
      throw std::runtime_error("load_dataset: episode '" + rec.episode_id +
                               "' is missing from every split manifest");
  }
  return ds;
}

/// Per-episode metadata pulled from episodes.jsonl without rebuilding rasters
/// or pedestrian tracks.
struct EpisodeInfo {
  std::string id;
  int turn = 0;
  double duration_s = 0.0;
  std::optional<double> steer_onset, gaze_shift, turn_end;
};

inline std::vector<EpisodeInfo> read_episode_info_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_episode_info_jsonl: cannot open " + path.string());
  std::vector<EpisodeInfo> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      EpisodeInfo info;
      info.id = j.at("id").get<std::string>();
      info.duration_s = j.at("config").at("duration").get<double>();
      const auto& jm = j.at("meta");
      info.turn = jm.at("turn").get<int>();
      auto opt = [&](const char* key) -> std::optional<double> {
        if (jm.contains(key) && !jm[key].is_null()) return jm[key].get<double>();
        return std::nullopt;
      };
      info.steer_onset = opt("steer_onset");
      info.gaze_shift = opt("gaze_shift");
      info.turn_end = opt("turn_end");
      out.push_back(std::move(info));
    } catch (const std::exception& e) {
      throw std::runtime_error("read_episode_info_jsonl: " + path.string() + " line " +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Seed schedule: every stream is derived from the master seed with a fixed
// tag, so commands are reproducible independently of execution order.
// ---------------------------------------------------------------------------

namespace seeds {
inline constexpr std::uint64_t kCorpusScenario = 0x10000;  // + episode index
inline constexpr std::uint64_t kCorpusAux = 0x20000;       // + episode index
inline constexpr std::uint64_t kSplit = 0x59113;
inline constexpr std::uint64_t kDiInit = 0xD1B;
inline constexpr std::uint64_t kDiTrain = 0x7D1;
inline constexpr std::uint64_t kMtTrain = 0x317;
inline constexpr std::uint64_t kFfInit = 0xFF0;
inline constexpr std::uint64_t kFfTrain = 0xFF1;
inline constexpr std::uint64_t kMtpInit = 0x317A;
inline constexpr std::uint64_t kMtpTrain = 0x317B;
inline constexpr std::uint64_t kAblateInit = 0xAB00;  // + variant index
inline constexpr std::uint64_t kAblateTrain = 0xAB10;
inline constexpr std::uint64_t kSuiteScenario = 0x30000;  // + scenario index
inline constexpr std::uint64_t kSuiteAux = 0x31000;
inline constexpr std::uint64_t kRiskVariant = 0x40000;  // + variant tag
}  // namespace seeds

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

namespace detail {

/// Background pedestrians walk parallel to the approach road on a far
/// sidewalk, west of the intersection, so they can never meet the ego on the
/// approach lane or on either post-turn corridor.
inline void script_background_peds(ScenarioConfig& sc, Rng& aux, int max_peds) {
  const int n = static_cast<int>(aux.below(static_cast<std::uint64_t>(max_peds) + 1));
  for (int p = 0; p < n; ++p) {
    const double side = aux.uniform() < 0.5 ? 1.0 : -1.0;
    const double y = side * aux.uniform(6.0, 10.0);
    const double x = aux.uniform(-75.0, -30.0);
    const double dir = aux.uniform() < 0.5 ? 1.0 : -1.0;
    const double speed = aux.uniform(0.8, 1.6);
    PedestrianScript ped;
    ped.start = {x, y, dir > 0.0 ? 0.0 : kPi};
    ped.velocity = {dir * speed, 0.0};
    ped.on_path = false;
    sc.pedestrians.push_back(ped);
  }
}

inline ScenarioConfig corpus_scenario(const RunConfig& cfg, int turn, int idx) {
  ScenarioConfig sc;
  sc.turn = turn;
  sc.seed = derive_seed(cfg.seed, seeds::kCorpusScenario + static_cast<std::uint64_t>(idx));
  sc.approach_speed = cfg.corpus.approach_speed;
  sc.gaze_noise_px = cfg.corpus.gaze_noise_px;
  sc.duration_s = turn == 0 ? cfg.corpus.straight_duration_s : cfg.corpus.turn_duration_s;
  Rng aux(derive_seed(cfg.seed, seeds::kCorpusAux + static_cast<std::uint64_t>(idx)));
  if (turn != 0)
    sc.gaze_lead_s = aux.clipped_normal(cfg.corpus.tau_mean, cfg.corpus.tau_std,
                                        cfg.corpus.tau_min, cfg.corpus.tau_max);
  script_background_peds(sc, aux, cfg.corpus.max_benign_peds);
  return sc;
}

inline std::string episode_name(int idx) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "ep%04d", idx);
  return buf;
}

}  // namespace detail

inline void run_gen_data(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const RunDirs dirs = resolve_dirs(cfg, out_dir);
  const int total = cfg.corpus.straight + cfg.corpus.right + cfg.corpus.left;
  if (total < 5) throw std::invalid_argument("gen-data: need at least 5 episodes to split");

  std::vector<Episode> episodes;
  episodes.reserve(total);
  std::vector<EpisodeRecord> records;
  std::vector<double> turn_taus;
  for (int idx = 0; idx < total; ++idx) {
    const int turn = idx < cfg.corpus.straight                      ? 0
                     : idx < cfg.corpus.straight + cfg.corpus.right ? 1
                                                                    : 2;
    Episode ep = generate_episode(detail::corpus_scenario(cfg, turn, idx));
    ep.id = detail::episode_name(idx);
    if (!find_contacts(ep).empty())
      throw std::logic_error("gen-data: background pedestrian collides in episode " + ep.id);
    if (turn != 0) turn_taus.push_back(ep.config.gaze_lead_s);
    auto recs = window_dataset(std::span<const Episode>(&ep, 1));
    records.insert(records.end(), std::make_move_iterator(recs.begin()),
                   std::make_move_iterator(recs.end()));
    // The heavy per-frame arrays are recomputed on read; drop them now so the
    // corpus scales by record count, not by raster count.
    ep.rasters.clear();
    ep.rasters.shrink_to_fit();
    ep.pedestrians.clear();
    episodes.push_back(std::move(ep));
  }

  write_episodes_jsonl(dirs.out / "episodes.jsonl", episodes);
  write_records_jsonl(dirs.out / "records.jsonl", records);

  std::array<std::size_t, 3> label_counts{};
  for (const auto& r : records) label_counts[static_cast<std::size_t>(r.label)]++;
  const std::size_t n_records = records.size();

  SplitResult split = split_dataset(std::move(records), derive_seed(cfg.seed, seeds::kSplit));
  auto part_ids = [](std::span<const EpisodeRecord> part) {
    std::set<std::string> ids;
    for (const auto& r : part) ids.insert(r.episode_id);
    return ids;
  };
  const auto train_ids = part_ids(split.train);
  const auto val_ids = part_ids(split.val);
  const auto test_ids = part_ids(split.test);
  write_id_lines(dirs.out / "split_train.txt", train_ids);
  write_id_lines(dirs.out / "split_val.txt", val_ids);
  write_id_lines(dirs.out / "split_test.txt", test_ids);

  std::string summary = "key,value\n";
  auto kv = [&](const std::string& key, std::size_t v) {
    summary += key + ',' + std::to_string(v) + '\n';
  };
  kv("episodes_total", total);
  kv("episodes_straight", cfg.corpus.straight);
  kv("episodes_right", cfg.corpus.right);
  kv("episodes_left", cfg.corpus.left);
  kv("episodes_train", train_ids.size());
  kv("episodes_val", val_ids.size());
  kv("episodes_test", test_ids.size());
  kv("records_total", n_records);
  kv("records_straight", label_counts[0]);
  kv("records_right", label_counts[1]);
  kv("records_left", label_counts[2]);
  kv("records_train", split.train.size());
  kv("records_val", split.val.size());
  kv("records_test", split.test.size());
  double tau_sum = 0.0;
  for (double t : turn_taus) tau_sum += t;
  summary += "tau_turn_mean,";
  detail::append_f64(summary, turn_taus.empty() ? std::nan("") : tau_sum / turn_taus.size());
  summary += '\n';
  for (int b = 0; b < 7; ++b) {
    const double lo = 0.3 + 0.3 * b, hi = lo + 0.3;
    std::size_t count = 0;
    for (double t : turn_taus)
      if (t >= lo && (t < hi || (b == 6 && t <= hi))) ++count;
    char label[32];
    std::snprintf(label, sizeof label, "tau_bin_%.1f_%.1f", lo, hi);
    kv(label, count);
  }
  {
    const std::filesystem::path p = dirs.out / "summary.csv";
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("gen-data: cannot open " + p.string());
    f << summary;
    if (!f) throw std::runtime_error("gen-data: write failed for " + p.string());
  }

  write_manifest(dirs, "gen-data", cfg, {},
                 {"episodes.jsonl", "records.jsonl", "split_train.txt", "split_val.txt",
                  "split_test.txt", "summary.csv"});
}

// ---------------------------------------------------------------------------
// train-di / train-mt
// ---------------------------------------------------------------------------

namespace detail {

inline void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < log.train_loss.size(); ++e) {
    out += std::to_string(e + 1);
    out += ',';
    append_f64(out, log.train_loss[e]);
    out += ',';
    append_f64(out, log.val_loss[e]);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_train_log_csv: cannot open " + path.string());
  f << out;
  if (!f) throw std::runtime_error("write_train_log_csv: write failed for " + path.string());
}

inline std::map<std::string, std::filesystem::path> dataset_inputs(
    const std::filesystem::path& data_dir) {
  return {{"records.jsonl", data_dir / "records.jsonl"},
          {"split_train.txt", data_dir / "split_train.txt"},
          {"split_val.txt", data_dir / "split_val.txt"},
          {"split_test.txt", data_dir / "split_test.txt"}};
}

inline TrainParams base_params(const RunConfig& cfg, std::uint64_t seed_tag) {
  TrainParams tp;
  tp.lr = cfg.train.lr;
  tp.batch_size = cfg.train.batch;
  tp.max_epochs = cfg.train.max_epochs;
  tp.patience = cfg.train.patience;
  tp.seed = derive_seed(cfg.seed, seed_tag);
  return tp;
}

// The sequence decoders underfit badly on the classifier's schedule; they get
// a hotter, decaying learning rate instead.
inline constexpr double kSeqLr = 0.015;
inline constexpr double kSeqLrDecay = 0.998;

}  // namespace detail

inline void run_train_di(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const RunDirs dirs = resolve_dirs(cfg, out_dir);
  const Dataset ds = load_dataset(dirs.data);
  ModelBundle bundle =
      init_bundle(FeatureSpec{true, true, false}, derive_seed(cfg.seed, seeds::kDiInit));
  const TrainLog log =
      train_di(bundle, ds.train, ds.val, detail::base_params(cfg, seeds::kDiTrain));
  save_bundle(dirs.out / "bundle_di.grck", bundle);
  detail::write_train_log_csv(dirs.out / "train_log_di.csv", log);
  write_manifest(dirs, "train-di", cfg, detail::dataset_inputs(dirs.data),
                 {"bundle_di.grck", "train_log_di.csv"});
}

inline void run_train_mt(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const RunDirs dirs = resolve_dirs(cfg, out_dir);
  const Dataset ds = load_dataset(dirs.data);
  const auto di_path = require_artifact(dirs.data, "bundle_di.grck", "train-di");

  ModelBundle bundle = load_bundle(di_path);
  TrainParams mt_tp = detail::base_params(cfg, seeds::kMtTrain);
  mt_tp.lr = detail::kSeqLr;
  mt_tp.lr_decay = detail::kSeqLrDecay;
  const TrainLog mt_log = train_mt(bundle, ds.train, ds.val, mt_tp);
  save_bundle(dirs.out / "bundle.grck", bundle);
  detail::write_train_log_csv(dirs.out / "train_log_mt.csv", mt_log);

  FfBundle ff = init_ff_bundle(bundle.features, derive_seed(cfg.seed, seeds::kFfInit));
  TrainParams ff_tp = detail::base_params(cfg, seeds::kFfTrain);
  ff_tp.lr = detail::kSeqLr;
  ff_tp.lr_decay = detail::kSeqLrDecay;
  const TrainLog ff_log = train_ff(ff, ds.train, ds.val, ff_tp);
  save_ff_bundle(dirs.out / "ff.grck", ff);
  detail::write_train_log_csv(dirs.out / "train_log_ff.csv", ff_log);

  MtpBundle mtp = init_mtp_bundle(derive_seed(cfg.seed, seeds::kMtpInit));
  TrainParams mtp_tp = detail::base_params(cfg, seeds::kMtpTrain);
  mtp_tp.lr = detail::kSeqLr;
  mtp_tp.lr_decay = detail::kSeqLrDecay;
  const TrainLog mtp_log = train_mtp(mtp, ds.train, ds.val, mtp_tp);
  save_mtp_bundle(dirs.out / "mtp.grck", mtp);
  detail::write_train_log_csv(dirs.out / "train_log_mtp.csv", mtp_log);

  auto inputs = detail::dataset_inputs(dirs.data);
  inputs["bundle_di.grck"] = di_path;
  write_manifest(dirs, "train-mt", cfg, inputs,
                 {"bundle.grck", "ff.grck", "mtp.grck", "train_log_mt.csv", "train_log_ff.csv",
                  "train_log_mtp.csv"});
}

// ---------------------------------------------------------------------------
// fit-errors
// ---------------------------------------------------------------------------

inline void run_fit_errors(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const RunDirs dirs = resolve_dirs(cfg, out_dir);
  const Dataset ds = load_dataset(dirs.data);
  const auto bundle_path = require_artifact(dirs.data, "bundle.grck", "train-mt");
  const auto mtp_path = require_artifact(dirs.data, "mtp.grck", "train-mt");
  const ModelBundle bundle = load_bundle(bundle_path);
  const MtpBundle mtp = load_mtp_bundle(mtp_path);

  std::vector<ErrorSample> full_samples, ctra_samples, mtp_samples;
  for (const EpisodeRecord& rec : ds.val) {
    const FeatureWindow w = make_feature_window(rec, bundle.features, bundle.norm);
    const auto [mode, traj] = filter_trajectory(predict_multimodal(w, rec.raster, bundle));
    (void)mode;
    auto add = [&rec](std::vector<ErrorSample>& dst, const Trajectory& t) {
      auto s = trajectory_errors(t.waypoints, rec.future);
      dst.insert(dst.end(), s.begin(), s.end());
    };
    add(full_samples, traj);
    add(ctra_samples, ctra_from_record(rec));
    const FeatureWindow wm = make_feature_window(rec, mtp.features, mtp.norm);
    add(mtp_samples, filter_trajectory(mtp_lstm_predict(wm, rec.raster, mtp.model)).second);
  }
  write_error_models_csv(dirs.out / "error_models.csv", fit_step_models(full_samples));
  write_error_models_csv(dirs.out / "error_models_ctra.csv", fit_step_models(ctra_samples));
  write_error_models_csv(dirs.out / "error_models_mtp.csv", fit_step_models(mtp_samples));

  auto inputs = detail::dataset_inputs(dirs.data);
  inputs["bundle.grck"] = bundle_path;
  inputs["mtp.grck"] = mtp_path;
  write_manifest(dirs, "fit-errors", cfg, inputs,
                 {"error_models.csv", "error_models_ctra.csv", "error_models_mtp.csv"});
}

// ---------------------------------------------------------------------------
// Shared evaluation plumbing
// ---------------------------------------------------------------------------

namespace detail {

inline int argmax3(const std::array<double, 3>& p) {
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (p[i] > p[best]) best = i;
  return best;
}

/// Record indices grouped by episode id, preserving the records' own order
/// (ascending t0 inside an episode).
inline std::map<std::string, std::vector<std::size_t>> group_by_episode(
    std::span<const EpisodeRecord> records) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) groups[records[i].episode_id].push_back(i);
  return groups;
}

struct T2mSummary {
  std::optional<double> mean;
  std::size_t events = 0;
};

/// Mean time-to-maneuver over held-out turn episodes whose turn the model
/// eventually predicted; `events` counts the episodes contributing.
inline T2mSummary summarize_t2m(const std::map<std::string, std::vector<std::size_t>>& groups,
                                std::span<const EpisodeRecord> records,
                                std::span<const int> preds,
                                const std::map<std::string, EpisodeInfo>& info) {
  T2mSummary out;
  double sum = 0.0;
  for (const auto& [id, idxs] : groups) {
    const auto it = info.find(id);
    if (it == info.end())
      throw std::runtime_error("episode '" + id + "' has records but no entry in episodes.jsonl");
    if (it->second.turn == 0 || !it->second.steer_onset) continue;
    std::vector<double> times;
    std::vector<int> ep_preds;
    times.reserve(idxs.size());
    for (std::size_t i : idxs) {
      times.push_back(records[i].t0);
      ep_preds.push_back(preds[i]);
    }
    const auto t2m =
        time_to_maneuver(times, ep_preds, it->second.turn, *it->second.steer_onset);
    if (t2m) {
      sum += *t2m;
      ++out.events;
    }
  }
  if (out.events > 0) out.mean = sum / static_cast<double>(out.events);
  return out;
}

inline std::map<std::string, EpisodeInfo> info_by_id(const std::filesystem::path& episodes_path) {
  std::map<std::string, EpisodeInfo> info;
  for (auto& e : read_episode_info_jsonl(episodes_path)) info[e.id] = std::move(e);
  return info;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// eval-intent
// ---------------------------------------------------------------------------

inline void run_eval_intent(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const RunDirs dirs = resolve_dirs(cfg, out_dir);
  const Dataset ds = load_dataset(dirs.data);
  const auto bundle_path = require_artifact(dirs.data, "bundle_di.grck", "train-di");
  const auto episodes_path = require_artifact(dirs.data, "episodes.jsonl", "gen-data");
  const ModelBundle bundle = load_bundle(bundle_path);
  const auto info = detail::info_by_id(episodes_path);

  std::vector<int> labels, preds;
  std::vector<std::array<double, 3>> probs;
  for (const EpisodeRecord& rec : ds.test) {
    const FeatureWindow w = make_feature_window(rec, bundle.features, bundle.norm);
    const IntentionDist d = predict_intention(w, rec.raster, bundle);
    probs.push_back(d.probs);
    preds.push_back(detail::argmax3(d.probs));
    labels.push_back(rec.label);
  }

  const auto groups = detail::group_by_episode(ds.test);
  std::string series = "episode,t,p_straight,p_right,p_left,pred,label\n";
  for (const auto& [id, idxs] : groups) {
    for (std::size_t i : idxs) {
      series += id;
      series += ',';
      detail::append_f64(series, ds.test[i].t0);
      for (int c = 0; c < 3; ++c) {
        series += ',';
        detail::append_f64(series, probs[i][c]);
      }
      series += ',' + std::to_string(preds[i]) + ',' + std::to_string(labels[i]) + '\n';
    }
  }
  {
    const std::filesystem::path p = dirs.out / "intent_series.csv";
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("eval-intent: cannot open " + p.string());
    f << series;
    if (!f) throw std::runtime_error("eval-intent: write failed for " + p.string());
  }

  const auto t2m = detail::summarize_t2m(groups, ds.test, preds, info);
  IntentTableRow row;
  row.model = "full";
  row.metrics = intent_metrics(labels, preds);
  row.mean_t2m = t2m.mean;
  row.turn_events = t2m.events;
  write_intent_table_csv(dirs.out / "intent.csv", std::span<const IntentTableRow>(&row, 1));

  auto inputs = detail::dataset_inputs(dirs.data);
  inputs["bundle_di.grck"] = bundle_path;
  inputs["episodes.jsonl"] = episodes_path;
  write_manifest(dirs, "eval-intent", cfg, inputs, {"intent.csv", "intent_series.csv"});
}

// ---------------------------------------------------------------------------
// eval-traj
// ---------------------------------------------------------------------------

inline void run_eval_traj(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const RunDirs dirs = resolve_dirs(cfg, out_dir);
  const Dataset ds = load_dataset(dirs.data);
  const auto bundle_path = require_artifact(dirs.data, "bundle.grck", "train-mt");
  const auto ff_path = require_artifact(dirs.data, "ff.grck", "train-mt");
  const auto mtp_path = require_artifact(dirs.data, "mtp.grck", "train-mt");
  const ModelBundle bundle = load_bundle(bundle_path);
  const FfBundle ff = load_ff_bundle(ff_path);
  const MtpBundle mtp = load_mtp_bundle(mtp_path);
  if (ds.test.empty()) throw std::runtime_error("eval-traj: test split is empty");

  constexpr int kNumBaselines = 4;
  const std::array<const char*, kNumBaselines> names = {"full", "ff", "mtp", "ctra"};
  std::array<std::vector<std::vector<Vec2>>, kNumBaselines> preds;
  std::vector<std::vector<Vec2>> truths;
  std::vector<int> sel_modes;
  std::vector<std::array<double, 3>> sel_probs;
  for (const EpisodeRecord& rec : ds.test) {
    const FeatureWindow w = make_feature_window(rec, bundle.features, bundle.norm);
    const ModeSet ms = predict_multimodal(w, rec.raster, bundle);
    const auto [mode, traj] = filter_trajectory(ms);
    sel_modes.push_back(mode);
    sel_probs.push_back(ms.probs.probs);
    preds[0].push_back(traj.waypoints);
    preds[1].push_back(ff_lstm_predict(w, rec.raster, ff.model).waypoints);
    const FeatureWindow wm = make_feature_window(rec, mtp.features, mtp.norm);
    preds[2].push_back(filter_trajectory(mtp_lstm_predict(wm, rec.raster, mtp.model)).second.waypoints);
    preds[3].push_back(ctra_from_record(rec).waypoints);
    truths.push_back(rec.future);
  }

  const std::array<double, 3> horizons = {0.9, 2.1, 3.0};
  auto table_rows = [&](std::span<const std::size_t> subset) {
    std::vector<TrajTableRow> rows;
    for (int m = 0; m < kNumBaselines; ++m) {
      std::vector<std::vector<Vec2>> mp, mt;
      for (std::size_t i : subset) {
        mp.push_back(preds[m][i]);
        mt.push_back(truths[i]);
      }
      for (double h : horizons) {
        TrajTableRow row;
        row.model = names[m];
        row.horizon_s = h;
        row.steps = horizon_steps(h);
        row.metrics = displacement_metrics(mp, mt, row.steps);
        rows.push_back(std::move(row));
      }
    }
    return rows;
  };

  std::vector<std::size_t> all_idx(ds.test.size());
  for (std::size_t i = 0; i < all_idx.size(); ++i) all_idx[i] = i;
  std::vector<std::size_t> turn_idx;
  for (std::size_t i = 0; i < ds.test.size(); ++i)
    if (ds.test[i].label != 0) turn_idx.push_back(i);

  write_traj_table_csv(dirs.out / "traj.csv", table_rows(all_idx));
  if (!turn_idx.empty()) {
    write_traj_table_csv(dirs.out / "traj_turns.csv", table_rows(turn_idx));
  } else {
    std::ofstream f(dirs.out / "traj_turns.csv", std::ios::binary);
    f << "model,horizon_s,steps,ade,fde,sde,records\n";
  }

  const std::array<double, 4> thresholds = {1.0, 2.0, 3.0, 4.0};
  std::vector<ExceedanceTableRow> ex_rows;
  for (int m = 0; m < kNumBaselines; ++m) {
    std::vector<double> fde;
    for (std::size_t i = 0; i < ds.test.size(); ++i)
      fde.push_back(final_displacement(preds[m][i], truths[i], kFutureSteps));
    ExceedanceTableRow row;
    row.model = names[m];
    row.fractions = exceedance_fractions(fde, thresholds);
    ex_rows.push_back(std::move(row));
  }
  write_exceedance_table_csv(dirs.out / "exceedance.csv", thresholds, ex_rows);

  // Per-record dump of the full model: probabilities, selected mode, the ten
  // predicted waypoints, and the ground truth.
  std::string dump = "episode,t0,p_straight,p_right,p_left,mode";
  for (int j = 1; j <= kFutureSteps; ++j)
    dump += ",px" + std::to_string(j) + ",py" + std::to_string(j);
  for (int j = 1; j <= kFutureSteps; ++j)
    dump += ",tx" + std::to_string(j) + ",ty" + std::to_string(j);
  dump += '\n';
  for (std::size_t i = 0; i < ds.test.size(); ++i) {
    dump += ds.test[i].episode_id;
    dump += ',';
    detail::append_f64(dump, ds.test[i].t0);
    for (int c = 0; c < 3; ++c) {
      dump += ',';
      detail::append_f64(dump, sel_probs[i][c]);
    }
    dump += ',' + std::to_string(sel_modes[i]);
    auto emit = [&dump](const std::vector<Vec2>& pts) {
      for (const Vec2& p : pts) {
        dump += ',';
        detail::append_f64(dump, p.x);
        dump += ',';
        detail::append_f64(dump, p.y);
      }
    };
    emit(preds[0][i]);
    emit(truths[i]);
    dump += '\n';
  }
  {
    const std::filesystem::path p = dirs.out / "predictions.csv";
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("eval-traj: cannot open " + p.string());
    f << dump;
    if (!f) throw std::runtime_error("eval-traj: write failed for " + p.string());
  }

  auto inputs = detail::dataset_inputs(dirs.data);
  inputs["bundle.grck"] = bundle_path;
  inputs["ff.grck"] = ff_path;
  inputs["mtp.grck"] = mtp_path;
  write_manifest(dirs, "eval-traj", cfg, inputs,
                 {"traj.csv", "traj_turns.csv", "exceedance.csv", "predictions.csv"});
}

// ---------------------------------------------------------------------------
// risk-sim
// ---------------------------------------------------------------------------

namespace detail {

struct SuiteEpisode {
  Episode ep;
  std::vector<ConflictWindow> conflicts;  ///< Scripted collisions, global obstacle ids.
};

/// Builds the scripted right-turn suite: `conflicts` episodes with a
/// pedestrian timed to meet the ego on the post-turn corridor, one early-turn
/// episode with a static pedestrian ahead on the abandoned straight lane, and
/// benign episodes whose crossing pedestrian arrives long after the ego has
/// passed. Conflict timing is scripted on the 10 Hz frame grid.
inline std::vector<SuiteEpisode> build_suite(const RunConfig& cfg) {
  std::vector<SuiteEpisode> suite;
  for (int s = 0; s < cfg.scenario.turns; ++s) {
    ScenarioConfig sc;
    sc.turn = 1;
    sc.seed = derive_seed(cfg.seed, seeds::kSuiteScenario + static_cast<std::uint64_t>(s));
    sc.approach_speed = cfg.corpus.approach_speed;
    sc.gaze_noise_px = cfg.corpus.gaze_noise_px;
    sc.duration_s = 12.0;
    Rng aux(derive_seed(cfg.seed, seeds::kSuiteAux + static_cast<std::uint64_t>(s)));
    const bool early_turn = s == cfg.scenario.turns - 1;
    if (early_turn) {
      // A long gaze lead makes the intention flip well before the steering
      // ramp, which is what defeats the physics-only baseline here.
      sc.gaze_lead_s = 2.0;
    } else {
      sc.gaze_lead_s = aux.clipped_normal(cfg.corpus.tau_mean, cfg.corpus.tau_std,
                                          cfg.corpus.tau_min, cfg.corpus.tau_max);
    }

    const Episode dry = generate_episode(sc);
    if (!dry.meta.turn_end)
      throw std::logic_error("risk-sim: turn episode has no turn_end");
    const double turn_end = *dry.meta.turn_end;

    SuiteEpisode se;
    char name[16];
    std::snprintf(name, sizeof name, "sc%02d", s);
    double t_col = 0.0;
    if (s < cfg.scenario.conflicts) {
      const double target = turn_end + 2.6 + 0.3 * (s % 3);
      const long f_col = std::lround(target / kFrameDt);
      if (f_col >= dry.frame_count() - 3)
        throw std::logic_error("risk-sim: scripted collision falls outside the episode");
      t_col = f_col * kFrameDt;
      const Vec2 c = dry.states[f_col].pose.position();
      PedestrianScript ped;
      ped.velocity = {cfg.scenario.ped_speed, 0.0};
      ped.start = {c.x - cfg.scenario.ped_speed * t_col, c.y, 0.0};
      ped.on_path = true;
      sc.pedestrians = {ped};
    } else if (early_turn) {
      // Static pedestrian ahead on the straight lane the ego abandons at the
      // turn entry; a straight-line extrapolation runs it over, the turn
      // never comes near it.
      PedestrianScript ped;
      ped.start = {sc.turn_entry_x_m + sc.approach_speed * 1.5, sc.lane_offset_m, 0.0};
      ped.velocity = {0.0, 0.0};
      ped.on_path = false;
      sc.pedestrians = {ped};
    } else {
      const double target = turn_end + 2.6 + 0.3 * (s % 3);
      const long f_col = std::lround(target / kFrameDt);
      if (f_col >= dry.frame_count() - 3)
        throw std::logic_error("risk-sim: benign crossing falls outside the episode");
      const Vec2 c = dry.states[f_col].pose.position();
      PedestrianScript ped;
      ped.velocity = {cfg.scenario.ped_speed, 0.0};
      // Timed to reach the crossing point 6 s after the ego has passed it.
      ped.start = {c.x - cfg.scenario.ped_speed * (f_col * kFrameDt + 6.0), c.y, 0.0};
      ped.on_path = false;
      sc.pedestrians = {ped};
    }

    se.ep = generate_episode(sc);
    se.ep.id = name;
    const auto contacts = find_contacts(se.ep);
    if (s < cfg.scenario.conflicts) {
      bool ok = false;
      for (const auto& ct : contacts)
        if (ct.pedestrian == 0 && std::abs(ct.time - t_col) <= 0.5) ok = true;
      if (!ok)
        throw std::logic_error("risk-sim: scripted conflict failed to materialize in " +
                               se.ep.id);
      se.conflicts.push_back({s * 100 + 0, t_col});
    } else if (!contacts.empty()) {
      throw std::logic_error("risk-sim: background pedestrian collides in " + se.ep.id);
    }
    suite.push_back(std::move(se));
  }
  return suite;
}

struct TickRisk {
  double p = 0.0;
  int step = 0;
  int obstacle = -1;
};

inline TickRisk from_horizon(const HorizonRisk& hr) { return {hr.p_max, hr.argmax_step, hr.obstacle_id}; }

}  // namespace detail

inline void run_risk_sim(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const RunDirs dirs = resolve_dirs(cfg, out_dir);
  if (std::abs(cfg.risk.assess_dt - kFrameDt) > 1e-12)
    throw std::invalid_argument("risk-sim: assess_dt must match the 10 Hz frame grid");
  const auto bundle_path = require_artifact(dirs.data, "bundle.grck", "train-mt");
  const auto mtp_path = require_artifact(dirs.data, "mtp.grck", "train-mt");
  const auto em_full_path = require_artifact(dirs.data, "error_models.csv", "fit-errors");
  const auto em_ctra_path = require_artifact(dirs.data, "error_models_ctra.csv", "fit-errors");
  const auto em_mtp_path = require_artifact(dirs.data, "error_models_mtp.csv", "fit-errors");
  const ModelBundle bundle = load_bundle(bundle_path);
  const MtpBundle mtp = load_mtp_bundle(mtp_path);
  const auto em_full = read_error_models_csv(em_full_path);
  const auto em_ctra = read_error_models_csv(em_ctra_path);
  const auto em_mtp = read_error_models_csv(em_mtp_path);

  std::vector<detail::SuiteEpisode> suite = detail::build_suite(cfg);
  {
    std::vector<Episode> light;
    light.reserve(suite.size());
    for (const auto& se : suite) {
      Episode ep = se.ep;
      ep.rasters.clear();
      ep.pedestrians.clear();
      light.push_back(std::move(ep));
    }
    write_episodes_jsonl(dirs.out / "scenarios.jsonl", light);
  }
  std::vector<ConflictWindow> all_conflicts;
  {
    std::string csv = "episode,obstacle_id,t_col\n";
    for (const auto& se : suite)
      for (const auto& cw : se.conflicts) {
        all_conflicts.push_back(cw);
        csv += se.ep.id + ',' + std::to_string(cw.obstacle_id) + ',';
        detail::append_f64(csv, cw.collision_t);
        csv += '\n';
      }
    const std::filesystem::path p = dirs.out / "scenario_conflicts.csv";
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("risk-sim: cannot open " + p.string());
    f << csv;
    if (!f) throw std::runtime_error("risk-sim: write failed for " + p.string());
  }

  struct Variant {
    const char* name;
    int tag;
  };
  const std::array<Variant, 3> variants = {{{"full", 1}, {"ctra", 2}, {"mtp", 3}}};
  std::vector<AlarmTableRow> alarm_rows;
  std::vector<std::string> trace_names;
  for (const Variant& v : variants) {
    const std::uint64_t vseed =
        derive_seed(cfg.seed, seeds::kRiskVariant + static_cast<std::uint64_t>(v.tag));
    std::string trace = "scenario,t,p_c,argmax_step,obstacle_id,alarm\n";
    std::vector<ScenarioAlarm> alarms;
    for (std::size_t s = 0; s < suite.size(); ++s) {
      const Episode& ep = suite[s].ep;
      const std::uint64_t eseed = derive_seed(vseed, s);
      const auto recs = window_dataset(std::span<const Episode>(&ep, 1));
      if (recs.empty()) throw std::logic_error("risk-sim: scenario episode produced no windows");
      std::vector<double> pseq;
      std::vector<RiskTick> ticks;
      for (const EpisodeRecord& rec : recs) {
        const long k0 = std::lround(rec.t0 / kFrameDt);
        const std::uint64_t tick_seed = derive_seed(eseed, static_cast<std::uint64_t>(k0));
        const VehicleState& anchor = ep.states[k0];
        std::vector<ObstacleTrack> obstacles;
        for (std::size_t p = 0; p < ep.pedestrians.size(); ++p) {
          ObstacleTrack tr;
          tr.id = static_cast<int>(s) * 100 + static_cast<int>(p);
          tr.position = point_to_ego_frame(ep.pedestrians[p][k0].position(), anchor);
          tr.velocity = ep.config.pedestrians[p].velocity.rotated(-anchor.pose.heading);
          tr.length = cfg.risk.ped_length;
          tr.width = cfg.risk.ped_width;
          obstacles.push_back(tr);
        }
        detail::TickRisk tick;
        if (v.tag == 1) {
          const FeatureWindow w = make_feature_window(rec, bundle.features, bundle.norm);
          const auto traj = filter_trajectory(predict_multimodal(w, rec.raster, bundle)).second;
          tick = detail::from_horizon(horizon_risk(traj, em_full, obstacles, cfg.risk, tick_seed));
        } else if (v.tag == 2) {
          tick = detail::from_horizon(
              horizon_risk(ctra_from_record(rec), em_ctra, obstacles, cfg.risk, tick_seed));
        } else {
          const FeatureWindow w = make_feature_window(rec, mtp.features, mtp.norm);
          const ModeSet ms = mtp_lstm_predict(w, rec.raster, mtp.model);
          // Mode-weighted risk; the reported step/obstacle come from the mode
          // contributing most to the total.
          double best_contrib = 0.0;
          for (int i = 0; i < kNumModes; ++i) {
            const auto hr =
                horizon_risk(ms.trajectories[i], em_mtp, obstacles, cfg.risk,
                             derive_seed(tick_seed, 0x4D0 + static_cast<std::uint64_t>(i)));
            const double contrib = ms.probs.probs[i] * hr.p_max;
            tick.p += contrib;
            if (contrib > best_contrib) {
              best_contrib = contrib;
              tick.step = hr.argmax_step;
              tick.obstacle = hr.obstacle_id;
            }
          }
        }
        pseq.push_back(tick.p);
        ticks.push_back({rec.t0, tick.p, tick.step, tick.obstacle, false});
      }
      for (const AlarmEvent& e : alarm_stream(pseq, cfg.risk, recs.front().t0)) {
        ticks[e.index].alarm = true;
        alarms.push_back({e.t, ticks[e.index].obstacle_id});
      }
      for (const RiskTick& t : ticks) {
        trace += ep.id;
        trace += ',';
        detail::append_f64(trace, t.t);
        trace += ',';
        detail::append_f64(trace, t.p_c);
        trace += ',' + std::to_string(t.argmax_step) + ',' + std::to_string(t.obstacle_id) +
                 (t.alarm ? ",1\n" : ",0\n");
      }
    }
    const std::string trace_name = std::string("risk_trace_") + v.name + ".csv";
    const std::filesystem::path p = dirs.out / trace_name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("risk-sim: cannot open " + p.string());
    f << trace;
    if (!f) throw std::runtime_error("risk-sim: write failed for " + p.string());
    trace_names.push_back(trace_name);

    AlarmTableRow row;
    row.scenario = "suite";
    row.model = v.name;
    row.audit = audit_alarms(alarms, all_conflicts);
    alarm_rows.push_back(std::move(row));
  }
  write_alarm_table_csv(dirs.out / "alarms.csv", alarm_rows);

  std::map<std::string, std::filesystem::path> inputs = {
      {"bundle.grck", bundle_path},        {"mtp.grck", mtp_path},
      {"error_models.csv", em_full_path},  {"error_models_ctra.csv", em_ctra_path},
      {"error_models_mtp.csv", em_mtp_path}};
  std::vector<std::string> outputs = {"scenarios.jsonl", "scenario_conflicts.csv", "alarms.csv"};
  outputs.insert(outputs.end(), trace_names.begin(), trace_names.end());
  write_manifest(dirs, "risk-sim", cfg, inputs, outputs);
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

inline void run_ablate(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const RunDirs dirs = resolve_dirs(cfg, out_dir);
  const auto episodes_path = require_artifact(dirs.data, "episodes.jsonl", "gen-data");
  const auto train_ids = read_id_lines(require_artifact(dirs.data, "split_train.txt", "gen-data"));
  const auto val_ids = read_id_lines(require_artifact(dirs.data, "split_val.txt", "gen-data"));
  const auto test_ids = read_id_lines(require_artifact(dirs.data, "split_test.txt", "gen-data"));

  // Records are rebuilt from the raw episodes rather than records.jsonl
  // because the steering-angle feature travels only through the in-memory
  // side channel.
  std::map<std::string, EpisodeInfo> info;
  Dataset ds;
  {
    std::vector<Episode> episodes = read_episodes_jsonl(episodes_path);
    for (Episode& ep : episodes) {
      EpisodeInfo ei;
      ei.id = ep.id;
      ei.turn = ep.meta.turn;
      ei.duration_s = ep.config.duration_s;
      ei.steer_onset = ep.meta.steer_onset;
      ei.gaze_shift = ep.meta.gaze_shift;
      ei.turn_end = ep.meta.turn_end;
      info[ep.id] = std::move(ei);
      auto recs = window_dataset(std::span<const Episode>(&ep, 1));
      for (auto& rec : recs) {
        if (train_ids.count(rec.episode_id)) ds.train.push_back(std::move(rec));
        else if (val_ids.count(rec.episode_id)) ds.val.push_back(std::move(rec));
        else if (test_ids.count(rec.episode_id)) ds.test.push_back(std::move(rec));
        else
          throw std::runtime_error("ablate: episode '" + rec.episode_id +
                                   "' is missing from every split manifest");
      }
      ep = Episode{};  // free rasters before the next episode loads
    }
  }

  auto masked = [](const std::vector<EpisodeRecord>& recs) {
    std::vector<EpisodeRecord> out = recs;
    for (auto& r : out) r.raster = SceneRaster{};
    return out;
  };
  const std::vector<EpisodeRecord> train_m = masked(ds.train);
  const std::vector<EpisodeRecord> val_m = masked(ds.val);
  const std::vector<EpisodeRecord> test_m = masked(ds.test);

  struct VariantDef {
    const char* name;
    FeatureSpec spec;
    bool real_raster;
  };
  const std::array<VariantDef, 4> defs = {{{"S-LSTM", {true, false, false}, false},
                                           {"S+E-LSTM", {true, true, false}, false},
                                           {"S+E+C-LSTM", {true, true, false}, true},
                                           {"S+E+C+O-LSTM", {true, true, true}, true}}};

  const auto groups = detail::group_by_episode(ds.test);  // ids/t0 identical across maskings
  std::vector<IntentTableRow> rows;
  for (std::size_t v = 0; v < defs.size(); ++v) {
    const VariantDef& def = defs[v];
    const auto& tr = def.real_raster ? ds.train : train_m;
    const auto& va = def.real_raster ? ds.val : val_m;
    const auto& te = def.real_raster ? ds.test : test_m;
    ModelBundle b = init_bundle(def.spec, derive_seed(cfg.seed, seeds::kAblateInit + v));
    TrainParams tp;
    tp.lr = cfg.ablate.lr;
    tp.batch_size = cfg.train.batch;
    tp.max_epochs = cfg.ablate.max_epochs;
    tp.patience = cfg.ablate.patience;
    tp.seed = derive_seed(cfg.seed, seeds::kAblateTrain + v);
    train_di(b, tr, va, tp);

    std::vector<int> labels, preds;
    for (const EpisodeRecord& rec : te) {
      const FeatureWindow w = make_feature_window(rec, b.features, b.norm);
      preds.push_back(detail::argmax3(predict_intention(w, rec.raster, b).probs));
      labels.push_back(rec.label);
    }
    const auto t2m = detail::summarize_t2m(groups, te, preds, info);
    IntentTableRow row;
    row.model = def.name;
    row.metrics = intent_metrics(labels, preds);
    row.mean_t2m = t2m.mean;
    row.turn_events = t2m.events;
    rows.push_back(std::move(row));
  }
  write_intent_table_csv(dirs.out / "ablation.csv", rows);

  std::map<std::string, std::filesystem::path> inputs = {
      {"episodes.jsonl", episodes_path},
      {"split_train.txt", dirs.data / "split_train.txt"},
      {"split_val.txt", dirs.data / "split_val.txt"},
      {"split_test.txt", dirs.data / "split_test.txt"}};
  write_manifest(dirs, "ablate", cfg, inputs, {"ablation.csv"});
}

}  // namespace gazerisk
