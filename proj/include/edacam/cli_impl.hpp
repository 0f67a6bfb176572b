#pragma once

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include <edacam/dataset.hpp>
#include <edacam/eda.hpp>
#include <edacam/errors.hpp>
#include <edacam/evaluation.hpp>
#include <edacam/io.hpp>
#include <edacam/model.hpp>
#include <edacam/preprocess.hpp>
#include <edacam/stress.hpp>
#include <edacam/training.hpp>
#include <edacam/version.hpp>

namespace edacam {
namespace cli_detail {

struct CliOptions {
  fs::path data_dir;
  fs::path out;
  fs::path checkpoints;
  fs::path predictions;
  std::string config_file;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string target = "raw";
  std::size_t T = 768;
  std::vector<std::size_t> T_list;
  // synth
  std::size_t participants = 3;
  double duration_s = 570.0;
  double fs_video = 10.0;
  double fs_physio = 20.0;
  std::size_t synth_res = 36;
  double noise_level = 2.0;
  // preprocess / model
  std::size_t stride = 0;  // 0 means stride = T
  std::size_t crop_res = 36;
  std::size_t reduction = 16;
  std::vector<std::size_t> channels = {16, 32, 64};
  // train
  std::size_t epochs = 10;
  std::size_t batch = 4;
  double lr = 1e-3;
  std::vector<std::uint64_t> seeds;
  // stress
  std::string source = "contact";
  std::string modes = "ppg_only,eda_only,both";
  int gb_rounds = 100;
  int gb_depth = 3;
  double gb_lr = 0.1;
};

inline std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline fs::path resolve_cache_dir(const fs::path& data_dir) {
  if (const char* env = std::getenv("EDACAM_CACHE"))
    if (*env) return fs::path(env);
  return data_dir / ".cache";
}

inline std::vector<fs::path> discover_sessions(const fs::path& data_dir) {
  if (!fs::is_directory(data_dir))
    throw LoadError("no such data directory: " + data_dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(data_dir))
    if (e.is_directory() && fs::exists(e.path() / "meta.json"))
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty())
    throw LoadError("no sessions under " + data_dir.string() +
                    " (expected subdirectories with meta.json)");
  return out;
}

inline std::string windows_filename(std::size_t T, const std::string& target) {
  return "windows_T" + std::to_string(T) + "_" + target + ".bin";
}

inline std::uint64_t series_fingerprint(const Series& s) {
  std::string buf = format_double(s.fs);
  for (double v : s.values) {
    buf += ',';
    buf += format_double(v);
  }
  return fnv1a64(buf);
}

// On-disk memo of the slow tonic decomposition, keyed by the input bytes so
// a changed recording never reuses a stale decomposition.
inline Series tonic_with_cache(const Session& s, const fs::path& cache) {
  fs::create_directories(cache);
  const fs::path p = cache / ("tonic_" + s.participant_id + "_" +
                              hex64(series_fingerprint(s.eda)) + ".csv");
  if (fs::exists(p))
    return read_series_csv(p, "tonic_us", s.eda.fs, "microsiemens");
  const Series tonic = decompose_tonic(s.eda).tonic;
  write_series_csv(p, tonic, "tonic_us");
  return tonic;
}

inline void write_manifest(const fs::path& out_dir, const std::string& command,
                           const json& config, std::uint64_t seed) {
  json m;
  m["command"] = command;
  m["code_version"] = kVersion;
  m["config"] = config;
  m["config_hash"] = hex64(fnv1a64(config.dump()));
  m["seed"] = seed;
  m["created_utc"] = utc_timestamp();
  write_json_file(out_dir / ("manifest_" + command + ".json"), m);
}

inline CropConfig crop_config(std::size_t resolution) {
  CropConfig cc;
  cc.resolution = static_cast<int>(resolution);
  cc.fallback = FallbackMode::full_frame;
  return cc;
}

inline void check_target(const std::string& target) {
  if (target != "raw" && target != "tonic")
    throw ConfigError("target must be raw or tonic");
}

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::array<std::size_t, 3> to_channels(const std::vector<std::size_t>& v) {
  if (v.size() != 3) throw ConfigError("channels must list exactly 3 widths");
  return {v[0], v[1], v[2]};
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline json synth_config_json(const CliOptions& o) {
  return json{{"participants", o.participants}, {"duration_s", o.duration_s},
              {"fs_video", o.fs_video},         {"fs_physio", o.fs_physio},
              {"resolution", o.synth_res},      {"noise_level", o.noise_level},
              {"seed", o.seed}};
}

inline void cmd_synth(const CliOptions& o) {
  SynthConfig sc;
  sc.n_participants = static_cast<int>(o.participants);
  sc.duration_s = o.duration_s;
  sc.fs_video = o.fs_video;
  sc.fs_physio = o.fs_physio;
  sc.height = static_cast<int>(o.synth_res);
  sc.width = static_cast<int>(o.synth_res);
  sc.noise_level = o.noise_level;
  sc.seed = o.seed;
  // the canonical pinch schedule assumes the full protocol length; other
  // durations keep the same relative placement
  if (o.duration_s != 570.0) {
    const double k = o.duration_s / 570.0;
    for (auto& [a, b] : sc.pinch_intervals) {
      a *= k;
      b *= k;
    }
  }
  sc.validate();
  fs::create_directories(o.out);
  for (std::size_t p = 1; p <= o.participants; ++p) {
    const Session s = generate_synthetic_session(sc, p);
    save_session(s, o.out / s.participant_id);
    std::printf("wrote %s\n", (o.out / s.participant_id).string().c_str());
  }
  write_manifest(o.out, "synth", synth_config_json(o), o.seed);
}

inline json preprocess_config_json(const CliOptions& o) {
  return json{{"T", o.T},
              {"stride", o.stride ? o.stride : o.T},
              {"resolution", o.crop_res},
              {"target", o.target},
              {"pp_version", kPreprocVersion}};
}

inline void cmd_preprocess(const CliOptions& o) {
  check_target(o.target);
  const fs::path out = o.out.empty() ? o.data_dir : o.out;
  const std::size_t stride = o.stride ? o.stride : o.T;
  const CropConfig cc = crop_config(o.crop_res);
  const fs::path cache = resolve_cache_dir(o.data_dir);
  for (const fs::path& dir : discover_sessions(o.data_dir)) {
    const Session s = load_session(dir);
    const VideoTensor video = preprocess_video(*s.face_frames, cc, 10.0);
    const Series target =
        o.target == "raw" ? s.eda : tonic_with_cache(s, cache);
    const auto clips =
        window_clips(video, target, s.participant_id, o.T, stride, o.target);
    const fs::path od = out / s.participant_id;
    fs::create_directories(od);
    save_windows(od / windows_filename(o.T, o.target), clips, s.participant_id,
                 o.T, stride, static_cast<int>(o.crop_res), o.target);
    std::printf("%s: %zu windows\n", s.participant_id.c_str(), clips.size());
  }
  write_manifest(out, "preprocess", preprocess_config_json(o), o.seed);
}

struct LoadedData {
  std::map<std::string, Session> sessions;
  ClipSet clips;
};

inline LoadedData load_windowed_data(const CliOptions& o) {
  LoadedData d;
  for (const fs::path& dir : discover_sessions(o.data_dir)) {
    Session s = load_session(dir);
    const fs::path wf = dir / windows_filename(o.T, o.target);
    if (!fs::exists(wf))
      throw LoadError("missing window cache " + wf.string() +
                      "; run the preprocess command first");
    auto clips = load_windows(wf);
    if (clips.empty()) {
      std::fprintf(stderr, "warning: %s has no windows at T=%zu, skipping\n",
                   s.participant_id.c_str(), o.T);
      continue;
    }
    const std::string id = s.participant_id;
    d.clips.emplace(id, std::move(clips));
    d.sessions.emplace(id, std::move(s));
  }
  if (d.clips.empty())
    throw InsufficientDataError("no usable windowed sessions under " +
                                o.data_dir.string());
  return d;
}

inline json train_config_json(const CliOptions& o) {
  return json{{"T", o.T},           {"target", o.target},
              {"epochs", o.epochs}, {"batch_size", o.batch},
              {"learning_rate", o.lr}, {"seeds", o.seeds},
              {"channels", o.channels}, {"reduction", o.reduction},
              {"workers", o.workers}};
}

inline void cmd_train(const CliOptions& o) {
  const LoadedData d = load_windowed_data(o);

  ModelConfig mcfg;
  mcfg.T = o.T;
  mcfg.resolution = d.clips.begin()->second.front().diff.shape()[1];
  mcfg.reduction = o.reduction;
  mcfg.channels = to_channels(o.channels);
  mcfg.validate();

  TrainConfig tcfg;
  tcfg.batch_size = o.batch;
  tcfg.epochs = o.epochs;
  tcfg.learning_rate = o.lr;
  tcfg.seeds = o.seeds;
  tcfg.target_kind = o.target;
  tcfg.validate();

  fs::create_directories(o.out);
  const fs::path ckpt = o.out / "checkpoints";
  fs::create_directories(ckpt);
  const ResultTable table =
      run_experiment<float>(d.sessions, d.clips, mcfg, tcfg, &ckpt, o.workers);
  write_results_csv(o.out / "results.csv", table);
  write_results_markdown(o.out / "results.md", table);
  write_manifest(o.out, "train", train_config_json(o), o.seeds.front());
  std::printf("folds: %zu x %zu seeds, mean rho_raw %s +/- %s, "
              "mean rho_tonic %s +/- %s\n",
              d.clips.size(), tcfg.seeds.size(),
              format_double(table.mean_raw).c_str(),
              format_double(table.std_raw).c_str(),
              format_double(table.mean_tonic).c_str(),
              format_double(table.std_tonic).c_str());
}

inline json evaluate_config_json(const CliOptions& o) {
  return json{{"T", o.T},
              {"target", o.target},
              {"checkpoints", o.checkpoints.string()},
              {"seed", o.seed}};
}

inline fs::path find_checkpoint(const fs::path& dir, const std::string& id,
                                std::uint64_t seed, bool seed_given) {
  const fs::path exact =
      dir / ("fold_" + id + "_seed" + std::to_string(seed) + ".ckpt");
  if (seed_given || fs::exists(exact)) return exact;
  std::vector<fs::path> any;
  const std::string prefix = "fold_" + id + "_seed";
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (name.rfind(prefix, 0) == 0 && e.path().extension() == ".ckpt")
        any.push_back(e.path());
    }
  std::sort(any.begin(), any.end());
  return any.empty() ? exact : any.front();
}

inline void cmd_evaluate(const CliOptions& o, bool seed_given) {
  const LoadedData d = load_windowed_data(o);
  const fs::path cache = resolve_cache_dir(o.data_dir);
  fs::create_directories(o.out);

  std::vector<EvalResult> rows;
  CsvWriter baseline(o.out / "baseline.csv",
                     {"participant", "rho_bpa_raw", "rho_bpa_tonic"});
  for (const auto& [id, clips] : d.clips) {
    const Session& s = d.sessions.at(id);
    const fs::path cp = find_checkpoint(o.checkpoints, id, o.seed, seed_given);
    if (!fs::exists(cp)) {
      std::fprintf(stderr, "warning: no checkpoint for %s under %s, skipping\n",
                   id.c_str(), o.checkpoints.string().c_str());
      continue;
    }
    Model<float> model = load_checkpoint<float>(cp);
    if (model.config().T != o.T)
      throw InputError("checkpoint " + cp.string() + " was trained at T=" +
                       std::to_string(model.config().T) + ", not T=" +
                       std::to_string(o.T));

    std::vector<const NormalizedClip*> ordered;
    for (const auto& c : clips) ordered.push_back(&c);
    std::sort(ordered.begin(), ordered.end(),
              [](const NormalizedClip* a, const NormalizedClip* b) {
                return a->start < b->start;
              });
    std::vector<double> preds;
    for (const auto* c : ordered) {
      const std::vector<double> y = forward(model, *c);
      preds.insert(preds.end(), y.begin(), y.end());
    }

    EvalResult ev;
    ev.participant_id = id;
    ev.window_T = o.T;
    const Series tonic = tonic_with_cache(s, cache);
    try {
      ev = evaluate_participant(preds, s, o.target, 10.0, o.T, &tonic);
    } catch (const UndefinedCorrelationError& e) {
      std::fprintf(stderr, "warning: %s: %s\n", id.c_str(), e.what());
    }

    const VideoTensor video =
        preprocess_video(*s.face_frames, crop_config(o.crop_res), 10.0);
    try {
      ev.rho_motion = motion_probe(preds, video);
      ev.motion_applicable = true;
    } catch (const Error& e) {
      std::fprintf(stderr, "note: motion probe for %s: %s\n", id.c_str(),
                   e.what());
    }
    rows.push_back(ev);

    const std::vector<double> cum = cumulative_sum(preds);
    {
      CsvWriter w(o.out / ("predictions_" + id + ".csv"),
                  {"t_s", "diff_pred", "arousal"});
      for (std::size_t i = 0; i < preds.size(); ++i)
        w.write_row((static_cast<double>(i) + 1.0) / 10.0, preds[i], cum[i]);
    }
    {
      std::vector<double> target(cum.size());
      for (std::size_t i = 0; i < cum.size(); ++i)
        target[i] = sample_at(o.target == "tonic" ? tonic : s.eda,
                              (static_cast<double>(i) + 1.0) / 10.0);
      save_comparison_plot(o.out / ("compare_" + id + ".png"), cum, target,
                           id + " prediction vs " + o.target + " target");
    }

    try {
      const Series env = baseline_bpa(video);
      std::vector<double> at_raw(env.values.size()), at_tonic(env.values.size());
      for (std::size_t k = 0; k < env.values.size(); ++k) {
        const double t = 10.0 * static_cast<double>(k) + 15.0;
        at_raw[k] = sample_at(s.eda, t);
        at_tonic[k] = sample_at(tonic, t);
      }
      baseline.write_row(id, spearman(env.values, at_raw),
                         spearman(env.values, at_tonic));
    } catch (const Error& e) {
      std::fprintf(stderr, "note: baseline for %s: %s\n", id.c_str(), e.what());
      baseline.write_row(id, std::numeric_limits<double>::quiet_NaN(),
                         std::numeric_limits<double>::quiet_NaN());
    }
  }
  if (rows.empty())
    throw LoadError("no checkpoints matched any session under " +
                    o.checkpoints.string());
  write_eval_csv(o.out / "evaluation.csv", rows);
  write_manifest(o.out, "evaluate", evaluate_config_json(o), o.seed);
  for (const auto& r : rows)
    std::printf("%s: rho_raw %s, rho_tonic %s\n", r.participant_id.c_str(),
                format_double(r.rho_raw).c_str(),
                format_double(r.rho_tonic).c_str());
}

inline json sweep_config_json(const CliOptions& o) {
  return json{{"T", o.T_list},       {"target", o.target},
              {"epochs", o.epochs},  {"batch_size", o.batch},
              {"learning_rate", o.lr}, {"seeds", o.seeds},
              {"channels", o.channels}, {"reduction", o.reduction},
              {"workers", o.workers}};
}

inline void cmd_sweep(const CliOptions& o) {
  if (o.T_list.empty())
    throw ConfigError("sweep: provide window lengths via --T, e.g. --T 256,512");
  check_target(o.target);
  const fs::path cache = resolve_cache_dir(o.data_dir);
  const CropConfig cc = crop_config(o.crop_res);

  struct Prepared {
    Session session;
    VideoTensor video;
    Series target;
  };
  std::vector<Prepared> prepared;
  for (const fs::path& dir : discover_sessions(o.data_dir)) {
    Prepared p;
    p.session = load_session(dir);
    p.video = preprocess_video(*p.session.face_frames, cc, 10.0);
    p.target = o.target == "raw" ? p.session.eda
                                 : tonic_with_cache(p.session, cache);
    prepared.push_back(std::move(p));
  }

  fs::create_directories(o.out);
  CsvWriter csv(o.out / "sweep.csv",
                {"T", "windows", "mean_rho_raw", "std_rho_raw",
                 "mean_rho_tonic", "std_rho_tonic", "failed_cells"});
  for (const std::size_t T : o.T_list) {
    try {
      std::map<std::string, Session> sessions;
      ClipSet clips;
      std::size_t total = 0;
      for (const auto& p : prepared) {
        auto cs = window_clips(p.video, p.target, p.session.participant_id, T,
                               T, o.target);
        if (cs.empty()) continue;
        total += cs.size();
        const std::string id = p.session.participant_id;
        clips.emplace(id, std::move(cs));
        sessions.emplace(id, p.session);
      }
      ModelConfig mcfg;
      mcfg.T = T;
      mcfg.resolution = o.crop_res;
      mcfg.reduction = o.reduction;
      mcfg.channels = to_channels(o.channels);
      mcfg.validate();
      TrainConfig tcfg;
      tcfg.batch_size = o.batch;
      tcfg.epochs = o.epochs;
      tcfg.learning_rate = o.lr;
      tcfg.seeds = o.seeds;
      tcfg.target_kind = o.target;
      const ResultTable table =
          run_experiment<float>(sessions, clips, mcfg, tcfg, nullptr, o.workers);
      std::size_t failed = 0;
      for (const auto& c : table.cells) failed += c.failed ? 1 : 0;
      csv.write_row(T, total, table.mean_raw, table.std_raw, table.mean_tonic,
                    table.std_tonic, failed);
      std::printf("T=%zu: mean rho_raw %s, mean rho_tonic %s\n", T,
                  format_double(table.mean_raw).c_str(),
                  format_double(table.mean_tonic).c_str());
    } catch (const Error& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      csv.write_row(T, std::size_t{0}, nan, nan, nan, nan, std::size_t{0});
      std::fprintf(stderr, "warning: sweep T=%zu failed: %s\n", T, e.what());
    }
  }
  write_manifest(o.out, "sweep", sweep_config_json(o), o.seeds.front());
}

inline json stress_config_json(const CliOptions& o) {
  return json{{"source", o.source},       {"modes", o.modes},
              {"gb_rounds", o.gb_rounds}, {"gb_depth", o.gb_depth},
              {"gb_learning_rate", o.gb_lr}, {"seed", o.seed}};
}

inline void cmd_stress(const CliOptions& o) {
  std::vector<ParticipantWindows> parts;
  for (const fs::path& dir : discover_sessions(o.data_dir)) {
    const Session s = load_session(dir);
    if (o.source == "contact") {
      parts.push_back(featurize_session(s.participant_id, window_session(s)));
      continue;
    }
    // camera source: predicted arousal trend plus the video pulse estimate
    if (o.predictions.empty())
      throw ConfigError("stress: --predictions is required with --source camera");
    const fs::path pcsv =
        o.predictions / ("predictions_" + s.participant_id + ".csv");
    if (!fs::exists(pcsv))
      throw LoadError("missing " + pcsv.string() +
                      "; run the evaluate command first");
    Series pred = read_series_csv(pcsv, "arousal", 10.0, "a.u.");
    // windows past the last full model window hold the final trend value
    while (!pred.values.empty() && pred.duration_s() < s.duration_s())
      pred.values.push_back(pred.values.back());
    const VideoTensor video =
        preprocess_video(*s.face_frames, crop_config(o.crop_res), 10.0);
    const Series pulse = rppg_series(video);
    parts.push_back(featurize_session(
        s.participant_id,
        window_signals(pred, pulse, s.pinch_intervals, s.duration_s())));
  }

  fs::create_directories(o.out);
  write_stress_features_csv(o.out / "stress_features.csv", parts);

  GBConfig gb;
  gb.rounds = o.gb_rounds;
  gb.depth = o.gb_depth;
  gb.learning_rate = o.gb_lr;
  gb.seed = o.seed;

  std::vector<StressReport> reports;
  for (const std::string& mode_name : split_csv(o.modes)) {
    StressReport r = classify_stress(parts, parse_feature_mode(mode_name), gb);
    r.source = o.source;
    reports.push_back(std::move(r));
    std::printf("%s (%s): BACC %s, F1 %s\n", mode_name.c_str(),
                o.source.c_str(), format_double(reports.back().bacc).c_str(),
                format_double(reports.back().f1).c_str());
  }
  if (reports.empty()) throw ConfigError("stress: --modes selected nothing");
  write_stress_report_markdown(o.out / "stress_report.md", reports);
  write_stress_report_csv(o.out / "stress_report.csv", reports);
  write_manifest(o.out, "stress", stress_config_json(o), o.seed);
}

inline void append_csv_as_table(std::string& doc, const fs::path& csv) {
  const CsvTable t = read_csv(csv);
  auto row = [](const std::vector<std::string>& cells) {
    std::string r = "|";
    for (const auto& c : cells) r += " " + c + " |";
    return r + "\n";
  };
  doc += row(t.header);
  std::string sep = "|";
  for (std::size_t i = 0; i < t.header.size(); ++i) sep += "---|";
  doc += sep + "\n";
  for (const auto& r : t.rows) doc += row(r);
  doc += "\n";
}

inline void cmd_report(const CliOptions& o) {
  std::string doc = "# Run report\n\n";
  bool any = false;
  if (fs::exists(o.data_dir / "results.md")) {
    doc += read_text_file(o.data_dir / "results.md") + "\n";
    any = true;
  }
  if (fs::exists(o.data_dir / "sweep.csv")) {
    doc += "# Window length sweep\n\n";
    append_csv_as_table(doc, o.data_dir / "sweep.csv");
    any = true;
  }
  if (fs::exists(o.data_dir / "evaluation.csv")) {
    doc += "# Held-out evaluation\n\n";
    append_csv_as_table(doc, o.data_dir / "evaluation.csv");
    any = true;
  }
  if (fs::exists(o.data_dir / "stress_report.md")) {
    doc += read_text_file(o.data_dir / "stress_report.md") + "\n";
    any = true;
  }
  if (!any)
    throw LoadError("nothing to report under " + o.data_dir.string() +
                    " (expected results.md, sweep.csv, evaluation.csv or "
                    "stress_report.md)");
  if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
  write_text_file(o.out, doc);
  write_manifest(o.out.has_parent_path() ? o.out.parent_path() : fs::path("."),
                 "report", json{{"inputs", o.data_dir.string()}}, o.seed);
  std::printf("wrote %s\n", o.out.string().c_str());
}

// ---------------------------------------------------------------------------
// Config file merge: defaults < config file < explicit flags
// ---------------------------------------------------------------------------

struct KeyBinding {
  CLI::Option* opt = nullptr;  // null for config-only keys
  std::function<void(const json&)> apply;
};

using BindingMap = std::map<std::string, KeyBinding>;

inline void merge_config(const std::string& path, const BindingMap& keys) {
  const json j = read_json_file(path);
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = keys.find(key);
    if (it == keys.end())
      throw ConfigError("unknown config key for this command: " + key);
    if (it->second.opt && it->second.opt->count() > 0) continue;  // flag wins
    try {
      it->second.apply(value);
    } catch (const json::exception& e) {
      throw ConfigError("bad value for config key " + key + ": " + e.what());
    }
  }
}

}  // namespace cli_detail

inline int cli_main(int argc, char** argv) {
  using namespace cli_detail;
  CliOptions o;

  CLI::App app{"camera-based sympathetic arousal estimation pipeline"};
  app.require_subcommand(1);
  std::map<const CLI::App*, BindingMap> bindings;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config_file,
                    "JSON config file; explicit flags override its keys");
  };
  auto bind = [&](CLI::App* cmd, const std::string& key, CLI::Option* opt,
                  std::function<void(const json&)> apply) {
    bindings[cmd][key] = {opt, std::move(apply)};
  };

  // synth ------------------------------------------------------------------
  CLI::App* synth = app.add_subcommand("synth", "generate synthetic sessions");
  add_config(synth);
  synth->add_option("--out", o.out, "output directory")->required();
  bind(synth, "participants",
       synth->add_option("--participants", o.participants, "number of participants")
           ->capture_default_str(),
       [&](const json& v) { o.participants = v.get<std::size_t>(); });
  bind(synth, "duration_s",
       synth->add_option("--duration", o.duration_s, "session length in seconds")
           ->capture_default_str(),
       [&](const json& v) { o.duration_s = v.get<double>(); });
  bind(synth, "fs_video",
       synth->add_option("--fs-video", o.fs_video, "video rate, 10 or 100 Hz")
           ->capture_default_str(),
       [&](const json& v) { o.fs_video = v.get<double>(); });
  bind(synth, "fs_physio",
       synth->add_option("--fs-physio", o.fs_physio, "EDA/PPG rate in Hz")
           ->capture_default_str(),
       [&](const json& v) { o.fs_physio = v.get<double>(); });
  bind(synth, "resolution",
       synth->add_option("--res", o.synth_res, "frame height and width")
           ->capture_default_str(),
       [&](const json& v) { o.synth_res = v.get<std::size_t>(); });
  bind(synth, "noise_level",
       synth->add_option("--noise", o.noise_level, "per-pixel noise std")
           ->capture_default_str(),
       [&](const json& v) { o.noise_level = v.get<double>(); });
  CLI::Option* synth_seed =
      synth->add_option("--seed", o.seed, "generator seed")->capture_default_str();
  bind(synth, "seed", synth_seed,
       [&](const json& v) { o.seed = v.get<std::uint64_t>(); });

  // preprocess -------------------------------------------------------------
  CLI::App* prep =
      app.add_subcommand("preprocess", "crop, normalize and window sessions");
  add_config(prep);
  prep->add_option("data", o.data_dir, "session directory")->required();
  prep->add_option("--out", o.out,
                   "output directory (default: next to the sessions)");
  bind(prep, "T",
       prep->add_option("--T", o.T, "window length in frames")
           ->capture_default_str(),
       [&](const json& v) { o.T = v.get<std::size_t>(); });
  bind(prep, "stride",
       prep->add_option("--stride", o.stride, "window stride (0 = T)")
           ->capture_default_str(),
       [&](const json& v) { o.stride = v.get<std::size_t>(); });
  bind(prep, "resolution",
       prep->add_option("--res", o.crop_res, "crop resolution")
           ->capture_default_str(),
       [&](const json& v) { o.crop_res = v.get<std::size_t>(); });
  bind(prep, "target",
       prep->add_option("--target", o.target, "label series: raw or tonic")
           ->check(CLI::IsMember({"raw", "tonic"}))
           ->capture_default_str(),
       [&](const json& v) { o.target = v.get<std::string>(); });

  // shared train-like registration ----------------------------------------
  auto add_train_options = [&](CLI::App* cmd, bool scalar_T) {
    add_config(cmd);
    cmd->add_option("data", o.data_dir, "preprocessed session directory")
        ->required();
    cmd->add_option("--out", o.out, "output directory")->required();
    if (scalar_T)
      bind(cmd, "T",
           cmd->add_option("--T", o.T, "window length in frames")
               ->capture_default_str(),
           [&](const json& v) { o.T = v.get<std::size_t>(); });
    bind(cmd, "target",
         cmd->add_option("--target", o.target, "label series: raw or tonic")
             ->check(CLI::IsMember({"raw", "tonic"}))
             ->capture_default_str(),
         [&](const json& v) { o.target = v.get<std::string>(); });
    bind(cmd, "epochs",
         cmd->add_option("--epochs", o.epochs, "training epochs")
             ->capture_default_str(),
         [&](const json& v) { o.epochs = v.get<std::size_t>(); });
    bind(cmd, "batch_size",
         cmd->add_option("--batch", o.batch, "batch size")->capture_default_str(),
         [&](const json& v) { o.batch = v.get<std::size_t>(); });
    bind(cmd, "learning_rate",
         cmd->add_option("--lr", o.lr, "learning rate")->capture_default_str(),
         [&](const json& v) { o.lr = v.get<double>(); });
    bind(cmd, "workers",
         cmd->add_option("--workers", o.workers, "fold/seed parallelism")
             ->capture_default_str(),
         [&](const json& v) { o.workers = v.get<std::size_t>(); });
    CLI::Option* seed_opt =
        cmd->add_option("--seed", o.seed, "single training seed")
            ->capture_default_str();
    bind(cmd, "seed", seed_opt,
         [&](const json& v) { o.seed = v.get<std::uint64_t>(); });
    bind(cmd, "seeds", nullptr,
         [&](const json& v) { o.seeds = v.get<std::vector<std::uint64_t>>(); });
    bind(cmd, "channels", nullptr,
         [&](const json& v) { o.channels = v.get<std::vector<std::size_t>>(); });
    bind(cmd, "reduction", nullptr,
         [&](const json& v) { o.reduction = v.get<std::size_t>(); });
    return seed_opt;
  };

  CLI::App* train =
      app.add_subcommand("train", "LOSO training over preprocessed windows");
  CLI::Option* train_seed = add_train_options(train, true);

  CLI::App* sweep =
      app.add_subcommand("sweep", "train across several window lengths");
  CLI::Option* sweep_seed = add_train_options(sweep, false);
  bind(sweep, "T",
       sweep->add_option("--T", o.T_list, "comma-separated window lengths")
           ->delimiter(','),
       [&](const json& v) { o.T_list = v.get<std::vector<std::size_t>>(); });

  // evaluate ---------------------------------------------------------------
  CLI::App* eval =
      app.add_subcommand("evaluate", "score trained checkpoints on held-out data");
  add_config(eval);
  eval->add_option("data", o.data_dir, "preprocessed session directory")
      ->required();
  eval->add_option("--out", o.out, "output directory")->required();
  eval->add_option("--checkpoints", o.checkpoints, "checkpoint directory")
      ->required();
  bind(eval, "T",
       eval->add_option("--T", o.T, "window length in frames")
           ->capture_default_str(),
       [&](const json& v) { o.T = v.get<std::size_t>(); });
  bind(eval, "target",
       eval->add_option("--target", o.target, "label series: raw or tonic")
           ->check(CLI::IsMember({"raw", "tonic"}))
           ->capture_default_str(),
       [&](const json& v) { o.target = v.get<std::string>(); });
  bind(eval, "resolution",
       eval->add_option("--res", o.crop_res, "crop resolution")
           ->capture_default_str(),
       [&](const json& v) { o.crop_res = v.get<std::size_t>(); });
  CLI::Option* eval_seed =
      eval->add_option("--seed", o.seed, "checkpoint seed to score")
          ->capture_default_str();
  bind(eval, "seed", eval_seed,
       [&](const json& v) { o.seed = v.get<std::uint64_t>(); });

  // stress -----------------------------------------------------------------
  CLI::App* stress =
      app.add_subcommand("stress", "windowed physical stress classification");
  add_config(stress);
  stress->add_option("data", o.data_dir, "session directory")->required();
  stress->add_option("--out", o.out, "output directory")->required();
  bind(stress, "source",
       stress->add_option("--source", o.source, "signal source")
           ->check(CLI::IsMember({"contact", "camera"}))
           ->capture_default_str(),
       [&](const json& v) { o.source = v.get<std::string>(); });
  stress->add_option("--predictions", o.predictions,
                     "evaluate output directory (camera source)");
  bind(stress, "modes",
       stress->add_option("--modes", o.modes, "comma-separated feature modes")
           ->capture_default_str(),
       [&](const json& v) { o.modes = v.get<std::string>(); });
  bind(stress, "resolution",
       stress->add_option("--res", o.crop_res, "crop resolution (camera source)")
           ->capture_default_str(),
       [&](const json& v) { o.crop_res = v.get<std::size_t>(); });
  bind(stress, "gb_rounds", nullptr,
       [&](const json& v) { o.gb_rounds = v.get<int>(); });
  bind(stress, "gb_depth", nullptr,
       [&](const json& v) { o.gb_depth = v.get<int>(); });
  bind(stress, "gb_learning_rate", nullptr,
       [&](const json& v) { o.gb_lr = v.get<double>(); });
  CLI::Option* stress_seed =
      stress->add_option("--seed", o.seed, "classifier seed")->capture_default_str();
  bind(stress, "seed", stress_seed,
       [&](const json& v) { o.seed = v.get<std::uint64_t>(); });

  // report -----------------------------------------------------------------
  CLI::App* report =
      app.add_subcommand("report", "stitch result files into one summary");
  add_config(report);
  report->add_option("results", o.data_dir, "directory holding result files")
      ->required();
  report->add_option("--out", o.out, "output Markdown file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::fputs(app.help().c_str(), stderr);
    return 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    if (!o.config_file.empty()) merge_config(o.config_file, bindings[cmd]);

    // --seed wins over config "seeds"; default is one seed
    auto resolve_seeds = [&](CLI::Option* seed_opt) {
      if (seed_opt->count() > 0 || o.seeds.empty()) o.seeds = {o.seed};
    };
    if (cmd == train) resolve_seeds(train_seed);
    if (cmd == sweep) resolve_seeds(sweep_seed);

    if (cmd == synth) cmd_synth(o);
    else if (cmd == prep) cmd_preprocess(o);
    else if (cmd == train) cmd_train(o);
    else if (cmd == eval) cmd_evaluate(o, eval_seed->count() > 0);
    else if (cmd == sweep) cmd_sweep(o);
    else if (cmd == stress) cmd_stress(o);
    else if (cmd == report) cmd_report(o);
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace edacam
