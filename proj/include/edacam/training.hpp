#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <edacam/errors.hpp>
#include <edacam/evaluation.hpp>
#include <edacam/folds.hpp>
#include <edacam/io.hpp>
#include <edacam/model.hpp>
#include <edacam/preprocess.hpp>
#include <edacam/rng.hpp>

namespace edacam {

struct TrainConfig {
  std::size_t batch_size = 4;
  std::size_t epochs = 30;
  double learning_rate = 1e-3;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string target_kind = "raw";  // "raw" | "tonic"

  void validate() const {
    if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
    if (epochs == 0) throw ConfigError("train: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
    if (seeds.empty()) throw ConfigError("train: need at least one seed");
    if (target_kind != "raw" && target_kind != "tonic")
      throw ConfigError("train: target_kind must be raw or tonic");
  }
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct FoldHistory {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::string> trained_on;  // session ids seen in training batches
};

using ClipSet = std::map<std::string, std::vector<NormalizedClip>>;

template <typename S = float>
struct FoldOutcome {
  Model<S> model;
  FoldHistory history;
};

namespace training_detail {

template <typename S>
Tensor<S> batch_inputs(const std::vector<const NormalizedClip*>& clips,
                       std::size_t lo, std::size_t hi) {
  const auto& sh = clips[lo]->diff.shape();
  const std::size_t T = sh[0], H = sh[1], W = sh[2];
  Tensor<S> x({hi - lo, 3, T, H, W});
  for (std::size_t b = lo; b < hi; ++b) {
    const Tensor<float> one = clip_to_input(*clips[b]);
    S* dst = x.data() + (b - lo) * one.size();
    for (std::size_t i = 0; i < one.size(); ++i)
      dst[i] = static_cast<S>(one.data()[i]);
  }
  return x;
}

template <typename S>
Tensor<S> batch_labels(const std::vector<const NormalizedClip*>& clips,
                       std::size_t lo, std::size_t hi) {
  const std::size_t T = clips[lo]->labels.size();
  Tensor<S> y({hi - lo, T});
  for (std::size_t b = lo; b < hi; ++b)
    for (std::size_t t = 0; t < T; ++t)
      y.data()[(b - lo) * T + t] = static_cast<S>(clips[b]->labels[t]);
  return y;
}

// covers trainable parameters and the normalization running stats; restoring
// only the former would pair old weights with newer statistics
template <typename S>
std::vector<Tensor<S>> snapshot_state(Model<S>& model) {
  std::vector<Tensor<S>> snap;
  for (const auto& [name, value] : model_detail::state_slots(model))
    snap.push_back(*value);
  return snap;
}

template <typename S>
void restore_state(Model<S>& model, const std::vector<Tensor<S>>& snap) {
  std::size_t i = 0;
  for (auto& [name, value] : model_detail::state_slots(model)) *value = snap[i++];
}

}  // namespace training_detail

template <typename S = float>
FoldOutcome<S> train_fold(const FoldSplit& fold, const ClipSet& clips,
                          ModelConfig mcfg, const TrainConfig& tcfg,
                          std::uint64_t seed) {
  tcfg.validate();
  if (fold.test_id == fold.val_id)
    throw ConfigError("train_fold: test and validation participant coincide");
  for (const auto& id : fold.train_ids)
    if (id == fold.test_id || id == fold.val_id)
      throw ConfigError("train_fold: leaking participant " + id +
                        " into the training set");

  auto gather = [&](const std::vector<std::string>& ids) {
    std::vector<const NormalizedClip*> out;
    for (const auto& id : ids) {
      const auto it = clips.find(id);
      if (it == clips.end())
        throw ConfigError("train_fold: no clips for participant " + id);
      for (const auto& c : it->second) {
        const auto& sh = c.diff.shape();
        if (sh[0] != mcfg.T || sh[1] != mcfg.resolution || sh[2] != mcfg.resolution)
          throw InputError("train_fold: clip shape does not match the model config");
        if (!c.target_kind.empty() && c.target_kind != tcfg.target_kind)
          throw InputError("train_fold: clip labels are " + c.target_kind +
                           " but the run trains on " + tcfg.target_kind);
        out.push_back(&c);
      }
    }
    return out;
  };
  const std::vector<const NormalizedClip*> train = gather(fold.train_ids);
  const std::vector<const NormalizedClip*> val = gather({fold.val_id});
  if (train.empty()) throw InsufficientDataError("train_fold: no training clips");
  if (val.empty()) throw InsufficientDataError("train_fold: no validation clips");

  mcfg.seed = Rng::mix(seed, 0x5eed);
  Model<S> model(mcfg);
  nn::Adam<S> opt(tcfg.learning_rate);
  opt.attach(model.params());
  nn::MseLoss<S> loss;

  FoldHistory hist;
  {
    std::set<std::string> seen;
    for (const auto* c : train) seen.insert(c->session_id);
    hist.trained_on.assign(seen.begin(), seen.end());
  }
  std::vector<Tensor<S>> best = training_detail::snapshot_state(model);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto run_batches = [&](const std::vector<const NormalizedClip*>& set,
                         const std::vector<std::size_t>* perm, bool training,
                         std::size_t epoch) {
    double total = 0.0;
    std::size_t count = 0;
    std::vector<const NormalizedClip*> batch;
    for (std::size_t lo = 0; lo < set.size(); lo += tcfg.batch_size) {
      const std::size_t hi = std::min(set.size(), lo + tcfg.batch_size);
      batch.clear();
      for (std::size_t i = lo; i < hi; ++i)
        batch.push_back(perm ? set[(*perm)[i]] : set[i]);
      const Tensor<S> x = training_detail::batch_inputs<S>(batch, 0, batch.size());
      const Tensor<S> y = training_detail::batch_labels<S>(batch, 0, batch.size());
      const Tensor<S> pred = model.forward(x, training);
      const double l = static_cast<double>(loss.forward(pred, y));
      if (!std::isfinite(l))
        throw TrainingError(
            "train_fold: non-finite loss at epoch " + std::to_string(epoch) +
            ", batch " + std::to_string(lo / tcfg.batch_size) + ", lr " +
            format_double(tcfg.learning_rate) + "; lower the learning rate or " +
            "inspect the input windows");
      if (training) {
        opt.zero_grad();
        model.backward(loss.backward());
        opt.step();
      }
      total += l * static_cast<double>(batch.size());
      count += batch.size();
    }
    return total / static_cast<double>(count);
  };

  for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::mix(seed, 0xba7c + epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng.next() % i);
      std::swap(order[i - 1], order[j]);
    }
    EpochStats st;
    st.train_loss = run_batches(train, &order, true, epoch);
    st.val_loss = run_batches(val, nullptr, false, epoch);
    if (st.val_loss < hist.best_val) {
      hist.best_val = st.val_loss;
      hist.best_epoch = epoch;
      best = training_detail::snapshot_state(model);
    }
    hist.epochs.push_back(st);
  }

  training_detail::restore_state(model, best);
  return FoldOutcome<S>{std::move(model), std::move(hist)};
}

struct ExperimentCell {
  std::string participant;
  std::uint64_t seed = 0;
  double rho_raw = std::numeric_limits<double>::quiet_NaN();
  double rho_tonic = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string error;
};

struct ResultTable {
  std::vector<ExperimentCell> cells;
  std::vector<double> per_seed_mean_raw, per_seed_mean_tonic;
  double mean_raw = std::numeric_limits<double>::quiet_NaN();
  double std_raw = 0.0;
  double mean_tonic = std::numeric_limits<double>::quiet_NaN();
  double std_tonic = 0.0;
  int leakage_checks = 0;
};

// across-participant mean per seed, then mean and sample STD across seeds
inline std::pair<double, double> mean_std_across_seeds(
    const std::vector<double>& per_seed_means) {
  if (per_seed_means.empty())
    return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  double m = 0.0;
  for (double v : per_seed_means) m += v;
  m /= static_cast<double>(per_seed_means.size());
  double sd = 0.0;
  if (per_seed_means.size() > 1) {
    double acc = 0.0;
    for (double v : per_seed_means) acc += (v - m) * (v - m);
    sd = std::sqrt(acc / static_cast<double>(per_seed_means.size() - 1));
  }
  return {m, sd};
}

inline void aggregate_results(ResultTable& table,
                              const std::vector<std::uint64_t>& seeds) {
  table.per_seed_mean_raw.clear();
  table.per_seed_mean_tonic.clear();
  for (const std::uint64_t seed : seeds) {
    double sr = 0.0, st = 0.0;
    int n = 0;
    for (const auto& c : table.cells) {
      if (c.seed != seed || c.failed) continue;
      sr += c.rho_raw;
      st += c.rho_tonic;
      ++n;
    }
    if (n == 0) continue;  // every fold of this seed failed
    table.per_seed_mean_raw.push_back(sr / n);
    table.per_seed_mean_tonic.push_back(st / n);
  }
  std::tie(table.mean_raw, table.std_raw) =
      mean_std_across_seeds(table.per_seed_mean_raw);
  std::tie(table.mean_tonic, table.std_tonic) =
      mean_std_across_seeds(table.per_seed_mean_tonic);
}

template <typename S = float>
ResultTable run_experiment(const std::map<std::string, Session>& sessions,
                           const ClipSet& clips, const ModelConfig& mcfg,
                           const TrainConfig& tcfg,
                           const std::filesystem::path* checkpoint_dir = nullptr,
                           std::size_t workers = 1) {
  tcfg.validate();
  if (workers == 0) throw ConfigError("run_experiment: workers must be >= 1");
  std::vector<std::string> ids;
  for (const auto& [id, _] : clips) ids.push_back(id);
  const std::vector<FoldSplit> folds = loso_splits(ids);

  std::map<std::string, Series> tonic_cache;
  std::mutex tonic_mu;
  auto tonic_for = [&](const std::string& id) -> const Series& {
    std::lock_guard<std::mutex> lock(tonic_mu);
    auto it = tonic_cache.find(id);
    if (it == tonic_cache.end())
      it = tonic_cache.emplace(id, decompose_tonic(sessions.at(id).eda).tonic).first;
    return it->second;
  };

  struct Job {
    const FoldSplit* fold;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const std::uint64_t seed : tcfg.seeds)
    for (const auto& fold : folds) jobs.push_back({&fold, seed});

  ResultTable table;
  table.cells.resize(jobs.size());
  std::atomic<int> leakage_checks{0};

  auto run_cell = [&](const Job& job) {
    ExperimentCell cell;
    cell.participant = job.fold->test_id;
    cell.seed = job.seed;
    try {
      FoldOutcome<S> out = train_fold<S>(*job.fold, clips, mcfg, tcfg, job.seed);
      for (const auto& id : out.history.trained_on)
        if (id == job.fold->test_id)
          throw TrainingError("run_experiment: test participant " + id +
                              " leaked into training");
      ++leakage_checks;

      std::vector<const NormalizedClip*> test_clips;
      for (const auto& c : clips.at(job.fold->test_id)) test_clips.push_back(&c);
      std::sort(test_clips.begin(), test_clips.end(),
                [](const NormalizedClip* a, const NormalizedClip* b) {
                  return a->start < b->start;
                });
      std::vector<double> preds;
      for (const auto* c : test_clips) {
        const std::vector<double> y = forward(out.model, *c);
        preds.insert(preds.end(), y.begin(), y.end());
      }
      const EvalResult ev =
          evaluate_participant(preds, sessions.at(job.fold->test_id),
                               tcfg.target_kind, 10.0, mcfg.T,
                               &tonic_for(job.fold->test_id));
      cell.rho_raw = ev.rho_raw;
      cell.rho_tonic = ev.rho_tonic;
      if (checkpoint_dir) {
        const std::filesystem::path p =
            *checkpoint_dir / ("fold_" + job.fold->test_id + "_seed" +
                               std::to_string(job.seed) + ".ckpt");
        save_checkpoint(p, out.model);
      }
    } catch (const Error& e) {
      cell.failed = true;
      cell.error = e.what();
      std::fprintf(stderr,
                   "warning: fold %s seed %llu failed and is excluded: %s\n",
                   job.fold->test_id.c_str(),
                   static_cast<unsigned long long>(job.seed), e.what());
    }
    return cell;
  };

  if (workers <= 1 || jobs.size() <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) table.cells[i] = run_cell(jobs[i]);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < jobs.size();
           i = next.fetch_add(1))
        table.cells[i] = run_cell(jobs[i]);
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, jobs.size()); ++w)
      pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  table.leakage_checks = leakage_checks.load();
  aggregate_results(table, tcfg.seeds);
  return table;
}

inline void write_results_csv(const std::filesystem::path& path,
                              const ResultTable& table) {
  CsvWriter w(path, {"participant", "seed", "rho_raw", "rho_tonic"});
  for (const auto& c : table.cells)
    w.write_row(c.participant, c.seed, c.rho_raw, c.rho_tonic);
}

inline void write_results_markdown(const std::filesystem::path& path,
                                   const ResultTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write summary: " + path.string());
  out << "# Arousal prediction summary\n\n";
  out << "| participant | seed | rho_raw | rho_tonic |\n";
  out << "|---|---|---|---|\n";
  for (const auto& c : table.cells) {
    if (c.failed) {
      out << "| " << c.participant << " | " << c.seed << " | failed | failed |\n";
      continue;
    }
    out << "| " << c.participant << " | " << c.seed << " | "
        << format_double(c.rho_raw) << " | " << format_double(c.rho_tonic)
        << " |\n";
  }
  out << "\nmean rho_raw: " << format_double(table.mean_raw) << " +/- "
      << format_double(table.std_raw) << " (STD across seeds)\n";
  out << "mean rho_tonic: " << format_double(table.mean_tonic) << " +/- "
      << format_double(table.std_tonic) << " (STD across seeds)\n";
}

}  // namespace edacam
