#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <edacam/dataset.hpp>
#include <edacam/errors.hpp>
#include <edacam/folds.hpp>
#include <edacam/gboost.hpp>
#include <edacam/io.hpp>
#include <edacam/signal.hpp>
#include <edacam/stats.hpp>

namespace edacam {

constexpr double kStressWindowSeconds = 30.0;
constexpr int kWindowsPerSession = 19;
constexpr double kPeakRefractorySeconds = 1.0 / 3.0;

struct StressWindow {
  double start_s = 0.0;
  double duration_s = kStressWindowSeconds;
  bool stress = false;
  Series eda;  // arousal-like slice covering the window
  Series ppg;  // cardiac slice covering the window
};

// Half-open slice [t0, t1) on the series' own sample grid.
inline Series slice_series(const Series& s, double t0, double t1) {
  validate_series(s, "slice_series");
  const auto n = static_cast<long long>(s.values.size());
  long long i0 = std::llround(t0 * s.fs);
  long long i1 = std::llround(t1 * s.fs);
  i0 = std::clamp<long long>(i0, 0, n);
  i1 = std::clamp<long long>(i1, i0, n);
  Series out;
  out.fs = s.fs;
  out.units = s.units;
  out.values.assign(s.values.begin() + i0, s.values.begin() + i1);
  return out;
}

// Cuts 19 consecutive 30 s windows; a window is labeled stress when at
// least half of it lies inside a pinch interval.
inline std::vector<StressWindow> window_signals(
    const Series& eda_like, const Series& ppg_like,
    const std::vector<std::pair<double, double>>& pinches, double duration_s) {
  if (std::abs(duration_s - 570.0) > 1.0)
    throw ProtocolError("window_signals: session duration " +
                        std::to_string(duration_s) +
                        " s outside the 570 +/- 1 s protocol");
  std::vector<StressWindow> windows;
  windows.reserve(kWindowsPerSession);
  for (int k = 0; k < kWindowsPerSession; ++k) {
    StressWindow w;
    w.start_s = kStressWindowSeconds * k;
    const double end_s = w.start_s + kStressWindowSeconds;
    double covered = 0.0;
    for (const auto& [a, b] : pinches)
      covered += std::max(0.0, std::min(b, end_s) - std::max(a, w.start_s));
    w.stress = covered >= 0.5 * kStressWindowSeconds;
    w.eda = slice_series(eda_like, w.start_s, end_s);
    w.ppg = slice_series(ppg_like, w.start_s, end_s);
    windows.push_back(std::move(w));
  }
  return windows;
}

inline std::vector<StressWindow> window_session(const Session& s) {
  return window_signals(s.eda, s.ppg, s.pinch_intervals, s.duration_s());
}

// ---------------------------------------------------------------------------
// Pulse peak picking

struct PeakDetection {
  std::vector<double> peak_times;  // seconds from slice start
  std::vector<double> nn;          // successive peak gaps, seconds
};

// Band-pass then local maxima above zero; of the candidates closer together
// than the refractory period the earliest wins, which keeps the result
// deterministic and bounds the implied heart rate at 180 bpm.
inline PeakDetection detect_peaks(const Series& ppg, double f_lo = 0.7,
                                  double f_hi = 2.5,
                                  double refractory_s = kPeakRefractorySeconds) {
  validate_series(ppg, "detect_peaks");
  if (ppg.fs < 8.0)
    throw InputError("detect_peaks: sampling rate below 8 Hz");
  const auto [x_lo, x_hi] =
      std::minmax_element(ppg.values.begin(), ppg.values.end());
  const double ptp = *x_hi - *x_lo;
  if (ptp <= 0.0)
    throw InsufficientDataError("detect_peaks: flat input carries no pulse");
  const Biquad q = butter_bandpass(f_lo, f_hi, ppg.fs);
  const std::vector<double> y = filtfilt(q, ppg.values);
  // the amplitude floor keeps filter roundoff from registering as peaks
  const double floor = 1e-9 * ptp;
  PeakDetection out;
  double last = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > floor)) continue;
    const double t = static_cast<double>(i) / ppg.fs;
    if (t - last < refractory_s) continue;
    out.peak_times.push_back(t);
    last = t;
  }
  if (out.peak_times.size() < 2)
    throw InsufficientDataError("detect_peaks: fewer than 2 peaks in window");
  out.nn.resize(out.peak_times.size() - 1);
  for (std::size_t i = 0; i + 1 < out.peak_times.size(); ++i)
    out.nn[i] = out.peak_times[i + 1] - out.peak_times[i];
  return out;
}

// ---------------------------------------------------------------------------
// Per-window features

struct StressFeatureVector {
  double mu_hr = 0.0;
  double min_hr = 0.0;
  double max_hr = 0.0;
  double mu_hr_change = 0.0;
  double sdnn = 0.0;
  double mu_eda = 0.0;
  double sigma_eda = 0.0;
  double min_eda = 0.0;
  double max_eda = 0.0;
  double mu_eda_change = 0.0;
  bool hr_missing = false;  // too few pulse peaks; imputed at training time
};

inline constexpr std::array<const char*, 10> kStressFeatureNames = {
    "mu_hr",  "min_hr",    "max_hr",  "mu_hr_change", "sdnn",
    "mu_eda", "sigma_eda", "min_eda", "max_eda",      "mu_eda_change"};

inline double mean_abs_diff(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) s += std::abs(x[i + 1] - x[i]);
  return s / static_cast<double>(x.size() - 1);
}

inline StressFeatureVector extract_features(const StressWindow& w) {
  StressFeatureVector f;
  const auto& e = w.eda.values;
  if (e.size() < 2)
    throw InsufficientDataError("extract_features: EDA slice too short");
  f.mu_eda = mean(e);
  f.sigma_eda = stddev(e, 0);
  const auto [e_lo, e_hi] = std::minmax_element(e.begin(), e.end());
  f.min_eda = *e_lo;
  f.max_eda = *e_hi;
  f.mu_eda_change = mean_abs_diff(e);

  try {
    const PeakDetection pk = detect_peaks(w.ppg);
    std::vector<double> hr(pk.nn.size());
    for (std::size_t i = 0; i < pk.nn.size(); ++i) hr[i] = 60.0 / pk.nn[i];
    f.mu_hr = mean(hr);
    const auto [h_lo, h_hi] = std::minmax_element(hr.begin(), hr.end());
    f.min_hr = *h_lo;
    f.max_hr = *h_hi;
    f.mu_hr_change = mean_abs_diff(hr);
    f.sdnn = stddev(pk.nn, 0);
  } catch (const InsufficientDataError&) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    f.mu_hr = f.min_hr = f.max_hr = f.mu_hr_change = f.sdnn = nan;
    f.hr_missing = true;
  }
  return f;
}

inline std::array<double, 10> feature_row(const StressFeatureVector& f) {
  return {f.mu_hr,  f.min_hr,    f.max_hr,  f.mu_hr_change, f.sdnn,
          f.mu_eda, f.sigma_eda, f.min_eda, f.max_eda,      f.mu_eda_change};
}

// ---------------------------------------------------------------------------
// Classification

enum class FeatureMode { ppg_only, eda_only, both };

inline const char* to_string(FeatureMode m) {
  switch (m) {
    case FeatureMode::ppg_only: return "ppg_only";
    case FeatureMode::eda_only: return "eda_only";
    case FeatureMode::both: return "both";
  }
  return "?";
}

inline FeatureMode parse_feature_mode(const std::string& s) {
  if (s == "ppg_only") return FeatureMode::ppg_only;
  if (s == "eda_only") return FeatureMode::eda_only;
  if (s == "both") return FeatureMode::both;
  throw ConfigError("feature mode must be ppg_only, eda_only or both");
}

struct ParticipantWindows {
  std::string participant;
  std::vector<StressFeatureVector> features;
  std::vector<int> labels;  // 1 = stress, 0 = rest
};

inline ParticipantWindows featurize_session(const std::string& participant,
                                            const std::vector<StressWindow>& ws) {
  ParticipantWindows out;
  out.participant = participant;
  for (const auto& w : ws) {
    out.features.push_back(extract_features(w));
    out.labels.push_back(w.stress ? 1 : 0);
  }
  return out;
}

struct Confusion {
  long long tp = 0, fp = 0, tn = 0, fn = 0;
  long long total() const { return tp + fp + tn + fn; }
};

inline double balanced_accuracy(const Confusion& c) {
  if (c.tp + c.fn == 0 || c.tn + c.fp == 0)
    throw InputError("balanced_accuracy: needs both classes in the truth");
  const double recall_stress =
      static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double recall_rest =
      static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return 0.5 * (recall_stress + recall_rest);
}

// F1 of the stress-positive class.
inline double f1_stress(const Confusion& c) {
  const long long denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

struct StressFoldResult {
  std::string test_participant;
  Confusion confusion;
  std::size_t imputed_train = 0;
  std::size_t imputed_test = 0;
};

struct StressReport {
  FeatureMode mode = FeatureMode::both;
  std::string source = "contact";  // which signals fed the features
  Confusion pooled;
  double bacc = 0.0;
  double f1 = 0.0;
  std::vector<StressFoldResult> folds;
};

namespace detail {

inline std::vector<std::size_t> mode_columns(FeatureMode m) {
  switch (m) {
    case FeatureMode::ppg_only: return {0, 1, 2, 3, 4};
    case FeatureMode::eda_only: return {5, 6, 7, 8, 9};
    case FeatureMode::both: return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  }
  return {};
}

// Replaces non-finite cells with the per-column median over the finite
// training cells. Returns how many train/test rows were touched.
inline std::pair<std::size_t, std::size_t> impute_with_train_median(
    std::vector<std::vector<double>>& train, std::vector<std::vector<double>>& test) {
  const std::size_t d = train.empty() ? 0 : train[0].size();
  std::vector<double> fill(d);
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<double> finite;
    for (const auto& row : train)
      if (std::isfinite(row[c])) finite.push_back(row[c]);
    if (finite.empty())
      throw InsufficientDataError(
          "classify_stress: a feature column has no usable training values");
    fill[c] = median(finite);
  }
  auto patch = [&](std::vector<std::vector<double>>& rows) {
    std::size_t touched = 0;
    for (auto& row : rows) {
      bool hit = false;
      for (std::size_t c = 0; c < d; ++c)
        if (!std::isfinite(row[c])) {
          row[c] = fill[c];
          hit = true;
        }
      touched += hit ? 1 : 0;
    }
    return touched;
  };
  return {patch(train), patch(test)};
}

}  // namespace detail

// Leave-one-subject-out gradient boosting over the windowed features. The
// splitter's validation slot is unused here (no early stopping), so the
// holdout participant joins the training pool.
inline StressReport classify_stress(const std::vector<ParticipantWindows>& data,
                                    FeatureMode mode, const GBConfig& gb = {}) {
  std::vector<std::string> ids;
  for (const auto& p : data) {
    if (p.features.size() != p.labels.size())
      throw InputError("classify_stress: feature/label count mismatch for " +
                       p.participant);
    if (p.features.empty())
      throw InsufficientDataError("classify_stress: no windows for " +
                                  p.participant);
    ids.push_back(p.participant);
  }
  const std::vector<FoldSplit> folds = loso_splits(ids);
  const std::vector<std::size_t> cols = detail::mode_columns(mode);

  StressReport report;
  report.mode = mode;
  for (const auto& fold : folds) {
    std::vector<std::vector<double>> train_x, test_x;
    std::vector<int> train_y, test_y;
    for (const auto& p : data) {
      const bool is_test = p.participant == fold.test_id;
      for (std::size_t i = 0; i < p.features.size(); ++i) {
        const std::array<double, 10> full = feature_row(p.features[i]);
        std::vector<double> row(cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) row[c] = full[cols[c]];
        (is_test ? test_x : train_x).push_back(std::move(row));
        (is_test ? test_y : train_y).push_back(p.labels[i]);
      }
    }

    StressFoldResult fr;
    fr.test_participant = fold.test_id;
    std::tie(fr.imputed_train, fr.imputed_test) =
        detail::impute_with_train_median(train_x, test_x);

    GradientBoostedClassifier clf(gb);
    clf.fit(train_x, train_y);  // throws on a single-class training fold
    for (std::size_t i = 0; i < test_x.size(); ++i) {
      const int pred = clf.predict(test_x[i]);
      if (test_y[i] == 1)
        (pred == 1 ? fr.confusion.tp : fr.confusion.fn)++;
      else
        (pred == 1 ? fr.confusion.fp : fr.confusion.tn)++;
    }
    report.pooled.tp += fr.confusion.tp;
    report.pooled.fp += fr.confusion.fp;
    report.pooled.tn += fr.confusion.tn;
    report.pooled.fn += fr.confusion.fn;
    report.folds.push_back(std::move(fr));
  }
  report.bacc = balanced_accuracy(report.pooled);
  report.f1 = f1_stress(report.pooled);
  return report;
}

// ---------------------------------------------------------------------------
// Export

inline void write_stress_features_csv(const std::filesystem::path& path,
                                      const std::vector<ParticipantWindows>& data) {
  std::vector<std::string> header = {"participant", "window_idx", "label"};
  for (const char* name : kStressFeatureNames) header.emplace_back(name);
  CsvWriter csv(path, header);
  for (const auto& p : data) {
    for (std::size_t i = 0; i < p.features.size(); ++i) {
      std::vector<std::string> row = {p.participant, std::to_string(i),
                                      p.labels[i] ? "stress" : "rest"};
      for (double v : feature_row(p.features[i])) row.push_back(format_double(v));
      csv.write_row_strings(row);
    }
  }
}

inline void write_stress_report_markdown(const std::filesystem::path& path,
                                         const std::vector<StressReport>& reports) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  out << "# Physical stress classification\n\n";
  out << "| features | source | BACC | F1 (stress) |\n";
  out << "|---|---|---|---|\n";
  for (const auto& r : reports)
    out << "| " << to_string(r.mode) << " | " << r.source << " | "
        << format_double(r.bacc) << " | " << format_double(r.f1) << " |\n";
  out << "\nBACC is the mean of per-class recalls over the pooled "
         "leave-one-subject-out test predictions.\n";
}

inline void write_stress_report_csv(const std::filesystem::path& path,
                                    const std::vector<StressReport>& reports) {
  CsvWriter csv(path, {"features", "source", "bacc", "f1_stress", "tp", "fp",
                       "tn", "fn"});
  for (const auto& r : reports)
    csv.write_row_strings({to_string(r.mode), r.source, format_double(r.bacc),
                           format_double(r.f1), std::to_string(r.pooled.tp),
                           std::to_string(r.pooled.fp), std::to_string(r.pooled.tn),
                           std::to_string(r.pooled.fn)});
}

}  // namespace edacam
