#pragma once

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <edacam/dataset.hpp>
#include <edacam/eda.hpp>
#include <edacam/errors.hpp>
#include <edacam/io.hpp>
#include <edacam/preprocess.hpp>
#include <edacam/signal.hpp>
#include <edacam/stats.hpp>

namespace edacam {

struct EvalResult {
  std::string participant_id;
  double rho_raw = std::numeric_limits<double>::quiet_NaN();
  double rho_tonic = std::numeric_limits<double>::quiet_NaN();
  double rho_motion = std::numeric_limits<double>::quiet_NaN();
  std::size_t window_T = 0;
  bool motion_applicable = false;
};

// Predictions live in the difference domain; the trend is rebuilt by a
// cumulative sum before rank correlation against the raw EDA and its tonic
// component at the video rate. The mean difference is removed first: the
// per-window scale normalization of the training target already gives up
// absolute drift, and integrating an uncorrected mean offset over thousands
// of frames buries the trajectory shape under a linear ramp. Constant
// predictions raise UndefinedCorrelationError for the caller to mark the
// fold degenerate.
inline EvalResult evaluate_participant(const std::vector<double>& predictions,
                                       const Session& session,
                                       const std::string& target_kind,
                                       double fs_video = 10.0,
                                       std::size_t window_T = 0,
                                       const Series* tonic_hint = nullptr) {
  if (predictions.size() < 3)
    throw InsufficientDataError("evaluate_participant: need at least 3 predictions");
  if (target_kind != "raw" && target_kind != "tonic")
    throw ConfigError("evaluate_participant: target_kind must be raw or tonic");
  const bool constant = std::all_of(predictions.begin(), predictions.end(),
                                    [&](double v) { return v == predictions.front(); });
  if (constant)
    throw UndefinedCorrelationError("evaluate_participant: constant prediction");

  std::vector<double> centered = predictions;
  const double mean_diff =
      std::accumulate(centered.begin(), centered.end(), 0.0) /
      static_cast<double>(centered.size());
  for (double& v : centered) v -= mean_diff;
  const std::vector<double> cum = cumulative_sum(centered);
  std::vector<double> raw(cum.size()), tonic(cum.size());
  Series tonic_own;
  if (!tonic_hint) {
    tonic_own = decompose_tonic(session.eda).tonic;
    tonic_hint = &tonic_own;
  }
  for (std::size_t i = 0; i < cum.size(); ++i) {
    const double t = static_cast<double>(i + 1) / fs_video;
    raw[i] = sample_at(session.eda, t);
    tonic[i] = sample_at(*tonic_hint, t);
  }

  EvalResult r;
  r.participant_id = session.participant_id;
  r.window_T = window_T ? window_T : predictions.size();
  r.rho_raw = spearman(cum, raw);
  r.rho_tonic = spearman(cum, tonic);
  return r;
}

// Camera pulse estimate: mean green level of a forehead band (default the
// upper third of the crop), projected onto the cardiac band. The flat-gain
// projection matters because a biquad's passband slope would re-modulate the
// amplitude as the pulse rate drifts across the band.
inline Series rppg_series(const VideoTensor& video, cv::Rect roi = cv::Rect()) {
  const std::size_t n = video.frames();
  if (n < 2) throw InsufficientDataError("rppg_series: need at least 2 frames");
  if (roi == cv::Rect()) roi = cv::Rect(0, 0, video.width(), video.height() / 3);
  if (roi.area() <= 0 || roi.x < 0 || roi.y < 0 ||
      roi.x + roi.width > video.width() || roi.y + roi.height > video.height())
    throw InputError("rppg_series: ROI empty or outside the frame");

  std::vector<double> green(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int y = roi.y; y < roi.y + roi.height; ++y)
      for (int x = roi.x; x < roi.x + roi.width; ++x)
        acc += video.data(i, static_cast<std::size_t>(y), static_cast<std::size_t>(x), 1);
    green[i] = acc / static_cast<double>(roi.area());
  }
  Series pulse;
  pulse.fs = video.fs;
  pulse.units = "a.u.";
  pulse.values = project_onto_band(green, video.fs, 0.7, 2.5);
  return pulse;
}

// Signal-processing baseline: camera pulse amplitude envelope as the arousal
// estimate (sliding 30 s std, stepped every 10 s).
inline Series baseline_bpa(const VideoTensor& video, cv::Rect roi = cv::Rect()) {
  const std::vector<double> pulse = rppg_series(video, roi).values;

  const std::size_t win = static_cast<std::size_t>(30.0 * video.fs);
  const std::size_t step = static_cast<std::size_t>(10.0 * video.fs);
  if (pulse.size() < win)
    throw InsufficientDataError("baseline_bpa: need at least 30 s of video");
  Series env;
  env.fs = 0.1;
  env.units = "a.u.";
  for (std::size_t start = 0; start + win <= pulse.size(); start += step) {
    double m = 0.0;
    for (std::size_t i = start; i < start + win; ++i) m += pulse[i];
    m /= static_cast<double>(win);
    double var = 0.0;
    for (std::size_t i = start; i < start + win; ++i) {
      const double d = pulse[i] - m;
      var += d * d;
    }
    env.values.push_back(std::sqrt(var / static_cast<double>(win)));
  }
  return env;
}

// Rank correlation between the cumulative prediction and the frame-to-frame
// flow magnitude. A numerically static video has no meaningful motion
// ranking, so it is reported as non-applicable via the undefined-correlation
// policy.
inline double motion_probe(const std::vector<double>& predictions,
                           const VideoTensor& video) {
  const Series flow = optical_flow_magnitude(video);
  double peak = 0.0;
  for (double v : flow.values) peak = std::max(peak, std::fabs(v));
  if (peak < 1e-4)
    throw UndefinedCorrelationError("motion_probe: video is static");
  const std::vector<double> cum = cumulative_sum(predictions);
  const std::size_t m = std::min(cum.size(), flow.values.size());
  if (m < 3) throw InsufficientDataError("motion_probe: too few common samples");
  const std::vector<double> a(cum.begin(), cum.begin() + static_cast<long>(m));
  const std::vector<double> b(flow.values.begin(),
                              flow.values.begin() + static_cast<long>(m));
  return spearman(a, b);
}

inline void write_eval_csv(const std::filesystem::path& path,
                           const std::vector<EvalResult>& results) {
  CsvWriter w(path, {"participant", "window_T", "rho_raw", "rho_tonic", "rho_motion",
                     "motion_applicable"});
  for (const auto& r : results)
    w.write_row(r.participant_id, r.window_T, r.rho_raw, r.rho_tonic, r.rho_motion,
                r.motion_applicable ? 1 : 0);
}

// prediction-vs-target trace plot, one PNG per participant
inline void save_comparison_plot(const std::filesystem::path& path,
                                 const std::vector<double>& prediction,
                                 const std::vector<double>& target,
                                 const std::string& title) {
  const int W = 900, H = 320, pad = 30;
  cv::Mat img(H, W, CV_8UC3, cv::Scalar(255, 255, 255));
  auto draw = [&](const std::vector<double>& v, cv::Scalar color) {
    if (v.size() < 2) return;
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    if (hi - lo < 1e-12) hi = lo + 1.0;
    cv::Point prev;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const int x = pad + static_cast<int>((W - 2.0 * pad) * static_cast<double>(i) /
                                           static_cast<double>(v.size() - 1));
      const int y = H - pad -
                    static_cast<int>((H - 2.0 * pad) * (v[i] - lo) / (hi - lo));
      const cv::Point p(x, y);
      if (i) cv::line(img, prev, p, color, 1, cv::LINE_AA);
      prev = p;
    }
  };
  cv::rectangle(img, {pad, pad}, {W - pad, H - pad}, cv::Scalar(200, 200, 200));
  draw(target, cv::Scalar(60, 60, 200));
  draw(prediction, cv::Scalar(200, 90, 30));
  cv::putText(img, title, {pad, pad - 8}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
              cv::Scalar(30, 30, 30), 1, cv::LINE_AA);
  if (!cv::imwrite(path.string(), img))
    throw LoadError("cannot write plot: " + path.string());
}

}  // namespace edacam
