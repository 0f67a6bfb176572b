#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/imgproc.hpp>
#include <opencv2/objdetect.hpp>
#include <opencv2/video/tracking.hpp>

#include "edacam/dataset.hpp"
#include "edacam/tensor.hpp"
#include "edacam/version.hpp"

namespace edacam {

// ---------------------------------------------------------------------------
// Video tensors
// ---------------------------------------------------------------------------

struct VideoTensor {
  Tensor<float> data;  // (N, H, W, 3)
  double fs = 0.0;

  std::size_t frames() const { return data.rank() ? data.dim(0) : 0; }
  int height() const { return static_cast<int>(data.dim(1)); }
  int width() const { return static_cast<int>(data.dim(2)); }

  cv::Mat frame_mat(std::size_t i) {
    return cv::Mat(height(), width(), CV_32FC3,
                   data.data() + i * data.dim(1) * data.dim(2) * 3);
  }
  cv::Mat frame_mat(std::size_t i) const {
    return cv::Mat(height(), width(), CV_32FC3,
                   const_cast<float*>(data.data() + i * data.dim(1) * data.dim(2) * 3));
  }
};

inline VideoTensor read_all_frames(const FrameSource& src) {
  VideoTensor v;
  v.fs = src.fs();
  v.data = Tensor<float>({src.count(), static_cast<std::size_t>(src.height()),
                          static_cast<std::size_t>(src.width()), 3});
  for (std::size_t i = 0; i < src.count(); ++i)
    src.read_frame(i, v.data.data() + i * src.frame_elems());
  return v;
}

// Stride decimation: keep every (fs_in/fs_out)-th frame starting at index 0.
inline VideoTensor resample_video(const VideoTensor& in, double fs_out) {
  if (fs_out <= 0.0) throw ConfigError("resample_video: target rate must be > 0");
  const double ratio = in.fs / fs_out;
  const std::size_t k = static_cast<std::size_t>(std::llround(ratio));
  if (k < 1 || std::fabs(ratio - static_cast<double>(k)) > 1e-9)
    throw ConfigError("resample_video: rate ratio must be a positive integer");
  VideoTensor out;
  out.fs = fs_out;
  const std::size_t n = (in.frames() + k - 1) / k;
  out.data = Tensor<float>({n, in.data.dim(1), in.data.dim(2), 3});
  const std::size_t fe = in.data.dim(1) * in.data.dim(2) * 3;
  for (std::size_t i = 0; i < n; ++i)
    std::copy(in.data.data() + i * k * fe, in.data.data() + (i * k + 1) * fe,
              out.data.data() + i * fe);
  return out;
}

// ---------------------------------------------------------------------------
// Face cropping
// ---------------------------------------------------------------------------

enum class FallbackMode { error, full_frame, fixed_box };

struct CropConfig {
  int resolution = 72;
  double redetect_every_s = 1.0;
  std::string cascade_path;  // empty: rely on fallback / override
  FallbackMode fallback = FallbackMode::full_frame;
  cv::Rect fixed_box{};
  // test hook: replaces the cascade detector entirely
  std::function<std::optional<cv::Rect>(const cv::Mat& gray8)> detector_override;
};

class FaceCropper {
 public:
  explicit FaceCropper(CropConfig cfg) : cfg_(std::move(cfg)) {
    if (!cfg_.cascade_path.empty()) {
      if (!cascade_.load(cfg_.cascade_path))
        throw LoadError("cannot load cascade: " + cfg_.cascade_path);
      has_cascade_ = true;
    }
    if (cfg_.resolution < 4) throw ConfigError("crop: resolution too small");
  }

  VideoTensor crop_video(const VideoTensor& in) {
    VideoTensor out;
    out.fs = in.fs;
    const std::size_t res = static_cast<std::size_t>(cfg_.resolution);
    out.data = Tensor<float>({in.frames(), res, res, 3});
    std::optional<cv::Rect> box;
    double last_attempt = -1e18;
    const cv::Rect frame_rect(0, 0, in.width(), in.height());
    for (std::size_t i = 0; i < in.frames(); ++i) {
      const double t = static_cast<double>(i) / in.fs;
      const cv::Mat frame = in.frame_mat(i);
      if (t - last_attempt >= cfg_.redetect_every_s || i == 0) {
        last_attempt = t;
        ++detect_calls_;
        auto d = detect(frame);
        if (d) box = *d & frame_rect;
      }
      if (!box || box->area() == 0) {
        switch (cfg_.fallback) {
          case FallbackMode::error:
            throw DetectionError("no face found and no fallback configured");
          case FallbackMode::full_frame:
            box = frame_rect;
            break;
          case FallbackMode::fixed_box:
            box = cfg_.fixed_box & frame_rect;
            if (box->area() == 0)
              throw ConfigError("crop: fixed fallback box outside frame");
            break;
        }
      }
      cv::Mat crop = frame(*box);
      cv::Mat dst(static_cast<int>(res), static_cast<int>(res), CV_32FC3,
                  out.data.data() + i * res * res * 3);
      cv::resize(crop, dst, dst.size(), 0, 0, cv::INTER_LINEAR);
    }
    return out;
  }

  int detect_calls() const { return detect_calls_; }

 private:
  std::optional<cv::Rect> detect(const cv::Mat& frame) {
    cv::Mat gray8;
    {
      cv::Mat gray;
      cv::cvtColor(frame, gray, cv::COLOR_BGR2GRAY);
      gray.convertTo(gray8, CV_8U);
    }
    if (cfg_.detector_override) return cfg_.detector_override(gray8);
    if (!has_cascade_) return std::nullopt;
    std::vector<cv::Rect> faces;
    cascade_.detectMultiScale(gray8, faces, 1.1, 3);
    if (faces.empty()) return std::nullopt;
    auto best = std::max_element(faces.begin(), faces.end(),
                                 [](const cv::Rect& a, const cv::Rect& b) {
                                   return a.area() < b.area();
                                 });
    return *best;
  }

  CropConfig cfg_;
  cv::CascadeClassifier cascade_;
  bool has_cascade_ = false;
  int detect_calls_ = 0;
};

// Decimate-then-crop over a lazy frame source; reads only the kept frames.
// Bit-identical to resample_video followed by FaceCropper::crop_video.
inline VideoTensor preprocess_video(const FrameSource& src, const CropConfig& cfg,
                                    double fs_out = 10.0) {
  const double ratio = src.fs() / fs_out;
  const std::size_t k = static_cast<std::size_t>(std::llround(ratio));
  if (k < 1 || std::fabs(ratio - static_cast<double>(k)) > 1e-9)
    throw ConfigError("preprocess_video: rate ratio must be a positive integer");
  const std::size_t n = (src.count() + k - 1) / k;
  VideoTensor kept;
  kept.fs = fs_out;
  kept.data = Tensor<float>({n, static_cast<std::size_t>(src.height()),
                             static_cast<std::size_t>(src.width()), 3});
  for (std::size_t i = 0; i < n; ++i)
    src.read_frame(i * k, kept.data.data() + i * src.frame_elems());
  FaceCropper cropper(cfg);
  return cropper.crop_video(kept);
}

// ---------------------------------------------------------------------------
// Difference normalization
// ---------------------------------------------------------------------------

inline constexpr double kDiffNormEps = 1e-7;

// Consecutive frame differences scaled by their global std (epsilon-guarded).
inline Tensor<float> diff_normalize(const Tensor<float>& frames) {
  if (frames.rank() != 4 || frames.dim(0) < 2)
    throw InputError("diff_normalize: need a (T+1, H, W, C) tensor, T >= 1");
  const std::size_t t1 = frames.dim(0);
  const std::size_t fe = frames.size() / t1;
  Tensor<float> d({t1 - 1, frames.dim(1), frames.dim(2), frames.dim(3)});
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t t = 0; t + 1 < t1; ++t) {
    const float* a = frames.data() + t * fe;
    const float* b = frames.data() + (t + 1) * fe;
    float* o = d.data() + t * fe;
    for (std::size_t j = 0; j < fe; ++j) {
      const float v = b[j] - a[j];
      o[j] = v;
      s1 += v;
      s2 += static_cast<double>(v) * v;
    }
  }
  const double n = static_cast<double>(d.size());
  const double mean = s1 / n;
  const double var = std::max(0.0, s2 / n - mean * mean);
  const float scale = static_cast<float>(1.0 / std::max(std::sqrt(var), kDiffNormEps));
  for (auto& v : d.flat()) v *= scale;
  return d;
}

inline std::vector<float> diff_normalize_signal(const std::vector<double>& x) {
  if (x.size() < 2)
    throw InputError("diff_normalize_signal: need at least 2 samples");
  std::vector<double> d(x.size() - 1);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    d[i] = x[i + 1] - x[i];
    s1 += d[i];
    s2 += d[i] * d[i];
  }
  const double n = static_cast<double>(d.size());
  const double mean = s1 / n;
  const double sd = std::sqrt(std::max(0.0, s2 / n - mean * mean));
  const double scale = 1.0 / std::max(sd, kDiffNormEps);
  std::vector<float> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    out[i] = static_cast<float>(d[i] * scale);
  return out;
}

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

struct NormalizedClip {
  Tensor<float> diff;         // (T, res, res, 3)
  std::vector<float> labels;  // length T
  std::string session_id;
  std::size_t start = 0;  // first frame index of the window in the 10 Hz stream
  std::string target_kind;  // "raw" | "tonic"
};

// Non-overlapping by default (stride = T). Each window consumes T+1 frames;
// labels are the diff-normalized target series sampled at frame timestamps.
inline std::vector<NormalizedClip> window_clips(const VideoTensor& video,
                                                const Series& target,
                                                const std::string& session_id,
                                                std::size_t T, std::size_t stride,
                                                const std::string& target_kind) {
  if (stride == 0 || stride > T)
    throw ConfigError("window_clips: need 0 < stride <= T");
  std::vector<NormalizedClip> out;
  const std::size_t n = video.frames();
  if (n < T + 1) {
    std::fprintf(stderr, "warning: session %s has %zu frames, too short for T=%zu\n",
                 session_id.c_str(), n, T);
    return out;
  }
  const std::size_t fe = video.data.dim(1) * video.data.dim(2) * 3;
  for (std::size_t start = 0; start + T + 1 <= n; start += stride) {
    Tensor<float> win({T + 1, video.data.dim(1), video.data.dim(2), 3});
    std::copy(video.data.data() + start * fe,
              video.data.data() + (start + T + 1) * fe, win.data());
    std::vector<double> lab(T + 1);
    for (std::size_t j = 0; j <= T; ++j)
      lab[j] = sample_at(target, static_cast<double>(start + j) / video.fs);
    NormalizedClip clip;
    clip.diff = diff_normalize(win);
    clip.labels = diff_normalize_signal(lab);
    clip.session_id = session_id;
    clip.start = start;
    clip.target_kind = target_kind;
    out.push_back(std::move(clip));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optical flow probe
// ---------------------------------------------------------------------------

inline Series optical_flow_magnitude(const VideoTensor& video) {
  if (video.frames() < 2)
    throw InsufficientDataError("optical_flow_magnitude: need at least 2 frames");
  auto to_gray8 = [](const cv::Mat& f) {
    cv::Mat gray, gray8;
    cv::cvtColor(f, gray, cv::COLOR_BGR2GRAY);
    gray.convertTo(gray8, CV_8U);
    return gray8;
  };
  const int minside = std::min(video.height(), video.width());
  const int win = std::max(4, std::min(31, minside / 2));
  const int levels = minside >= 32 ? 3 : 1;
  Series out;
  out.fs = video.fs;
  out.units = "px/frame";
  cv::Mat prev = to_gray8(video.frame_mat(0));
  for (std::size_t i = 1; i < video.frames(); ++i) {
    cv::Mat cur = to_gray8(video.frame_mat(i));
    cv::Mat flow;
    cv::calcOpticalFlowFarneback(prev, cur, flow, 0.5, levels, win, 3, 5, 1.2, 0);
    // border pixels lack full window support in the polynomial expansion and
    // pick up spurious flow, so average over the interior only
    int margin = win / 2;
    if (2 * margin >= flow.rows || 2 * margin >= flow.cols) margin = 0;
    double acc = 0.0;
    std::size_t n = 0;
    for (int y = margin; y < flow.rows - margin; ++y) {
      const cv::Point2f* row = flow.ptr<cv::Point2f>(y);
      for (int x = margin; x < flow.cols - margin; ++x) {
        acc += std::hypot(row[x].x, row[x].y);
        ++n;
      }
    }
    out.values.push_back(acc / static_cast<double>(n));
    prev = cur;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Window cache
// ---------------------------------------------------------------------------

inline void save_windows(const fs::path& path, const std::vector<NormalizedClip>& clips,
                         const std::string& session_id, std::size_t T,
                         std::size_t stride, int resolution,
                         const std::string& target_kind) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot write window cache: " + path.string());
  json h;
  h["session"] = session_id;
  h["T"] = T;
  h["stride"] = stride;
  h["resolution"] = resolution;
  h["target_kind"] = target_kind;
  h["count"] = clips.size();
  h["pp_version"] = kPreprocVersion;
  json starts = json::array();
  for (const auto& c : clips) starts.push_back(c.start);
  h["starts"] = starts;
  const std::string hs = h.dump();
  const std::uint32_t len = static_cast<std::uint32_t>(hs.size());
  f.write("EDWN", 4);
  f.write(reinterpret_cast<const char*>(&len), 4);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& c : clips) {
    f.write(reinterpret_cast<const char*>(c.diff.data()),
            static_cast<std::streamsize>(c.diff.size() * sizeof(float)));
    f.write(reinterpret_cast<const char*>(c.labels.data()),
            static_cast<std::streamsize>(c.labels.size() * sizeof(float)));
  }
  if (!f) throw LoadError("failed writing window cache: " + path.string());
}

inline std::vector<NormalizedClip> load_windows(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("missing file: " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::string(magic, 4) != "EDWN")
    throw IntegrityError("bad window cache magic: " + path.string());
  std::uint32_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 4);
  std::string hs(len, '\0');
  f.read(hs.data(), len);
  if (!f) throw IntegrityError("truncated window cache header: " + path.string());
  json h;
  try {
    h = json::parse(hs);
  } catch (const json::parse_error& e) {
    throw IntegrityError("bad window cache header: " + std::string(e.what()));
  }
  if (h.at("pp_version").get<std::string>() != kPreprocVersion)
    throw IntegrityError("stale window cache (preprocessing version changed): " +
                         path.string());
  const std::size_t T = h.at("T").get<std::size_t>();
  const std::size_t res = h.at("resolution").get<std::size_t>();
  const std::size_t count = h.at("count").get<std::size_t>();
  const auto starts = h.at("starts").get<std::vector<std::size_t>>();
  std::vector<NormalizedClip> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    NormalizedClip& c = out[i];
    c.diff = Tensor<float>({T, res, res, 3});
    c.labels.resize(T);
    c.session_id = h.at("session").get<std::string>();
    c.start = starts.at(i);
    c.target_kind = h.at("target_kind").get<std::string>();
    f.read(reinterpret_cast<char*>(c.diff.data()),
           static_cast<std::streamsize>(c.diff.size() * sizeof(float)));
    f.read(reinterpret_cast<char*>(c.labels.data()),
           static_cast<std::streamsize>(c.labels.size() * sizeof(float)));
  }
  if (!f) throw IntegrityError("truncated window cache data: " + path.string());
  return out;
}

}  // namespace edacam
