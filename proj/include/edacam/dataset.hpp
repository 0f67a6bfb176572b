#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "edacam/errors.hpp"
#include "edacam/io.hpp"
#include "edacam/rng.hpp"
#include "edacam/signal.hpp"
#include "edacam/stats.hpp"

namespace edacam {

// ---------------------------------------------------------------------------
// Frame sources
// ---------------------------------------------------------------------------

// Lazy per-frame access to a video. Values are pixel intensities on the
// 0..255 scale regardless of the on-disk dtype.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t count() const = 0;
  virtual int height() const = 0;
  virtual int width() const = 0;
  virtual double fs() const = 0;
  // dst must hold height*width*3 floats, row-major HWC
  virtual void read_frame(std::size_t i, float* dst) const = 0;

  std::size_t frame_elems() const {
    return static_cast<std::size_t>(height()) * width() * 3;
  }
  double duration_s() const { return static_cast<double>(count()) / fs(); }
};

class MemoryFrames : public FrameSource {
 public:
  MemoryFrames(std::vector<std::uint8_t> data, std::size_t count, int h, int w, double fs)
      : data_(std::move(data)), count_(count), h_(h), w_(w), fs_(fs) {
    if (data_.size() != count_ * static_cast<std::size_t>(h_) * w_ * 3)
      throw InputError("MemoryFrames: buffer size does not match shape");
  }

  std::size_t count() const override { return count_; }
  int height() const override { return h_; }
  int width() const override { return w_; }
  double fs() const override { return fs_; }

  void read_frame(std::size_t i, float* dst) const override {
    const std::size_t n = frame_elems();
    const std::uint8_t* src = data_.data() + i * n;
    for (std::size_t k = 0; k < n; ++k) dst[k] = static_cast<float>(src[k]);
  }

  const std::vector<std::uint8_t>& bytes() const { return data_; }

 private:
  std::vector<std::uint8_t> data_;
  std::size_t count_;
  int h_, w_;
  double fs_;
};

// Chunked on-disk container: raw frame chunks plus an index.json manifest.
// One file per frame would mean tens of thousands of files per session.
class ChunkedFrames : public FrameSource {
 public:
  explicit ChunkedFrames(const fs::path& dir) : dir_(dir) {
    const fs::path index = dir / "index.json";
    if (!fs::exists(index)) throw LoadError("missing file: " + index.string());
    const json j = read_json_file(index);
    count_ = j.at("count").get<std::size_t>();
    h_ = j.at("height").get<int>();
    w_ = j.at("width").get<int>();
    fs_hz_ = j.at("fs").get<double>();
    dtype_ = j.at("dtype").get<std::string>();
    chunk_frames_ = j.at("chunk_frames").get<std::size_t>();
    chunks_ = j.at("chunks").get<std::vector<std::string>>();
    if (dtype_ != "u8" && dtype_ != "f32")
      throw LoadError("frame container: unsupported dtype " + dtype_);
    const std::size_t expect =
        chunk_frames_ == 0 ? 0 : (count_ + chunk_frames_ - 1) / chunk_frames_;
    if (chunks_.size() != expect)
      throw IntegrityError("frame container: chunk list does not cover frame count");
    for (const auto& c : chunks_)
      if (!fs::exists(dir_ / c)) throw LoadError("missing file: " + (dir_ / c).string());
  }

  std::size_t count() const override { return count_; }
  int height() const override { return h_; }
  int width() const override { return w_; }
  double fs() const override { return fs_hz_; }

  void read_frame(std::size_t i, float* dst) const override {
    if (i >= count_) throw InputError("frame index out of range");
    std::lock_guard<std::mutex> lock(mu_);
    const std::size_t ci = i / chunk_frames_;
    if (ci != cached_chunk_) load_chunk(ci);
    const std::size_t n = frame_elems();
    const std::size_t off = (i - ci * chunk_frames_) * n;
    if (dtype_ == "u8") {
      for (std::size_t k = 0; k < n; ++k)
        dst[k] = static_cast<float>(cache_u8_[off + k]);
    } else {
      std::copy(cache_f32_.begin() + off, cache_f32_.begin() + off + n, dst);
    }
  }

  const std::string& dtype() const { return dtype_; }

 private:
  void load_chunk(std::size_t ci) const {
    const fs::path p = dir_ / chunks_[ci];
    std::ifstream f(p, std::ios::binary);
    if (!f) throw LoadError("missing file: " + p.string());
    const std::size_t frames_here =
        std::min(chunk_frames_, count_ - ci * chunk_frames_);
    const std::size_t n = frames_here * frame_elems();
    if (dtype_ == "u8") {
      cache_u8_.resize(n);
      f.read(reinterpret_cast<char*>(cache_u8_.data()), static_cast<std::streamsize>(n));
    } else {
      cache_f32_.resize(n);
      f.read(reinterpret_cast<char*>(cache_f32_.data()),
             static_cast<std::streamsize>(n * sizeof(float)));
    }
    if (!f) throw IntegrityError("frame chunk truncated: " + p.string());
    cached_chunk_ = ci;
  }

  fs::path dir_;
  std::size_t count_ = 0;
  int h_ = 0, w_ = 0;
  double fs_hz_ = 0;
  std::string dtype_;
  std::size_t chunk_frames_ = 0;
  std::vector<std::string> chunks_;

  mutable std::mutex mu_;
  mutable std::size_t cached_chunk_ = static_cast<std::size_t>(-1);
  mutable std::vector<std::uint8_t> cache_u8_;
  mutable std::vector<float> cache_f32_;
};

class FrameChunkWriter {
 public:
  FrameChunkWriter(const fs::path& dir, int h, int w, double fs,
                   std::size_t chunk_frames = 512)
      : dir_(dir), h_(h), w_(w), fs_hz_(fs), chunk_frames_(chunk_frames) {
    fs::create_directories(dir_);
  }

  // frame: h*w*3 values on the 0..255 scale; stored quantized to u8
  void append(const float* frame) {
    const std::size_t n = static_cast<std::size_t>(h_) * w_ * 3;
    for (std::size_t k = 0; k < n; ++k) {
      const float v = std::nearbyint(frame[k]);
      buf_.push_back(static_cast<std::uint8_t>(std::min(255.0f, std::max(0.0f, v))));
    }
    ++count_;
    if (count_ % chunk_frames_ == 0) flush_chunk();
  }

  void append_u8(const std::uint8_t* frame) {
    const std::size_t n = static_cast<std::size_t>(h_) * w_ * 3;
    buf_.insert(buf_.end(), frame, frame + n);
    ++count_;
    if (count_ % chunk_frames_ == 0) flush_chunk();
  }

  void finalize() {
    if (!buf_.empty()) flush_chunk();
    json j;
    j["count"] = count_;
    j["height"] = h_;
    j["width"] = w_;
    j["channels"] = 3;
    j["fs"] = fs_hz_;
    j["dtype"] = "u8";
    j["chunk_frames"] = chunk_frames_;
    j["chunks"] = chunks_;
    write_json_file(dir_ / "index.json", j);
  }

 private:
  void flush_chunk() {
    char name[32];
    std::snprintf(name, sizeof(name), "chunk_%05zu.bin", chunks_.size());
    const fs::path p = dir_ / name;
    std::ofstream f(p, std::ios::binary);
    f.write(reinterpret_cast<const char*>(buf_.data()),
            static_cast<std::streamsize>(buf_.size()));
    if (!f) throw LoadError("cannot write " + p.string());
    chunks_.push_back(name);
    buf_.clear();
  }

  fs::path dir_;
  int h_, w_;
  double fs_hz_;
  std::size_t chunk_frames_;
  std::size_t count_ = 0;
  std::vector<std::uint8_t> buf_;
  std::vector<std::string> chunks_;
};

// ---------------------------------------------------------------------------
// Session model
// ---------------------------------------------------------------------------

struct SynthInternals {
  Series modulation;     // band-limited pixel modulation, video rate
  Series cardiac;        // cardiac waveform at video rate
  Series envelope;       // cardiac amplitude envelope at video rate
  Series arousal;        // raw arousal process at video rate
  Series tonic;          // clean tonic EDA at video rate (baseline + arousal)
};

struct Session {
  std::string participant_id;
  std::shared_ptr<FrameSource> face_frames;
  Series eda;
  Series ppg;
  std::vector<std::pair<double, double>> pinch_intervals;
  int skin_type = 0;  // Fitzpatrick 1..6, 0 = unknown

  // generator-only diagnostics; null for sessions loaded from disk
  std::shared_ptr<const SynthInternals> synth_internals;

  double duration_s() const { return face_frames ? face_frames->duration_s() : 0.0; }
};

inline void validate_session(const Session& s) {
  if (!s.face_frames) throw IntegrityError("session: no frame source");
  validate_series(s.eda, "eda");
  validate_series(s.ppg, "ppg");
  const double dv = s.face_frames->duration_s();
  const double de = s.eda.duration_s();
  const double dp = s.ppg.duration_s();
  if (std::fabs(dv - de) > 1.0)
    throw IntegrityError("session: video/eda duration mismatch of " +
                         format_double(std::fabs(dv - de)) + " s");
  if (std::fabs(dv - dp) > 1.0)
    throw IntegrityError("session: video/ppg duration mismatch of " +
                         format_double(std::fabs(dv - dp)) + " s");
  double prev_end = -1.0;
  for (const auto& [a, b] : s.pinch_intervals) {
    if (b <= a) throw IntegrityError("session: empty or inverted pinch interval");
    if (a < prev_end) throw IntegrityError("session: overlapping or unordered pinch intervals");
    if (a < 0.0 || b > dv + 1e-9)
      throw IntegrityError("session: pinch interval outside recording");
    prev_end = b;
  }
  if (s.skin_type < 0 || s.skin_type > 6)
    throw IntegrityError("session: skin type out of range");
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

struct SynthConfig {
  int n_participants = 10;
  double duration_s = 570.0;
  double fs_video = 100.0;
  double fs_physio = 100.0;
  int height = 36;
  int width = 36;
  std::pair<double, double> arousal_band{0.045, 0.25};
  std::pair<double, double> cardiac_band{0.7, 2.5};
  double pixel_gain = 6.0;    // intensity levels per unit of arousal modulation
  double cardiac_gain = 1.5;  // intensity levels per unit of cardiac waveform
  double noise_level = 2.0;   // per-pixel per-frame noise std in intensity levels
  double w_gain = 0.75;       // weight of the smooth in-band arousal process
  double train_gain = 1.0;    // weight of the pinch response train
  std::vector<std::pair<double, double>> pinch_intervals = {
      {120.0, 150.0}, {270.0, 300.0}, {420.0, 450.0}};
  std::uint64_t seed = 0;

  void validate() const {
    if (n_participants < 1) throw ConfigError("synth: n_participants must be >= 1");
    if (duration_s < 10.0) throw ConfigError("synth: duration_s must be >= 10");
    if (fs_video != 100.0 && fs_video != 10.0)
      throw ConfigError("synth: fs_video must be 100 or 10");
    if (fs_physio < 4.0) throw ConfigError("synth: fs_physio must be >= 4");
    if (height < 8 || width < 8) throw ConfigError("synth: resolution must be >= 8");
    auto check_band = [&](std::pair<double, double> b, double fs, const char* name) {
      if (!(b.first > 0.0 && b.second > b.first && b.second < fs / 2.0))
        throw ConfigError(std::string("synth: ") + name + " band must lie in (0, fs/2)");
    };
    check_band(arousal_band, fs_video, "arousal");
    check_band(cardiac_band, fs_physio, "cardiac");
    if (pixel_gain < 0 || cardiac_gain < 0 || noise_level < 0 || w_gain < 0 ||
        train_gain < 0)
      throw ConfigError("synth: gains must be >= 0");
    double prev = -1.0;
    for (const auto& [a, b] : pinch_intervals) {
      if (b <= a || a < prev || b > duration_s)
        throw ConfigError("synth: malformed pinch intervals");
      prev = b;
    }
  }
};

namespace detail {

// One skin-conductance-response-like pulse: fast rise, slower decay.
inline double scr_pulse(double u) {
  if (u < 0.0) return 0.0;
  return (1.0 - std::exp(-u * 2.0)) * std::exp(-u / 3.0);
}

struct ArousalProcess {
  std::vector<double> freqs, amps, phases;  // smooth in-band component
  std::vector<double> pulse_onsets;         // pinch response train
  double w_gain = 0, train_gain = 0;

  double operator()(double t) const {
    double v = 0.0;
    for (std::size_t k = 0; k < freqs.size(); ++k)
      v += amps[k] * std::cos(2.0 * M_PI * freqs[k] * t + phases[k]);
    v *= w_gain;
    for (double t0 : pulse_onsets) v += train_gain * scr_pulse(t - t0);
    return v;
  }
};

inline ArousalProcess make_arousal(const SynthConfig& cfg, Rng& rng) {
  ArousalProcess a;
  const int n_comp = 24;
  double norm = 0.0;
  for (int k = 0; k < n_comp; ++k) {
    const double f = rng.uniform(cfg.arousal_band.first, cfg.arousal_band.second);
    a.freqs.push_back(f);
    a.amps.push_back(1.0 / f);
    norm += (1.0 / f) * (1.0 / f);
    a.phases.push_back(rng.uniform(0.0, 2.0 * M_PI));
  }
  norm = std::sqrt(norm);
  for (auto& v : a.amps) v /= norm;
  // normalize the smooth component to unit std over the record
  const double fs = cfg.fs_video;
  const std::size_t n = static_cast<std::size_t>(cfg.duration_s * fs);
  double s1 = 0, s2 = 0;
  ArousalProcess probe = a;
  probe.w_gain = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = probe(static_cast<double>(i) / fs);
    s1 += v;
    s2 += v * v;
  }
  const double mean = s1 / static_cast<double>(n);
  const double sd = std::sqrt(std::max(1e-12, s2 / static_cast<double>(n) - mean * mean));
  for (auto& v : a.amps) v /= sd;
  a.w_gain = cfg.w_gain;
  a.train_gain = cfg.train_gain;
  for (const auto& [s, e] : cfg.pinch_intervals) {
    (void)e;
    for (int k = 0; k < 8; ++k) a.pulse_onsets.push_back(s + 1.0 + 3.6 * k);
  }
  return a;
}

}  // namespace detail

// Frames synthesized on demand: static texture plus global intensity
// modulation, quantized to u8. Per-frame noise is seeded by the frame index
// so reads are deterministic in any order.
class SyntheticFrames : public FrameSource {
 public:
  SyntheticFrames(std::vector<float> base, int h, int w, double fs,
                  std::vector<float> modulation, std::vector<float> cardiac,
                  double pixel_gain, double cardiac_gain, double noise_level,
                  std::uint64_t noise_seed)
      : base_(std::move(base)), h_(h), w_(w), fs_hz_(fs),
        modulation_(std::move(modulation)), cardiac_(std::move(cardiac)),
        pixel_gain_(pixel_gain), cardiac_gain_(cardiac_gain),
        noise_level_(noise_level), noise_seed_(noise_seed) {}

  std::size_t count() const override { return modulation_.size(); }
  int height() const override { return h_; }
  int width() const override { return w_; }
  double fs() const override { return fs_hz_; }

  void read_frame(std::size_t i, float* dst) const override {
    const std::size_t n = frame_elems();
    const float shift = static_cast<float>(pixel_gain_ * modulation_[i] +
                                           cardiac_gain_ * cardiac_[i]);
    if (noise_level_ > 0.0) {
      Rng rng(Rng::mix(noise_seed_, i));
      for (std::size_t k = 0; k < n; ++k) {
        const double v = base_[k] + shift + noise_level_ * rng.normal();
        dst[k] = quantize(v);
      }
    } else {
      for (std::size_t k = 0; k < n; ++k) dst[k] = quantize(base_[k] + shift);
    }
  }

 private:
  static float quantize(double v) {
    const double r = std::nearbyint(v);
    return static_cast<float>(std::min(255.0, std::max(0.0, r)));
  }

  std::vector<float> base_;
  int h_, w_;
  double fs_hz_;
  std::vector<float> modulation_, cardiac_;
  double pixel_gain_, cardiac_gain_, noise_level_;
  std::uint64_t noise_seed_;
};

inline Session generate_synthetic_session(const SynthConfig& cfg,
                                          std::uint64_t participant_seed) {
  cfg.validate();
  Rng rng(Rng::mix(cfg.seed, participant_seed));

  const auto arousal = detail::make_arousal(cfg, rng);
  const double baseline = rng.uniform(4.0, 8.0);
  const int skin = static_cast<int>(rng.uniform_int(1, 6));

  const std::size_t nv = static_cast<std::size_t>(cfg.duration_s * cfg.fs_video);
  const std::size_t np = static_cast<std::size_t>(cfg.duration_s * cfg.fs_physio);

  // arousal and clean tonic on both grids
  std::vector<double> arousal_v(nv);
  for (std::size_t i = 0; i < nv; ++i)
    arousal_v[i] = arousal(static_cast<double>(i) / cfg.fs_video);

  Series eda;
  eda.fs = cfg.fs_physio;
  eda.units = "microsiemens";
  eda.values.resize(np);
  for (std::size_t i = 0; i < np; ++i)
    eda.values[i] = baseline + arousal(static_cast<double>(i) / cfg.fs_physio);

  // cardiac on the physio grid: slowly drifting rate, amplitude tied to
  // arousal; the rate drift itself is independent of the pinch schedule.
  // The amplitude follows a 30 s moving average of arousal so the embedded
  // envelope stays recoverable from windowed amplitude estimates.
  const double hr0 = rng.uniform(1.05, 1.35);
  Series slow_s;
  slow_s.fs = cfg.fs_video;
  slow_s.values.resize(nv);
  {
    const std::size_t half = static_cast<std::size_t>(15.0 * cfg.fs_video);
    std::vector<double> pre(nv + 1, 0.0);
    for (std::size_t i = 0; i < nv; ++i) pre[i + 1] = pre[i] + arousal_v[i];
    for (std::size_t i = 0; i < nv; ++i) {
      const std::size_t lo = i > half ? i - half : 0;
      const std::size_t hi = std::min(nv, i + half + 1);
      slow_s.values[i] = (pre[hi] - pre[lo]) / static_cast<double>(hi - lo);
    }
  }
  double a_lo = slow_s.values[0], a_hi = slow_s.values[0];
  for (double v : slow_s.values) {
    a_lo = std::min(a_lo, v);
    a_hi = std::max(a_hi, v);
  }
  const double a_span = std::max(1e-9, a_hi - a_lo);

  Series ppg;
  ppg.fs = cfg.fs_physio;
  ppg.units = "a.u.";
  ppg.values.resize(np);
  Series phase_p;
  phase_p.fs = cfg.fs_physio;
  phase_p.values.resize(np);
  Series env_p;
  env_p.fs = cfg.fs_physio;
  env_p.values.resize(np);
  {
    double hr = hr0;
    double phase = 0.0;
    const double step_sd = 0.02 / std::sqrt(cfg.fs_physio);
    for (std::size_t i = 0; i < np; ++i) {
      hr = std::min(1.6, std::max(1.0, hr + step_sd * rng.normal()));
      phase += 2.0 * M_PI * hr / cfg.fs_physio;
      const double t = static_cast<double>(i) / cfg.fs_physio;
      const double env = 1.0 + 0.5 * (sample_at(slow_s, t) - a_lo) / a_span;
      phase_p.values[i] = phase;
      env_p.values[i] = env;
      ppg.values[i] = env * std::sin(phase) + 0.05 * rng.normal();
    }
  }

  // modulation = in-band part of the arousal process, on the video grid
  std::vector<double> mod_v = project_onto_band(arousal_v, cfg.fs_video,
                                                cfg.arousal_band.first,
                                                cfg.arousal_band.second);

  std::vector<float> cardiac_v(nv), mod_f(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    const double t = static_cast<double>(i) / cfg.fs_video;
    cardiac_v[i] = static_cast<float>(sample_at(env_p, t) * std::sin(sample_at(phase_p, t)));
    mod_f[i] = static_cast<float>(mod_v[i]);
  }

  const std::size_t npx = static_cast<std::size_t>(cfg.height) * cfg.width * 3;
  std::vector<float> base(npx);
  for (auto& v : base) v = static_cast<float>(rng.uniform(80.0, 180.0));

  const std::uint64_t noise_seed = rng.next();

  Session s;
  char idbuf[16];
  std::snprintf(idbuf, sizeof(idbuf), "p%02llu",
                static_cast<unsigned long long>(participant_seed));
  s.participant_id = idbuf;
  s.face_frames = std::make_shared<SyntheticFrames>(
      std::move(base), cfg.height, cfg.width, cfg.fs_video, std::move(mod_f),
      std::move(cardiac_v), cfg.pixel_gain, cfg.cardiac_gain, cfg.noise_level,
      noise_seed);
  s.eda = std::move(eda);
  s.ppg = std::move(ppg);
  s.pinch_intervals = cfg.pinch_intervals;
  s.skin_type = skin;

  auto internals = std::make_shared<SynthInternals>();
  internals->modulation = Series{std::move(mod_v), cfg.fs_video, "a.u."};
  {
    std::vector<double> cv(nv);
    for (std::size_t i = 0; i < nv; ++i) {
      const double t = static_cast<double>(i) / cfg.fs_video;
      cv[i] = sample_at(env_p, t) * std::sin(sample_at(phase_p, t));
    }
    internals->cardiac = Series{std::move(cv), cfg.fs_video, "a.u."};
  }
  {
    std::vector<double> env_v(nv);
    for (std::size_t i = 0; i < nv; ++i)
      env_v[i] = sample_at(env_p, static_cast<double>(i) / cfg.fs_video);
    internals->envelope = Series{std::move(env_v), cfg.fs_video, "a.u."};
  }
  {
    std::vector<double> tonic_v(nv);
    for (std::size_t i = 0; i < nv; ++i) tonic_v[i] = baseline + arousal_v[i];
    internals->tonic = Series{std::move(tonic_v), cfg.fs_video, "microsiemens"};
  }
  internals->arousal = Series{std::move(arousal_v), cfg.fs_video, "a.u."};
  s.synth_internals = internals;

  validate_session(s);
  return s;
}

// ---------------------------------------------------------------------------
// Disk layout
// ---------------------------------------------------------------------------

inline void write_series_csv(const fs::path& path, const Series& s,
                             const std::string& value_col) {
  CsvWriter w(path, {"t_s", value_col});
  for (std::size_t i = 0; i < s.values.size(); ++i)
    w.write_row(static_cast<double>(i) / s.fs, s.values[i]);
}

inline Series read_series_csv(const fs::path& path, const std::string& value_col,
                              double fs, const std::string& units) {
  if (!fs::exists(path)) throw LoadError("missing file: " + path.string());
  const CsvTable t = read_csv(path);
  Series s;
  s.fs = fs;
  s.units = units;
  s.values = t.numeric_column(value_col);
  if (s.values.size() >= 2) {
    const auto ts = t.numeric_column("t_s");
    if (std::fabs((ts[1] - ts[0]) - 1.0 / fs) > 1e-6)
      throw IntegrityError(path.string() + ": time step does not match declared rate");
  }
  return s;
}

inline void save_session(const Session& s, const fs::path& dir) {
  validate_session(s);
  fs::create_directories(dir);
  json meta;
  meta["participant_id"] = s.participant_id;
  meta["skin_type"] = s.skin_type;
  meta["fs_video"] = s.face_frames->fs();
  meta["fs_eda"] = s.eda.fs;
  meta["fs_ppg"] = s.ppg.fs;
  json pins = json::array();
  for (const auto& [a, b] : s.pinch_intervals) pins.push_back({a, b});
  meta["pinch_intervals"] = pins;
  meta["duration_s"] = s.duration_s();
  write_json_file(dir / "meta.json", meta);

  write_series_csv(dir / "eda.csv", s.eda, "eda_us");
  write_series_csv(dir / "ppg.csv", s.ppg, "ppg");

  FrameChunkWriter w(dir / "face_video", s.face_frames->height(),
                     s.face_frames->width(), s.face_frames->fs());
  std::vector<float> frame(s.face_frames->frame_elems());
  for (std::size_t i = 0; i < s.face_frames->count(); ++i) {
    s.face_frames->read_frame(i, frame.data());
    w.append(frame.data());
  }
  w.finalize();
}

inline Session load_session(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  if (!fs::exists(meta_path)) throw LoadError("missing file: " + meta_path.string());
  const json meta = read_json_file(meta_path);

  Session s;
  s.participant_id = meta.at("participant_id").get<std::string>();
  s.skin_type = meta.value("skin_type", 0);
  for (const auto& p : meta.at("pinch_intervals"))
    s.pinch_intervals.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());

  s.eda = read_series_csv(dir / "eda.csv", "eda_us", meta.at("fs_eda").get<double>(),
                          "microsiemens");
  s.ppg = read_series_csv(dir / "ppg.csv", "ppg", meta.at("fs_ppg").get<double>(),
                          "a.u.");
  s.face_frames = std::make_shared<ChunkedFrames>(dir / "face_video");
  validate_session(s);
  return s;
}

// ---------------------------------------------------------------------------
// Responder screening
// ---------------------------------------------------------------------------

struct ScreenResult {
  double t_stat = 0.0;
  double p_value = 1.0;
  bool responsive = false;
};

// Paired t-test between mean EDA in each pinch window and the equally long
// rest period immediately preceding it.
inline ScreenResult screen_responders(const Session& s) {
  if (s.pinch_intervals.size() < 2)
    throw InsufficientDataError("screen_responders: needs >= 2 pinch intervals");
  auto window_mean = [&](double a, double b) {
    const std::size_t i0 = static_cast<std::size_t>(std::ceil(a * s.eda.fs));
    std::size_t i1 = static_cast<std::size_t>(std::floor(b * s.eda.fs));
    i1 = std::min(i1, s.eda.values.size());
    if (i1 <= i0) throw InsufficientDataError("screen_responders: empty window");
    double acc = 0.0;
    for (std::size_t i = i0; i < i1; ++i) acc += s.eda.values[i];
    return acc / static_cast<double>(i1 - i0);
  };
  std::vector<double> stress, rest;
  for (const auto& [a, b] : s.pinch_intervals) {
    const double len = b - a;
    if (a - len < 0.0)
      throw InsufficientDataError("screen_responders: no rest period before pinch");
    stress.push_back(window_mean(a, b));
    rest.push_back(window_mean(a - len, a));
  }
  const PairedTTest t = paired_ttest(stress, rest);
  ScreenResult r;
  r.t_stat = t.t;
  r.p_value = t.p;
  r.responsive = t.p < 0.05;
  return r;
}

}  // namespace edacam
