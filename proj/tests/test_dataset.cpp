#include "catch_amalgamated.hpp"

#include <cstdio>
#include <filesystem>

#include "edacam/dataset.hpp"

using namespace edacam;
using Catch::Approx;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.duration_s = 570.0;
  cfg.fs_video = 10.0;
  cfg.fs_physio = 20.0;
  cfg.height = 16;
  cfg.width = 16;
  cfg.seed = 5;
  return cfg;
}

Session manual_session(double video_s, double eda_s, double fs = 10.0) {
  const std::size_t nf = static_cast<std::size_t>(video_s * fs);
  std::vector<std::uint8_t> buf(nf * 8 * 8 * 3, 100);
  Session s;
  s.participant_id = "m01";
  s.face_frames = std::make_shared<MemoryFrames>(std::move(buf), nf, 8, 8, fs);
  s.eda.fs = fs;
  s.eda.units = "microsiemens";
  s.eda.values.assign(static_cast<std::size_t>(eda_s * fs), 5.0);
  s.ppg.fs = fs;
  s.ppg.units = "a.u.";
  s.ppg.values.assign(static_cast<std::size_t>(video_s * fs), 0.0);
  return s;
}

fs::path temp_dir(const char* tag) {
  const fs::path p = fs::temp_directory_path() / (std::string("edacam_test_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("synthetic session has duration x fs frames", "[dataset]") {
  SynthConfig cfg;  // defaults: 570 s at 100 Hz
  Session s = generate_synthetic_session(cfg, 1);
  CHECK(s.face_frames->count() == 57000);
  CHECK(s.face_frames->fs() == 100.0);
  CHECK(s.duration_s() == Approx(570.0));
  CHECK(s.pinch_intervals.size() == 3);
  CHECK(s.pinch_intervals[0] == std::make_pair(120.0, 150.0));
  CHECK(s.pinch_intervals[1] == std::make_pair(270.0, 300.0));
  CHECK(s.pinch_intervals[2] == std::make_pair(420.0, 450.0));
  CHECK(s.skin_type >= 1);
  CHECK(s.skin_type <= 6);
}

TEST_CASE("duration mismatch rejected", "[dataset]") {
  Session s = manual_session(10.0, 5.0);
  CHECK_THROWS_AS(validate_session(s), IntegrityError);
  Session ok = manual_session(10.0, 10.0);
  CHECK_NOTHROW(validate_session(ok));
}

TEST_CASE("pinch interval invariants", "[dataset]") {
  Session s = manual_session(100.0, 100.0);
  s.pinch_intervals = {{10.0, 20.0}, {15.0, 25.0}};
  CHECK_THROWS_AS(validate_session(s), IntegrityError);
  s.pinch_intervals = {{10.0, 20.0}, {30.0, 200.0}};
  CHECK_THROWS_AS(validate_session(s), IntegrityError);
  s.pinch_intervals = {{10.0, 20.0}, {30.0, 40.0}};
  CHECK_NOTHROW(validate_session(s));
}

TEST_CASE("zero gain zero noise gives constant video", "[dataset]") {
  SynthConfig cfg = small_config();
  cfg.duration_s = 30.0;
  cfg.pinch_intervals.clear();
  cfg.pixel_gain = 0.0;
  cfg.cardiac_gain = 0.0;
  cfg.noise_level = 0.0;
  Session s = generate_synthetic_session(cfg, 2);
  std::vector<float> a(s.face_frames->frame_elems());
  std::vector<float> b(a.size());
  s.face_frames->read_frame(0, a.data());
  for (std::size_t i : {std::size_t(1), std::size_t(100), s.face_frames->count() - 1}) {
    s.face_frames->read_frame(i, b.data());
    CHECK(a == b);
  }
}

TEST_CASE("same seed reproduces the session bit for bit", "[dataset]") {
  SynthConfig cfg = small_config();
  cfg.duration_s = 60.0;
  cfg.pinch_intervals = {{20.0, 30.0}};
  Session s1 = generate_synthetic_session(cfg, 3);
  Session s2 = generate_synthetic_session(cfg, 3);
  CHECK(s1.eda.values == s2.eda.values);
  CHECK(s1.ppg.values == s2.ppg.values);
  CHECK(s1.skin_type == s2.skin_type);
  std::vector<float> a(s1.face_frames->frame_elems()), b(a.size());
  for (std::size_t i : {std::size_t(0), std::size_t(57), std::size_t(599)}) {
    s1.face_frames->read_frame(i, a.data());
    s2.face_frames->read_frame(i, b.data());
    CHECK(a == b);
  }
  Session s3 = generate_synthetic_session(cfg, 4);
  CHECK(s1.eda.values != s3.eda.values);
}

TEST_CASE("modulation tracks tonic EDA and stays in band", "[dataset]") {
  SynthConfig cfg = small_config();
  for (std::uint64_t pid : {1, 2, 3}) {
    Session s = generate_synthetic_session(cfg, pid);
    REQUIRE(s.synth_internals);
    const auto& in = *s.synth_internals;
    const double rho = spearman(in.modulation.values, in.tonic.values);
    CHECK(rho >= 0.9);
    const double frac = band_energy_fraction(in.modulation.values, in.modulation.fs,
                                             cfg.arousal_band.first,
                                             cfg.arousal_band.second);
    CHECK(frac >= 0.9);
    const double cfrac = band_energy_fraction(in.cardiac.values, in.cardiac.fs,
                                              cfg.cardiac_band.first,
                                              cfg.cardiac_band.second);
    CHECK(cfrac >= 0.9);
  }
}

TEST_CASE("responder screening on strong pinch steps", "[dataset]") {
  SynthConfig cfg = small_config();
  cfg.w_gain = 0.3;
  cfg.train_gain = 3.0;
  for (std::uint64_t pid : {1, 2, 3, 4}) {
    Session s = generate_synthetic_session(cfg, pid);
    ScreenResult r = screen_responders(s);
    CHECK(r.responsive);
    CHECK(r.p_value < 0.01);
    // independent check against the t table: two-sided critical value for
    // df = 2 at alpha = 0.01 is 9.925
    CHECK(std::fabs(r.t_stat) > 9.925);
  }
}

TEST_CASE("flat EDA is non-responsive with p 1", "[dataset]") {
  Session s = manual_session(200.0, 200.0);
  s.pinch_intervals = {{60.0, 90.0}, {120.0, 150.0}};
  ScreenResult r = screen_responders(s);
  CHECK(r.t_stat == 0.0);
  CHECK(r.p_value == 1.0);
  CHECK_FALSE(r.responsive);
}

TEST_CASE("screening sign symmetry", "[dataset]") {
  SynthConfig cfg = small_config();
  Session s = generate_synthetic_session(cfg, 6);
  ScreenResult r = screen_responders(s);
  Session neg = s;
  neg.eda.values = s.eda.values;
  for (auto& v : neg.eda.values) v = -v;
  ScreenResult rn = screen_responders(neg);
  CHECK(rn.t_stat == Approx(-r.t_stat).margin(1e-12));
  CHECK(rn.p_value == Approx(r.p_value).margin(1e-12));
}

TEST_CASE("screening needs at least two pinches", "[dataset]") {
  Session s = manual_session(200.0, 200.0);
  s.pinch_intervals = {{60.0, 90.0}};
  CHECK_THROWS_AS(screen_responders(s), InsufficientDataError);
}

TEST_CASE("session round-trips through disk exactly", "[dataset]") {
  SynthConfig cfg = small_config();
  cfg.duration_s = 30.0;
  cfg.pinch_intervals = {{12.0, 18.0}};
  Session s = generate_synthetic_session(cfg, 7);
  const fs::path dir = temp_dir("roundtrip");
  save_session(s, dir / "p07");
  Session r = load_session(dir / "p07");

  CHECK(r.participant_id == s.participant_id);
  CHECK(r.skin_type == s.skin_type);
  CHECK(r.pinch_intervals == s.pinch_intervals);
  CHECK(r.eda.fs == s.eda.fs);
  CHECK(r.eda.values == s.eda.values);
  CHECK(r.ppg.values == s.ppg.values);
  REQUIRE(r.face_frames->count() == s.face_frames->count());
  std::vector<float> a(s.face_frames->frame_elems()), b(a.size());
  for (std::size_t i = 0; i < s.face_frames->count(); i += 37) {
    s.face_frames->read_frame(i, a.data());
    r.face_frames->read_frame(i, b.data());
    REQUIRE(a == b);
  }

  // second save produces byte-identical files
  save_session(r, dir / "again");
  CHECK(read_text_file(dir / "p07" / "eda.csv") ==
        read_text_file(dir / "again" / "eda.csv"));
  CHECK(read_text_file(dir / "p07" / "face_video" / "chunk_00000.bin") ==
        read_text_file(dir / "again" / "face_video" / "chunk_00000.bin"));
  fs::remove_all(dir);
}

TEST_CASE("load errors name the missing file", "[dataset]") {
  SynthConfig cfg = small_config();
  cfg.duration_s = 12.0;
  cfg.pinch_intervals.clear();
  Session s = generate_synthetic_session(cfg, 8);
  const fs::path dir = temp_dir("missing");
  save_session(s, dir / "p08");
  fs::remove(dir / "p08" / "eda.csv");
  try {
    load_session(dir / "p08");
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("eda.csv") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("synth config validation", "[dataset]") {
  SynthConfig cfg;
  cfg.fs_video = 30.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.pixel_gain = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.pinch_intervals = {{500.0, 600.0}};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.fs_physio = 4.0;  // cardiac band tops out above Nyquist
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
