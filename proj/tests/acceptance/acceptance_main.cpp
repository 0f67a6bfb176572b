// Acceptance checklist: one PASS/FAIL line per criterion, exit 0 only if all
// pass. Each check rebuilds its expectations from scratch (explicit loops,
// re-derived formulas) instead of calling back into the code paths it judges.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <edacam/dataset.hpp>
#include <edacam/eda.hpp>
#include <edacam/evaluation.hpp>
#include <edacam/model.hpp>
#include <edacam/preprocess.hpp>
#include <edacam/stats.hpp>
#include <edacam/stress.hpp>
#include <edacam/training.hpp>

using namespace edacam;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. temporal attention weighting
// ---------------------------------------------------------------------------

void check_attention() {
  Rng shape_rng(101);
  for (int rep = 0; rep < 20; ++rep) {
    const auto N = static_cast<std::size_t>(shape_rng.uniform_int(1, 4));
    const auto C = static_cast<std::size_t>(shape_rng.uniform_int(1, 6));
    const auto r = std::size_t(1) << shape_rng.uniform_int(0, 2);  // 1, 2, 4
    const auto T = r * static_cast<std::size_t>(shape_rng.uniform_int(1, 6));
    const auto H = static_cast<std::size_t>(shape_rng.uniform_int(1, 5));
    const auto W = static_cast<std::size_t>(shape_rng.uniform_int(1, 5));

    Rng init(1000 + static_cast<std::uint64_t>(rep));
    nn::TamBlock<double> tam(C, T, r, init, "tam");
    Tensor<double> x({N, C, T, H, W});
    for (auto& v : x.flat()) v = init.normal(0.0, 1.0);

    auto [y, att] = tam.forward(x);
    require(att.shape() == std::vector<std::size_t>({N, T}),
            "attention shape mismatch");
    for (double a : att.flat())
      require(a > 0.0 && a < 1.0, "attention weight outside (0,1): " + fmt(a));

    // explicit index-loop oracle for the broadcast multiply
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w) {
              const double want = att(n, t) * x(n, c, t, h, w);
              const double got = y(n, c, t, h, w);
              require(got == want, "broadcast multiply differs from loop oracle");
            }
  }

  // zero logits: output layer of the bottleneck zeroed, so the sigmoid sees 0
  // and every weight is exactly 0.5
  Rng init(7);
  nn::TamBlock<double> tam(3, 8, 2, init, "tam");
  std::vector<nn::ParamRef<double>> refs;
  tam.collect(refs);
  bool zeroed = false;
  for (auto& p : refs)
    if (p.name.find("fc2") != std::string::npos) {
      for (auto& v : p.value->flat()) v = 0.0;
      zeroed = true;
    }
  require(zeroed, "no fc2 parameters found to zero");
  Tensor<double> x({2, 3, 8, 4, 4});
  for (auto& v : x.flat()) v = init.normal(0.0, 1.0);
  auto [y, att] = tam.forward(x);
  for (double a : att.flat()) require(a == 0.5, "zero-logit attention is not 0.5");
  const auto& xf = x.flat();
  const auto& yf = y.flat();
  for (std::size_t i = 0; i < xf.size(); ++i)
    require(yf[i] == 0.5 * xf[i], "zero-logit output is not exactly half the input");
}

// ---------------------------------------------------------------------------
// 2. parameter budget
// ---------------------------------------------------------------------------

void check_parameter_budget() {
  Model<float> model{ModelConfig{}};
  const auto breakdown = model.parameter_breakdown();
  std::size_t total = 0;
  for (const auto& [name, count] : breakdown) total += count;

  // cross-check the breakdown against the flattened parameter list
  std::size_t from_refs = 0;
  for (const auto& p : model.params()) from_refs += p.value->size();
  require(from_refs == total, "parameter breakdown disagrees with parameter list");

  const std::size_t tam = breakdown.at("tam1") + breakdown.at("tam2");
  const double share = static_cast<double>(tam) / static_cast<double>(total);
  require(total >= 750000 && total <= 830000,
          "total parameter count " + std::to_string(total) + " outside [750k, 830k]");
  require(tam >= 21000 && tam <= 26000,
          "attention parameter count " + std::to_string(tam) + " outside [21k, 26k]");
  require(share >= 0.02 && share <= 0.04,
          "attention share " + fmt(share) + " outside [2%, 4%]");
}

// ---------------------------------------------------------------------------
// 3. gradient check
// ---------------------------------------------------------------------------

void check_gradients() {
  ModelConfig cfg;
  cfg.T = 32;
  cfg.resolution = 16;
  cfg.channels = {4, 6, 8};
  cfg.reduction = 4;
  cfg.seed = 5;
  Model<double> model(cfg);

  Rng rng(11);
  Tensor<double> x({2, 3, 32, 16, 16});
  for (auto& v : x.flat()) v = rng.normal(0.0, 1.0);
  Tensor<double> y({2, 32});
  for (auto& v : y.flat()) v = rng.normal(0.0, 1.0);

  nn::MseLoss<double> loss;
  auto eval_loss = [&]() {
    return static_cast<double>(loss.forward(model.forward(x, true), y));
  };

  auto refs = model.params();
  for (auto& p : refs)
    for (auto& g : p.grad->flat()) g = 0.0;
  eval_loss();
  model.backward(loss.backward());

  std::size_t total_elems = 0;
  for (const auto& p : refs) total_elems += p.value->size();

  const int samples = 96;
  int agreeing = 0;
  for (int s = 0; s < samples; ++s) {
    auto pick = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(total_elems) - 1));
    std::size_t ri = 0;
    while (pick >= refs[ri].value->size()) {
      pick -= refs[ri].value->size();
      ++ri;
    }
    double& v = refs[ri].value->flat()[pick];
    const double analytic = refs[ri].grad->flat()[pick];

    const double keep = v;
    const double h = 1e-5 * std::max(1.0, std::fabs(keep));
    v = keep + h;
    const double lp = eval_loss();
    v = keep - h;
    const double lm = eval_loss();
    v = keep;
    const double fd = (lp - lm) / (2.0 * h);

    const double mag = std::max(std::fabs(fd), std::fabs(analytic));
    const double rel = mag > 0.0 ? std::fabs(fd - analytic) / mag : 0.0;
    if (mag < 1e-7 || rel < 1e-4)
      ++agreeing;
    else
      throw std::runtime_error("gradient mismatch at " + refs[ri].name + "[" +
                               std::to_string(pick) + "]: analytic " +
                               fmt(analytic) + ", finite difference " + fmt(fd));
  }
  require(agreeing >= 64, "fewer than 64 gradient samples checked");
}

// ---------------------------------------------------------------------------
// 4. rank correlation oracle
// ---------------------------------------------------------------------------

std::vector<double> oracle_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double oracle_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

void check_spearman() {
  Rng rng(404);
  int done = 0;
  while (done < 100) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(3, 500));
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal(0.0, 1.0);
      y[i] = rng.normal(0.0, 1.0);
      if (rng.uniform() < 0.4) x[i] = std::round(x[i] * 2.0) / 2.0;  // ties
      if (rng.uniform() < 0.4) y[i] = std::round(y[i] * 2.0) / 2.0;
    }
    const auto [xm, xM] = std::minmax_element(x.begin(), x.end());
    const auto [ym, yM] = std::minmax_element(y.begin(), y.end());
    if (*xm == *xM || *ym == *yM) continue;  // constant draws are undefined
    ++done;
    const double got = spearman(x, y);
    const double want = oracle_pearson(oracle_ranks(x), oracle_ranks(y));
    require(std::fabs(got - want) <= 1e-12,
            "spearman " + fmt(got) + " vs rank-then-pearson oracle " + fmt(want));
  }

  for (int rep = 0; rep < 20; ++rep) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(5, 204));
    std::vector<double> x(n), y(n), fx(n), gy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal(0.0, 1.0);
      y[i] = rng.normal(0.0, 1.0);
      if (rng.uniform() < 0.4) y[i] = std::round(y[i]);
      fx[i] = std::exp(x[i]);             // strictly increasing
      gy[i] = y[i] * y[i] * y[i] + 2.0 * y[i];  // strictly increasing
    }
    const auto [ym, yM] = std::minmax_element(y.begin(), y.end());
    if (*ym == *yM) {
      --rep;
      continue;
    }
    require(spearman(fx, gy) == spearman(x, y),
            "rank correlation changed under monotone transforms");
  }
}

// ---------------------------------------------------------------------------
// shared synthetic-session helpers
// ---------------------------------------------------------------------------

SynthConfig scaled_config(double duration_s, int resolution, double fs_physio,
                          std::uint64_t seed) {
  SynthConfig sc;
  sc.duration_s = duration_s;
  sc.fs_video = 10.0;
  sc.fs_physio = fs_physio;
  sc.height = sc.width = resolution;
  sc.seed = seed;
  const double k = duration_s / 570.0;
  for (auto& [a, b] : sc.pinch_intervals) {
    a *= k;
    b *= k;
  }
  sc.validate();
  return sc;
}

struct Prepared {
  std::map<std::string, Session> sessions;
  ClipSet clips;
};

Prepared prepare_participants(const SynthConfig& sc, int n, std::size_t T,
                              int crop_res) {
  CropConfig cc;
  cc.resolution = crop_res;
  cc.fallback = FallbackMode::full_frame;
  Prepared out;
  for (int p = 1; p <= n; ++p) {
    Session s = generate_synthetic_session(sc, static_cast<std::uint64_t>(p));
    const VideoTensor v = preprocess_video(*s.face_frames, cc, 10.0);
    auto cs = window_clips(v, s.eda, s.participant_id, T, T, "raw");
    require(!cs.empty(), s.participant_id + " produced no windows");
    const std::string id = s.participant_id;
    out.clips.emplace(id, std::move(cs));
    out.sessions.emplace(id, std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// 5. cross-validation integrity
// ---------------------------------------------------------------------------

void check_loso_integrity() {
  const SynthConfig sc = scaled_config(60.0, 16, 8.0, 77);
  Prepared d = prepare_participants(sc, 18, 64, 16);

  ModelConfig mcfg;
  mcfg.T = 64;
  mcfg.resolution = 16;
  mcfg.channels = {4, 6, 8};
  mcfg.reduction = 4;
  TrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.batch_size = 4;
  tcfg.seeds = {1};
  tcfg.target_kind = "raw";

  const ResultTable table = run_experiment<float>(d.sessions, d.clips, mcfg, tcfg);
  require(table.cells.size() == 18,
          "expected 18 folds, got " + std::to_string(table.cells.size()));
  std::set<std::string> tested;
  for (const auto& c : table.cells) {
    require(!c.failed, "fold " + c.participant + " failed: " + c.error);
    require(tested.insert(c.participant).second,
            "participant " + c.participant + " tested more than once");
  }
  for (const auto& [id, s] : d.sessions)
    require(tested.count(id) == 1, id + " never tested");
  require(table.leakage_checks == 18,
          "leakage screen ran " + std::to_string(table.leakage_checks) +
              " times, expected 18 clean passes");
}

// ---------------------------------------------------------------------------
// 6. protocol windowing
// ---------------------------------------------------------------------------

void check_protocol_windowing() {
  SynthConfig sc;
  sc.fs_video = 10.0;
  sc.fs_physio = 8.0;
  sc.height = sc.width = 8;
  sc.seed = 3;
  sc.validate();
  const Session s = generate_synthetic_session(sc, 1);
  const auto windows = window_session(s);
  require(windows.size() == 19,
          "expected 19 windows, got " + std::to_string(windows.size()));
  std::vector<std::size_t> stress_at;
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (windows[i].stress) stress_at.push_back(i);
  // pinches start at minutes 2, 4.5 and 7: windows 4, 9 and 14
  require(stress_at == std::vector<std::size_t>({4, 9, 14}),
          "stress labels not at minutes 2, 4.5, 7");
}

// ---------------------------------------------------------------------------
// 7. synthetic learnability
// ---------------------------------------------------------------------------

void check_learnability() {
  SynthConfig sc = scaled_config(480.0, 36, 8.0, 42);
  // arousal must outrun the pixel noise floor, and the band has to keep a few
  // oscillation cycles inside every 25.6 s window so the per-window label
  // scale stays O(1); a band squeezed near DC turns the labels into huge
  // slope-over-fluctuation ratios that no regressor should be asked to chase
  sc.arousal_band = {0.002, 0.10};
  sc.pixel_gain = 20.0;
  sc.cardiac_gain = 0.05;
  sc.noise_level = 1.0;
  sc.w_gain = 1.5;
  sc.train_gain = 0.1;
  sc.validate();
  Prepared d = prepare_participants(sc, 10, 256, 36);

  ModelConfig mcfg;
  mcfg.T = 256;
  mcfg.resolution = 36;
  mcfg.reduction = 16;
  mcfg.seed = 1;
  TrainConfig tcfg;
  tcfg.epochs = 10;
  tcfg.batch_size = 2;
  tcfg.learning_rate = 5e-4;
  tcfg.seeds = {1};
  tcfg.target_kind = "raw";

  const ResultTable table = run_experiment<float>(d.sessions, d.clips, mcfg, tcfg);
  require(table.cells.size() == 10, "expected 10 folds");
  for (const auto& c : table.cells)
    require(!c.failed, "fold " + c.participant + " failed: " + c.error);
  require(std::isfinite(table.mean_tonic), "mean held-out correlation undefined");
  require(table.mean_tonic >= 0.5,
          "held-out mean tonic correlation " + fmt(table.mean_tonic) + " < 0.5");
}

// ---------------------------------------------------------------------------
// 8. eda decomposition
// ---------------------------------------------------------------------------

void check_eda_decomposition() {
  const double fs = 4.0;
  const std::size_t n = 480;
  const double bump_at[3] = {30.0, 60.0, 90.0};
  auto kernel = [](double u) {
    return u >= 0.0 ? std::exp(-u / 2.0) - std::exp(-u / 0.7) : 0.0;
  };
  Series eda;
  eda.fs = fs;
  eda.units = "microsiemens";
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    double v = 5.0 + 0.4 * std::sin(2.0 * M_PI * 0.008 * t);
    for (double b : bump_at) v += 1.5 * kernel(t - b);
    eda.values.push_back(v);
  }
  std::vector<std::size_t> truth;
  for (double b : bump_at) {
    std::size_t best = 0;
    double bv = -1.0;
    for (std::size_t i = 0; i < n; ++i)
      if (kernel(static_cast<double>(i) / fs - b) > bv) {
        bv = kernel(static_cast<double>(i) / fs - b);
        best = i;
      }
    truth.push_back(best);
  }

  const EDADecomposition dec = decompose_tonic(eda);
  double range = 0.0;
  for (double v : eda.values) range = std::max(range, std::fabs(v));
  for (std::size_t i = 0; i < n; ++i) {
    const double recon =
        dec.tonic.values[i] + dec.phasic.values[i] + dec.residual.values[i];
    require(std::fabs(recon - eda.values[i]) <= 1e-6 * range,
            "tonic + phasic + residual does not reproduce the input");
  }

  struct Peak {
    std::size_t i;
    double v;
  };
  std::vector<Peak> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (dec.phasic.values[i] > dec.phasic.values[i - 1] &&
        dec.phasic.values[i] >= dec.phasic.values[i + 1])
      peaks.push_back({i, dec.phasic.values[i]});
  require(peaks.size() >= 3, "fewer than 3 phasic peaks found");
  std::sort(peaks.begin(), peaks.end(),
            [](const Peak& a, const Peak& b) { return a.v > b.v; });
  std::vector<std::size_t> top = {peaks[0].i, peaks[1].i, peaks[2].i};
  std::sort(top.begin(), top.end());
  for (int k = 0; k < 3; ++k) {
    const double off = std::fabs(static_cast<double>(top[k]) -
                                 static_cast<double>(truth[k]));
    require(off <= 2.0, "phasic peak " + std::to_string(k) + " off by " +
                            fmt(off) + " samples");
  }

  Series flat;
  flat.fs = 4.0;
  flat.units = "microsiemens";
  flat.values.assign(200, 5.0);
  const EDADecomposition dflat = decompose_tonic(flat);
  for (double v : dflat.phasic.values)
    require(v == 0.0, "constant input produced nonzero phasic drive");
}

// ---------------------------------------------------------------------------
// 9. stress classifier sanity
// ---------------------------------------------------------------------------

void check_stress_sanity() {
  // a predictor that always answers rest hits exactly chance balanced accuracy
  Confusion all_rest;
  all_rest.tp = 0;
  all_rest.fp = 0;
  all_rest.tn = 16 * 6;
  all_rest.fn = 3 * 6;
  require(balanced_accuracy(all_rest) == 0.5,
          "always-rest balanced accuracy is not exactly 0.5");

  // EDA steps up during pinches; the pulse is stress-independent throughout
  const std::vector<std::pair<double, double>> pinches = {
      {120.0, 150.0}, {270.0, 300.0}, {420.0, 450.0}};
  const double fs = 8.0;
  const std::size_t ns = static_cast<std::size_t>(570.0 * fs);
  std::vector<ParticipantWindows> parts;
  for (int p = 1; p <= 6; ++p) {
    Rng rng(Rng::mix(909, static_cast<std::uint64_t>(p)));
    Series eda, ppg;
    eda.fs = ppg.fs = fs;
    eda.units = "microsiemens";
    ppg.units = "a.u.";
    const double base = 4.0 + 0.4 * p;
    const double f_heart = 1.0 + 0.05 * p;
    for (std::size_t i = 0; i < ns; ++i) {
      const double t = static_cast<double>(i) / fs;
      bool in_pinch = false;
      for (const auto& [a, b] : pinches) in_pinch = in_pinch || (t >= a && t < b);
      eda.values.push_back(base + (in_pinch ? 3.0 : 0.0) + rng.normal(0.0, 0.05));
      ppg.values.push_back(std::sin(2.0 * M_PI * f_heart * t) +
                           rng.normal(0.0, 0.05));
    }
    char id[8];
    std::snprintf(id, sizeof(id), "p%02d", p);
    parts.push_back(featurize_session(id, window_signals(eda, ppg, pinches, 570.0)));
  }

  const StressReport eda_only = classify_stress(parts, FeatureMode::eda_only);
  const StressReport ppg_only = classify_stress(parts, FeatureMode::ppg_only);
  require(eda_only.bacc >= 0.85, "eda-only balanced accuracy " +
                                     fmt(eda_only.bacc) + " below 0.85");
  require(ppg_only.bacc <= 0.65, "stress-independent pulse features reached " +
                                     fmt(ppg_only.bacc) + " balanced accuracy");
}

// ---------------------------------------------------------------------------
// 10. degenerate input robustness
// ---------------------------------------------------------------------------

void check_degenerate_inputs() {
  SynthConfig sc = scaled_config(60.0, 16, 8.0, 55);
  sc.pixel_gain = 0.0;
  sc.cardiac_gain = 0.0;
  sc.noise_level = 0.0;
  sc.w_gain = 0.0;
  sc.train_gain = 0.0;
  Session s = generate_synthetic_session(sc, 1);

  const auto [emin, emax] =
      std::minmax_element(s.eda.values.begin(), s.eda.values.end());
  require(*emin == *emax, "zero-gain generator produced varying eda");

  CropConfig cc;
  cc.resolution = 16;
  cc.fallback = FallbackMode::full_frame;
  const VideoTensor video = preprocess_video(*s.face_frames, cc, 10.0);
  float vmin = video.data.flat().front(), vmax = vmin;
  for (float v : video.data.flat()) {
    require(std::isfinite(v), "non-finite pixel after preprocessing");
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }

  const auto clips = window_clips(video, s.eda, s.participant_id, 64, 64, "raw");
  require(!clips.empty(), "no windows from the degenerate session");
  for (const auto& c : clips) {
    for (float v : c.diff.flat())
      require(std::isfinite(v), "non-finite normalized frame difference");
    for (float v : c.labels) require(std::isfinite(v), "non-finite label");
  }

  ModelConfig mcfg;
  mcfg.T = 64;
  mcfg.resolution = 16;
  mcfg.channels = {4, 6, 8};
  mcfg.reduction = 4;
  Model<float> model(mcfg);
  std::vector<double> preds;
  for (const auto& c : clips) {
    const auto y = forward(model, c);
    for (double v : y) require(std::isfinite(v), "non-finite model output");
    preds.insert(preds.end(), y.begin(), y.end());
  }

  bool policy_fired = false;
  try {
    evaluate_participant(preds, s, "raw", 10.0, 64);
  } catch (const UndefinedCorrelationError&) {
    policy_fired = true;
  }
  require(policy_fired, "undefined-correlation policy did not trigger");

  const EDADecomposition dec = decompose_tonic(s.eda);
  for (double v : dec.tonic.values)
    require(std::isfinite(v), "non-finite tonic from constant eda");
  for (double v : dec.phasic.values)
    require(v == 0.0, "constant eda produced phasic drive");

  bool peaks_refused = false;
  try {
    Series flat;
    flat.fs = 20.0;
    flat.units = "a.u.";
    flat.values.assign(600, 1.0);
    detect_peaks(flat);
  } catch (const InsufficientDataError&) {
    peaks_refused = true;
  }
  require(peaks_refused, "peak detection accepted a flat pulse");

  bool motion_refused = false;
  try {
    motion_probe(preds, video);
  } catch (const UndefinedCorrelationError&) {
    motion_refused = true;
  } catch (const InsufficientDataError&) {
    motion_refused = true;
  }
  require(vmax > vmin || motion_refused,
          "motion probe scored a static video");
}

// ---------------------------------------------------------------------------
// 11. determinism
// ---------------------------------------------------------------------------

void check_determinism() {
  const SynthConfig sc = scaled_config(60.0, 16, 8.0, 31);
  const fs::path dir =
      fs::temp_directory_path() / "edacam_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);

  auto one_run = [&](const fs::path& csv) {
    Prepared d = prepare_participants(sc, 3, 64, 16);
    ModelConfig mcfg;
    mcfg.T = 64;
    mcfg.resolution = 16;
    mcfg.channels = {4, 6, 8};
    mcfg.reduction = 4;
    TrainConfig tcfg;
    tcfg.epochs = 1;
    tcfg.batch_size = 4;
    tcfg.seeds = {1};
    tcfg.target_kind = "raw";
    const ResultTable table = run_experiment<float>(d.sessions, d.clips, mcfg, tcfg);
    write_results_csv(csv, table);

    // stress path on full-length sessions; only the signals are touched, so
    // generation stays cheap
    SynthConfig full;
    full.fs_video = 10.0;
    full.fs_physio = 8.0;
    full.height = full.width = 8;
    full.seed = 31;
    full.validate();
    std::vector<ParticipantWindows> parts;
    for (int p = 1; p <= 3; ++p) {
      const Session s = generate_synthetic_session(full, static_cast<std::uint64_t>(p));
      parts.push_back(featurize_session(s.participant_id, window_session(s)));
    }
    StressReport r = classify_stress(parts, FeatureMode::eda_only);
    write_stress_report_csv(csv.parent_path() / (csv.stem().string() + "_stress.csv"),
                            {r});
  };

  one_run(dir / "a.csv");
  one_run(dir / "b.csv");
  require(read_text_file(dir / "a.csv") == read_text_file(dir / "b.csv"),
          "training result CSVs differ between identical runs");
  require(read_text_file(dir / "a_stress.csv") ==
              read_text_file(dir / "b_stress.csv"),
          "stress report CSVs differ between identical runs");
  fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    double budget_s;  // 0 = no budget enforced
    std::function<void()> fn;
  };
  const std::vector<Criterion> checklist = {
      {"temporal attention weighting", 10.0, check_attention},
      {"parameter budget", 5.0, check_parameter_budget},
      {"gradient check", 120.0, check_gradients},
      {"rank correlation oracle", 0.0, check_spearman},
      {"cross-validation integrity", 0.0, check_loso_integrity},
      {"protocol windowing", 0.0, check_protocol_windowing},
      {"synthetic learnability", 7200.0, check_learnability},
      {"eda decomposition", 0.0, check_eda_decomposition},
      {"stress classifier sanity", 0.0, check_stress_sanity},
      {"degenerate input robustness", 0.0, check_degenerate_inputs},
      {"determinism", 0.0, check_determinism},
  };

  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoul(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < checklist.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    const auto& c = checklist[i];
    const auto t0 = std::chrono::steady_clock::now();
    std::string error;
    try {
      c.fn();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (error.empty() && c.budget_s > 0.0 && dt > c.budget_s)
      error = "runtime " + fmt(dt) + " s exceeds budget " + fmt(c.budget_s) + " s";
    if (error.empty()) {
      std::printf("PASS %2zu/11 %-32s (%.1f s)\n", i + 1, c.name, dt);
    } else {
      std::printf("FAIL %2zu/11 %-32s (%.1f s): %s\n", i + 1, c.name, dt,
                  error.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criteria failed\n", failures);
  return 1;
}
