#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <edacam/model.hpp>
#include <edacam/rng.hpp>

using namespace edacam;
using Catch::Approx;

namespace {

Tensor<double> random_tensor_d(const std::vector<std::size_t>& shape, Rng& rng) {
  Tensor<double> t(shape);
  for (double& v : t.flat()) v = rng.normal();
  return t;
}

Tensor<float> random_tensor_f(const std::vector<std::size_t>& shape, Rng& rng) {
  Tensor<float> t(shape);
  for (float& v : t.flat()) v = static_cast<float>(rng.normal());
  return t;
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.channels = {4, 6, 8};
  cfg.T = 32;
  cfg.reduction = 4;
  cfg.resolution = 16;
  cfg.seed = 77;
  return cfg;
}

}  // namespace

TEST_CASE("parameter counts match the frozen layout", "[model]") {
  ModelConfig cfg;  // defaults: channels 16/32/64, T=768, r=16, 72x72
  Model<float> m(cfg);
  ParamCount pc = count_parameters(m);

  CHECK(pc.total == 792359);
  CHECK(pc.total >= 750000);
  CHECK(pc.total <= 830000);

  std::size_t sum = 0;
  for (const auto& [name, n] : pc.per_submodule) sum += n;
  CHECK(sum == pc.total);

  // attention blocks: channel conv 64+1 plus the two bottleneck MLPs
  const std::size_t mlp1 = 192 * 12 + 12 + 12 * 192 + 192;
  const std::size_t mlp2 = 384 * 24 + 24 + 24 * 384 + 384;
  CHECK(mlp1 + mlp2 == 23652);
  CHECK(pc.per_submodule.at("tam1") == mlp1 + 65);
  CHECK(pc.per_submodule.at("tam2") == mlp2 + 65);
  const double share =
      static_cast<double>(pc.per_submodule.at("tam1") + pc.per_submodule.at("tam2")) /
      static_cast<double>(pc.total);
  CHECK(share == Approx(0.03).margin(0.005));
}

TEST_CASE("tam attention semantics", "[model]") {
  Rng rng(401);
  nn::TamBlock<double> tam(3, 8, 4, rng, "tam_t");
  Tensor<double> x = random_tensor_d({2, 3, 8, 2, 2}, rng);

  SECTION("broadcast matches the loop oracle for injected attention") {
    Tensor<double> injected({2, 8});
    for (double& v : injected.flat()) v = rng.uniform(0.05, 0.95);
    tam.attention_hook = [&](Tensor<double>& a) { a = injected; };
    auto [y, att] = tam.forward(x);
    REQUIRE(att.same_shape(injected));
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t t = 0; t < 8; ++t)
          for (std::size_t h = 0; h < 2; ++h)
            for (std::size_t w = 0; w < 2; ++w)
              REQUIRE(y(n, c, t, h, w) == injected(n, t) * x(n, c, t, h, w));
  }

  SECTION("all-ones attention reduces the block to identity") {
    tam.attention_hook = [](Tensor<double>& a) { a.fill(1.0); };
    auto [y, att] = tam.forward(x);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(y.flat()[i] == x.flat()[i]);
  }

  SECTION("attention stays strictly inside (0, 1)") {
    auto [y, att] = tam.forward(x);
    for (double a : att.flat()) {
      REQUIRE(a > 0.0);
      REQUIRE(a < 1.0);
    }
  }

  SECTION("zeroed weights give exactly half the input") {
    nn::TamBlock<double> zeroed(3, 8, 4, rng, "tam_z");
    std::vector<nn::ParamRef<double>> refs;
    zeroed.collect(refs);
    for (auto& r : refs) r.value->fill(0.0);
    auto [y, att] = zeroed.forward(x);
    for (double a : att.flat()) REQUIRE(a == 0.5);
    for (std::size_t i = 0; i < x.size(); ++i)
      REQUIRE(y.flat()[i] == 0.5 * x.flat()[i]);
  }

  SECTION("temporal length must be divisible by the reduction") {
    CHECK_THROWS_AS(nn::TamBlock<double>(3, 10, 4, rng, "tam_bad"), ConfigError);
  }
}

TEST_CASE("model config validation", "[model]") {
  ModelConfig bad_t = tiny_config();
  bad_t.T = 50;
  CHECK_THROWS_AS(Model<float>(bad_t), ConfigError);

  ModelConfig bad_r = tiny_config();
  bad_r.reduction = 7;
  CHECK_THROWS_AS(Model<float>(bad_r), ConfigError);

  ModelConfig bad_c = tiny_config();
  bad_c.channels[1] = 0;
  CHECK_THROWS_AS(Model<float>(bad_c), ConfigError);
}

TEST_CASE("output length equals T across supported window lengths", "[model]") {
  Rng rng(402);
  for (std::size_t T : {256UL, 384UL, 512UL, 768UL, 1024UL}) {
    ModelConfig cfg;
    cfg.channels = {4, 6, 8};
    cfg.T = T;
    cfg.reduction = 16;
    cfg.resolution = 36;
    Model<float> m(cfg);
    Tensor<float> x = random_tensor_f({1, 3, T, 36, 36}, rng);
    Tensor<float> y = m.forward(x, false);
    REQUIRE(y.shape() == std::vector<std::size_t>{1, T});
    for (float v : y.flat()) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("default config forward produces length 768", "[model]") {
  ModelConfig cfg;
  Model<float> m(cfg);
  Rng rng(403);
  Tensor<float> x({1, 3, 768, 72, 72});
  for (float& v : x.flat()) v = static_cast<float>(rng.normal(0.0, 0.1));
  Tensor<float> y = m.forward(x, false);
  REQUIRE(y.shape() == std::vector<std::size_t>{1, 768});
  for (float v : y.flat()) REQUIRE(std::isfinite(v));
}

TEST_CASE("zero input gives finite deterministic output", "[model]") {
  ModelConfig cfg = tiny_config();
  Model<float> m(cfg);
  Tensor<float> x({2, 3, 32, 16, 16});
  x.fill(0.0f);
  Tensor<float> y1 = m.forward(x, false);
  for (float v : y1.flat()) REQUIRE(std::isfinite(v));

  Rng rng(404);
  Tensor<float> xr = random_tensor_f({2, 3, 32, 16, 16}, rng);
  Tensor<float> a = m.forward(xr, false);
  Tensor<float> b = m.forward(xr, false);
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a.flat()[i] == b.flat()[i]);

  Tensor<float> wrong({2, 3, 64, 16, 16});
  CHECK_THROWS_AS(m.forward(wrong, false), InputError);
}

TEST_CASE("full model gradient check on the tiny config", "[model]") {
  ModelConfig cfg = tiny_config();
  Model<double> m(cfg);
  Rng rng(405);
  Tensor<double> x = random_tensor_d({2, 3, 32, 16, 16}, rng);
  Tensor<double> target({2, 32});
  for (double& v : target.flat()) v = rng.normal();

  auto refs = m.params();
  for (auto& r : refs) r.grad->fill(0.0);
  nn::MseLoss<double> mse;
  mse.forward(m.forward(x, true), target);
  m.backward(mse.backward());

  auto loss = [&] {
    nn::MseLoss<double> l;
    return l.forward(m.forward(x, true), target);
  };

  // spread 64 probes across every parameter tensor by global flat index
  std::size_t total = 0;
  for (auto& r : refs) total += r.value->size();
  const std::size_t step = std::max<std::size_t>(1, total / 64);
  std::size_t probes = 0, base = 0;
  for (auto& r : refs) {
    const std::size_t sz = r.value->size();
    std::size_t g = (base % step == 0) ? 0 : step - base % step;
    for (; g < sz; g += step) {
      double* slot = &r.value->flat()[g];
      const double orig = *slot;
      const double eps = 1e-4;
      *slot = orig + eps;
      const double lp = loss();
      *slot = orig - eps;
      const double lm = loss();
      *slot = orig;
      const double numeric = (lp - lm) / (2.0 * eps);
      const double analytic = r.grad->flat()[g];
      const double scale = std::max({1e-6, std::fabs(numeric), std::fabs(analytic)});
      INFO(r.name << "[" << g << "] analytic " << analytic << " numeric " << numeric);
      REQUIRE(std::fabs(analytic - numeric) / scale < 1e-4);
      ++probes;
    }
    base += sz;
  }
  REQUIRE(probes >= 64);
}

TEST_CASE("checkpoint round trip", "[model]") {
  namespace sfs = std::filesystem;
  ModelConfig cfg = tiny_config();
  Model<float> m(cfg);
  Rng rng(406);
  Tensor<float> x = random_tensor_f({1, 3, 32, 16, 16}, rng);
  // a training pass moves the normalization running stats off their init
  // values; the file must carry them or the loaded model normalizes wrong
  m.forward(x, true);
  Tensor<float> y0 = m.forward(x, false);

  const auto path = sfs::temp_directory_path() / "edacam_ckpt_test.bin";
  save_checkpoint(path, m);
  Model<float> loaded = load_checkpoint<float>(path);
  CHECK(loaded.config().T == cfg.T);
  CHECK(loaded.config().channels == cfg.channels);

  auto ra = m.params();
  auto rb = loaded.params();
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    REQUIRE(ra[i].name == rb[i].name);
    REQUIRE(ra[i].value->size() == rb[i].value->size());
    for (std::size_t j = 0; j < ra[i].value->size(); ++j)
      REQUIRE(ra[i].value->flat()[j] == rb[i].value->flat()[j]);
  }
  auto ba = m.buffers();
  auto bb = loaded.buffers();
  REQUIRE(ba.size() == bb.size());
  for (std::size_t i = 0; i < ba.size(); ++i) {
    REQUIRE(ba[i].first == bb[i].first);
    REQUIRE(ba[i].second->size() == bb[i].second->size());
    for (std::size_t j = 0; j < ba[i].second->size(); ++j)
      REQUIRE(ba[i].second->flat()[j] == bb[i].second->flat()[j]);
  }
  Tensor<float> y1 = loaded.forward(x, false);
  for (std::size_t i = 0; i < y0.size(); ++i) REQUIRE(y0.flat()[i] == y1.flat()[i]);

  SECTION("corrupt magic is rejected") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
    f.close();
    CHECK_THROWS_AS(load_checkpoint<float>(path), IntegrityError);
  }

  SECTION("truncated data is rejected") {
    const auto trunc = sfs::temp_directory_path() / "edacam_ckpt_trunc.bin";
    std::ifstream in(path, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(trunc, std::ios::binary);
    out.write(all.data(), static_cast<std::streamsize>(all.size() - 64));
    out.close();
    CHECK_THROWS_AS(load_checkpoint<float>(trunc), IntegrityError);
    sfs::remove(trunc);
  }

  SECTION("scalar width mismatch is rejected") {
    CHECK_THROWS_AS(load_checkpoint<double>(path), IntegrityError);
  }
  sfs::remove(path);
}

TEST_CASE("forward on a normalized clip", "[model]") {
  ModelConfig cfg = tiny_config();
  Model<float> m(cfg);
  Rng rng(407);
  NormalizedClip clip;
  clip.diff = Tensor<float>({32, 16, 16, 3});
  for (float& v : clip.diff.flat()) v = static_cast<float>(rng.normal());
  clip.labels.assign(32, 0.0f);

  std::vector<double> pred = forward(m, clip);
  REQUIRE(pred.size() == 32);
  for (double v : pred) REQUIRE(std::isfinite(v));

  NormalizedClip wrong;
  wrong.diff = Tensor<float>({64, 16, 16, 3});
  CHECK_THROWS_AS(forward(m, wrong), InputError);
}
