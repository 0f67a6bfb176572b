#include "catch_amalgamated.hpp"

#include <cmath>

#include "edacam/rng.hpp"
#include "edacam/stats.hpp"

using namespace edacam;
using Catch::Approx;

namespace {

// Independent Spearman oracle: O(n^2) counting ranks + covariance-form
// Pearson. Deliberately a different code path from the library version.
double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto count_ranks = [n](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      double below = 0.0, equal = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) below += 1.0;
        if (j != i && v[j] == v[i]) equal += 1.0;
      }
      r[i] = 1.0 + below + 0.5 * equal;
    }
    return r;
  };
  auto rx = count_ranks(x);
  auto ry = count_ranks(y);
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += rx[i]; sy += ry[i];
    sxx += rx[i] * rx[i]; syy += ry[i] * ry[i];
    sxy += rx[i] * ry[i];
  }
  const double dn = static_cast<double>(n);
  const double cov = sxy - sx * sy / dn;
  const double vx = sxx - sx * sx / dn;
  const double vy = syy - sy * sy / dn;
  return cov / std::sqrt(vx * vy);
}

}  // namespace

TEST_CASE("spearman basic cases", "[stats]") {
  std::vector<double> up = {1, 2, 3, 4, 5};
  std::vector<double> down = {5, 4, 3, 2, 1};
  CHECK(spearman(up, up) == Approx(1.0).margin(1e-15));
  CHECK(spearman(up, down) == Approx(-1.0).margin(1e-15));
  // frozen from an independent implementation (arrays with ties)
  std::vector<double> x = {1.0, 2.0, 2.0, 3.0, 5.0, 5.0, 5.0, 7.0};
  std::vector<double> y = {3.0, 1.0, 4.0, 4.0, 2.0, 6.0, 6.0, 8.0};
  CHECK(spearman(x, y) == Approx(0.664711680191695).epsilon(1e-12));
}

TEST_CASE("spearman errors", "[stats]") {
  std::vector<double> constant = {2.0, 2.0, 2.0, 2.0};
  std::vector<double> var = {1.0, 2.0, 3.0, 4.0};
  CHECK_THROWS_AS(spearman(constant, var), UndefinedCorrelationError);
  CHECK_THROWS_AS(spearman(var, constant), UndefinedCorrelationError);
  std::vector<double> two = {1.0, 2.0};
  CHECK_THROWS_AS(spearman(two, two), InsufficientDataError);
  std::vector<double> three = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(spearman(three, two), InputError);
}

TEST_CASE("spearman agrees with independent oracle on random pairs", "[stats]") {
  Rng rng(123);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 3 + static_cast<std::size_t>(rng.uniform_int(0, 497));
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // small integer alphabet half of the time to force ties
      if (rep % 2 == 0) {
        x[i] = static_cast<double>(rng.uniform_int(0, 9));
        y[i] = static_cast<double>(rng.uniform_int(0, 9));
      } else {
        x[i] = rng.normal();
        y[i] = rng.normal();
      }
    }
    double lib;
    try {
      lib = spearman(x, y);
    } catch (const UndefinedCorrelationError&) {
      continue;  // constant draw; oracle undefined as well
    }
    CHECK(std::fabs(lib - spearman_oracle(x, y)) < 1e-12);
  }
}

TEST_CASE("spearman invariant under strictly monotone transforms", "[stats]") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 10 + static_cast<std::size_t>(rng.uniform_int(0, 40));
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-5.0, 5.0);
      y[i] = rng.uniform(-5.0, 5.0);
    }
    const double base = spearman(x, y);
    auto fx = x;
    for (auto& v : fx) v = std::exp(v);
    CHECK(spearman(fx, y) == base);
    auto cy = y;
    for (auto& v : cy) v = v * v * v;
    CHECK(spearman(x, cy) == base);
    auto ax = x;
    for (auto& v : ax) v = 3.5 * v + 11.0;
    CHECK(spearman(ax, y) == base);
  }
}

TEST_CASE("student t two-sided p against frozen references", "[stats]") {
  // frozen from an independent t-distribution implementation
  CHECK(student_t_two_sided_p(2.0, 10) == Approx(0.0733880347707404).epsilon(1e-10));
  CHECK(student_t_two_sided_p(9.925, 2) == Approx(0.00999968875810942).epsilon(1e-10));
  CHECK(student_t_two_sided_p(1.0, 3) == Approx(0.391002218955771).epsilon(1e-10));
  CHECK(student_t_two_sided_p(12.7062047361747, 1) == Approx(0.05).epsilon(1e-10));
}

TEST_CASE("paired t-test against frozen reference", "[stats]") {
  std::vector<double> a = {5.1, 6.2, 7.3, 6.9, 5.5};
  std::vector<double> b = {4.8, 5.9, 7.5, 6.1, 5.0};
  auto r = paired_ttest(a, b);
  CHECK(r.t == Approx(2.08467375424888).epsilon(1e-10));
  CHECK(r.p == Approx(0.105463872738236).epsilon(1e-9));
  CHECK(r.df == 4.0);
}

TEST_CASE("paired t-test degenerate and error cases", "[stats]") {
  std::vector<double> z = {1.0, 1.0, 1.0};
  auto r = paired_ttest(z, z);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);
  std::vector<double> shifted = {2.0, 2.0, 2.0};
  auto r2 = paired_ttest(shifted, z);
  CHECK(std::isinf(r2.t));
  CHECK(r2.p == 0.0);
  std::vector<double> one = {1.0};
  CHECK_THROWS_AS(paired_ttest(one, one), InsufficientDataError);
}

TEST_CASE("paired t-test sign symmetry", "[stats]") {
  Rng rng(99);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> a(6), b(6);
    for (int i = 0; i < 6; ++i) {
      a[i] = rng.normal(1.0, 2.0);
      b[i] = rng.normal(0.5, 2.0);
    }
    auto r = paired_ttest(a, b);
    auto rneg = paired_ttest(b, a);
    CHECK(rneg.t == Approx(-r.t).margin(1e-14));
    CHECK(rneg.p == Approx(r.p).margin(1e-14));
  }
}
