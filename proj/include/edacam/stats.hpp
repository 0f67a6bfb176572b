#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "edacam/errors.hpp"

namespace edacam {

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// ddof = 0 -> population variance, ddof = 1 -> sample variance
inline double variance(const std::vector<double>& x, int ddof = 0) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - ddof);
}

inline double stddev(const std::vector<double>& x, int ddof = 0) {
  return std::sqrt(variance(x, ddof));
}

// Median by copy; even length averages the two middle order statistics.
inline double median(std::vector<double> x) {
  if (x.empty()) throw InsufficientDataError("median: empty input");
  const std::size_t m = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m), x.end());
  double hi = x[m];
  if (x.size() % 2 == 1) return hi;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m) - 1,
                   x.begin() + static_cast<std::ptrdiff_t>(m));
  return 0.5 * (x[m - 1] + hi);
}

// Ranks starting at 1; tied values get the average of their rank range.
inline std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InputError("pearson: length mismatch");
  if (a.size() < 3) throw InsufficientDataError("pearson: need at least 3 samples");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0)
    throw UndefinedCorrelationError("pearson: zero variance input");
  return sab / std::sqrt(saa * sbb);
}

// Spearman rank correlation; ties resolved by average rank. A constant input
// has no rank variance and is an error by policy, never a silent zero.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InputError("spearman: length mismatch");
  if (a.size() < 3) throw InsufficientDataError("spearman: need at least 3 samples");
  return pearson(average_ranks(a), average_ranks(b));
}

// ---------------------------------------------------------------------------
// Regularized incomplete beta, continued-fraction form, for the Student-t
// tail probability.
namespace detail {

inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

inline double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double front = std::exp(lbeta + a * std::log(x) + b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// Two-sided p-value for a Student-t statistic with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  return detail::betai(0.5 * df, 0.5, df / (df + t * t));
}

struct PairedTTest {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

// Dependent t-test for paired samples a_i vs b_i.
// Degenerate case: all differences identical. Zero mean difference is
// reported as t = 0, p = 1; a nonzero constant difference as t = +/-inf,
// p = 0.
inline PairedTTest paired_ttest(const std::vector<double>& a,
                                const std::vector<double>& b) {
  if (a.size() != b.size()) throw InputError("paired_ttest: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw InsufficientDataError("paired_ttest: need at least 2 pairs");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double md = mean(d);
  const double sd = stddev(d, 1);
  PairedTTest r;
  r.df = static_cast<double>(n - 1);
  if (sd == 0.0) {
    if (md == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = md > 0.0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = md / (sd / std::sqrt(static_cast<double>(n)));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

}  // namespace edacam
