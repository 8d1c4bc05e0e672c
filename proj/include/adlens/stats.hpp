#pragma once

// Statistical numerics: regularized incomplete gamma (series for small x,
// continued fraction for large x), chi-squared upper tail, least-squares
// lines, and normal-approximation confidence intervals.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace adlens {

namespace detail {

inline constexpr int kGammaMaxIter = 1000;
inline constexpr double kGammaEps = 1e-15;
inline constexpr double kTiny = 1e-300;

// Lower regularized gamma by power series; converges fast for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < kGammaMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kGammaEps)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("gamma_p series failed to converge");
}

// Upper regularized gamma by modified Lentz continued fraction; for x >= a+1.
inline double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kGammaMaxIter; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kGammaEps)
      return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  }
  throw std::runtime_error("gamma_q continued fraction failed to converge");
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (a <= 0) throw std::invalid_argument("gamma_p: a must be positive");
  if (x < 0) throw std::invalid_argument("gamma_p: x must be non-negative");
  if (x == 0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
  if (a <= 0) throw std::invalid_argument("gamma_q: a must be positive");
  if (x < 0) throw std::invalid_argument("gamma_q: x must be non-negative");
  if (x == 0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

// Upper-tail probability of the chi-squared distribution.
inline double chi2_pvalue(double statistic, int dof) {
  if (dof < 1) throw std::invalid_argument("chi2_pvalue: dof must be >= 1");
  if (statistic < 0) throw std::invalid_argument("chi2_pvalue: negative statistic");
  return gamma_q(dof / 2.0, statistic / 2.0);
}

// Pearson statistic against given expected counts. Zero-expectation cells with
// zero observation contribute nothing; a zero-expectation cell with a nonzero
// observation makes the statistic infinite.
struct Chi2Result {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
  bool low_expected = false;  // any cell with expected < 5
};

inline Chi2Result chi2_test(std::span<const double> observed,
                            std::span<const double> expected) {
  if (observed.size() != expected.size() || observed.size() < 2)
    throw std::invalid_argument("chi2_test: need matching cells, at least 2");
  Chi2Result r;
  r.dof = static_cast<int>(observed.size()) - 1;
  for (size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] < 5.0) r.low_expected = true;
    if (expected[i] <= 0.0) {
      if (observed[i] > 0.0) r.statistic = std::numeric_limits<double>::infinity();
      continue;
    }
    double d = observed[i] - expected[i];
    r.statistic += d * d / expected[i];
  }
  r.p_value = std::isinf(r.statistic) ? 0.0 : chi2_pvalue(r.statistic, r.dof);
  return r;
}

struct LinearFit {
  double slope = 0;
  double intercept = 0;
};

inline LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("linear_fit: need >= 2 matching points");
  double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0) throw std::invalid_argument("linear_fit: degenerate x values");
  LinearFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

struct MeanCi {
  double mean = 0;
  double lo = 0;
  double hi = 0;
  size_t n = 0;
};

// Normal-approximation interval with sample standard deviation.
inline MeanCi mean_ci(std::span<const double> values, double z = 1.959963984540054) {
  if (values.empty()) throw std::invalid_argument("mean_ci: empty sample");
  MeanCi m;
  m.n = values.size();
  double sum = 0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(m.n);
  if (m.n == 1) {
    m.lo = m.hi = m.mean;
    return m;
  }
  double ss = 0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  double sd = std::sqrt(ss / static_cast<double>(m.n - 1));
  double half = z * sd / std::sqrt(static_cast<double>(m.n));
  m.lo = m.mean - half;
  m.hi = m.mean + half;
  return m;
}

}  // namespace adlens
