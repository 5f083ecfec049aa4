#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace oracle {

inline double binomial_log_pmf(std::size_t k, std::size_t n, double p) {
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  return std::lgamma(nd + 1) - std::lgamma(kd + 1) - std::lgamma(nd - kd + 1) + kd * std::log(p) +
         (nd - kd) * std::log1p(-p);
}

// Central interval [lo, hi] holding at least `mass` of Binomial(n, p), from the
// exact cumulative distribution.
inline std::pair<std::size_t, std::size_t> binomial_band(std::size_t n, double p, double mass) {
  const double tail = (1.0 - mass) / 2.0;
  double cdf = 0.0;
  std::size_t lo = 0;
  std::size_t hi = n;
  bool have_lo = false;
  for (std::size_t k = 0; k <= n; ++k) {
    cdf += std::exp(binomial_log_pmf(k, n, p));
    if (!have_lo && cdf > tail) {
      lo = k;
      have_lo = true;
    }
    if (cdf >= 1.0 - tail) {
      hi = k;
      break;
    }
  }
  return {lo, hi};
}

// Solves the normal equations X'X b = X'y by Gauss-Jordan elimination with
// partial pivoting; returns b and the diagonal of (X'X)^-1.
struct LeastSquares {
  std::vector<double> beta;
  std::vector<double> inverse_diagonal;
  double sigma2 = 0.0;
};

inline LeastSquares normal_equations(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  const std::size_t p = x.front().size();
  std::vector<std::vector<double>> a(p, std::vector<double>(2 * p + 1, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t r = 0; r < n; ++r) a[i][j] += x[r][i] * x[r][j];
    }
    a[i][p + i] = 1.0;
    for (std::size_t r = 0; r < n; ++r) a[i][2 * p] += x[r][i] * y[r];
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
    }
    std::swap(a[c], a[pivot]);
    const double d = a[c][c];
    for (auto& v : a[c]) v /= d;
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      for (std::size_t k = 0; k <= 2 * p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  LeastSquares out;
  for (std::size_t i = 0; i < p; ++i) {
    out.beta.push_back(a[i][2 * p]);
    out.inverse_diagonal.push_back(a[i][p + i]);
  }
  double rss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double fit = 0.0;
    for (std::size_t i = 0; i < p; ++i) fit += x[r][i] * out.beta[i];
    rss += (y[r] - fit) * (y[r] - fit);
  }
  out.sigma2 = rss / static_cast<double>(n - p);
  return out;
}

}  // namespace oracle
