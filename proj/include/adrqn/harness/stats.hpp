#pragma once

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace adrqn::harness {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return std::nan("");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1); 0 for a single value.
inline double stddev(std::span<const double> xs) {
  if (xs.size() < 2) return xs.empty() ? std::nan("") : 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// 1-based ranks, ties share their average rank.
inline std::vector<double> ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[idx[k]] = r;
    i = j + 1;
  }
  return out;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson: need two equal series of length >= 2");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

/// Spearman rank correlation (Pearson on average ranks). NaN when a series is constant.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = ranks(x), ry = ranks(y);
  return pearson(rx, ry);
}

struct SignTest {
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  double p_value = 1.0;  // P(at least `wins` of wins + losses under p = 1/2)
};

/// One-sided sign test of a > b over paired values; ties are dropped.
inline SignTest sign_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("sign_test: unpaired samples");
  SignTest out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) ++out.wins;
    else if (a[i] < b[i]) ++out.losses;
    else ++out.ties;
  }
  const std::size_t n = out.wins + out.losses;
  if (n == 0 || out.wins == 0) return out;
  boost::math::binomial dist(static_cast<double>(n), 0.5);
  out.p_value = boost::math::cdf(boost::math::complement(dist, static_cast<double>(out.wins) - 1.0));
  return out;
}

}  // namespace adrqn::harness
