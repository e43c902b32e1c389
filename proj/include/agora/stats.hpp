#pragma once

// Set overlap, bootstrap intervals and paired significance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "agora/error.hpp"

namespace agora {

// |A ∩ B| / |A ∪ B|. Two empty sets are identical and score 1.
template <typename T>
double jaccard_overlap(const std::set<T>& a, const std::set<T>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

// Mean Jaccard over paired compression calls.
template <typename T>
double mean_jaccard(std::span<const std::pair<std::set<T>, std::set<T>>> calls) {
  if (calls.empty()) throw Error("mean_jaccard: no calls");
  double sum = 0.0;
  for (const auto& [a, b] : calls) sum += jaccard_overlap(a, b);
  return sum / static_cast<double>(calls.size());
}

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

namespace detail {

// Linear interpolation between order statistics (numpy's default).
inline double quantile_sorted(const std::vector<double>& v, double q) {
  double pos = q * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = static_cast<std::size_t>(std::ceil(pos));
  double frac = pos - static_cast<double>(lo);
  return v[lo] + (v[hi] - v[lo]) * frac;
}

}  // namespace detail

// Percentile-method bootstrap CI on the mean.
inline ConfidenceInterval bootstrap_ci(std::span<const double> rewards, std::size_t resamples = 10000,
                                       double level = 0.95, std::uint64_t seed = 0) {
  if (rewards.empty()) throw Error("bootstrap_ci: empty sample");
  if (resamples == 0) throw Error("bootstrap_ci: resamples must be positive");
  if (!(level > 0.0 && level < 1.0)) throw Error("bootstrap_ci: level must lie in (0, 1)");
  // Resampling a constant sample is degenerate; skip it to avoid rounding.
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; })) {
    return {rewards[0], rewards[0]};
  }
  std::mt19937_64 rng(seed);
  const std::size_t n = rewards.size();
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += rewards[rng() % n];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  double alpha = (1.0 - level) / 2.0;
  return {detail::quantile_sorted(means, alpha), detail::quantile_sorted(means, 1.0 - alpha)};
}

struct WilcoxonResult {
  double statistic = 0.0;  // W+, sum of ranks of positive differences
  std::size_t n = 0;       // nonzero differences
  double p_value = 1.0;    // two-sided
  bool exact = false;
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Number of subsets of {1..n} for each rank sum 0..n(n+1)/2.
inline std::vector<double> signed_rank_counts(std::size_t n) {
  std::size_t max_sum = n * (n + 1) / 2;
  std::vector<double> c(max_sum + 1, 0.0);
  c[0] = 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t s = max_sum; s >= k; --s) c[s] += c[s - k];
  }
  return c;
}

}  // namespace detail

inline constexpr std::size_t kWilcoxonExactMaxN = 50;

// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences are
// dropped. Exact null distribution when there are no tied |differences| and
// at most kWilcoxonExactMaxN pairs; otherwise the normal approximation with
// tie and continuity corrections.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error("wilcoxon: length mismatch (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  }
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    if (diff != 0.0) d.push_back(diff);
  }
  WilcoxonResult res;
  res.n = d.size();
  if (d.empty()) return res;

  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });
  std::vector<double> rank(d.size());
  bool ties = false;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && std::abs(d[idx[j + 1]]) == std::abs(d[idx[i]])) ++j;
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    double t = static_cast<double>(j - i + 1);
    if (t > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
    i = j + 1;
  }
  double w_plus = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 0) w_plus += rank[i];
  }
  res.statistic = w_plus;
  const double n = static_cast<double>(d.size());

  if (!ties && d.size() <= kWilcoxonExactMaxN) {
    auto counts = detail::signed_rank_counts(d.size());
    double total = std::ldexp(1.0, static_cast<int>(d.size()));
    auto w = static_cast<std::size_t>(std::llround(w_plus));
    double lower = 0.0;
    double upper = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (s <= w) lower += counts[s];
      if (s >= w) upper += counts[s];
    }
    res.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    res.exact = true;
    return res;
  }

  double mean = n * (n + 1) / 4.0;
  double var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) return res;
  double dev = std::abs(w_plus - mean) - 0.5;
  if (dev < 0.0) dev = 0.0;
  res.p_value = std::min(1.0, 2.0 * (1.0 - detail::normal_cdf(dev / std::sqrt(var))));
  return res;
}

// Holm step-down adjustment; output order matches input order.
inline std::vector<double> holm_adjust(std::span<const double> p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
  std::vector<double> adj(m);
  double running = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    double v = std::min(1.0, static_cast<double>(m - k) * p[order[k]]);
    running = std::max(running, v);
    adj[order[k]] = running;
  }
  return adj;
}

struct PairedComparison {
  std::string name;
  std::string family;
  std::vector<double> a;
  std::vector<double> b;
};

struct PairedTestResult {
  std::string name;
  std::string family;
  WilcoxonResult test;
  double p_adjusted = 1.0;
};

// Wilcoxon per comparison, Holm-adjusted within each family.
inline std::vector<PairedTestResult> paired_tests(std::span<const PairedComparison> comparisons) {
  std::vector<PairedTestResult> out;
  std::map<std::string, std::vector<std::size_t>> families;
  for (const auto& c : comparisons) {
    families[c.family].push_back(out.size());
    out.push_back({c.name, c.family, wilcoxon_signed_rank(c.a, c.b), 1.0});
  }
  for (const auto& [name, members] : families) {
    std::vector<double> raw;
    for (auto i : members) raw.push_back(out[i].test.p_value);
    auto adj = holm_adjust(raw);
    for (std::size_t k = 0; k < members.size(); ++k) out[members[k]].p_adjusted = adj[k];
  }
  return out;
}

}  // namespace agora
