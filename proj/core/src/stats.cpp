#include "coart/stats.hpp"

#include <algorithm>
#include <cmath>

#include "coart/common.hpp"

namespace coart {

double mean(const std::vector<double>& xs) {
  require(!xs.empty(), "mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stddev(const std::vector<double>& xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  require(!sorted.empty(), "quantile of empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile {} outside [0, 1]", q);
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& samples, int n_resamples,
                                       Rng rng) {
  require(!samples.empty(), "bootstrap_ci: empty sample");
  require(n_resamples >= 100, "bootstrap_ci: need >= 100 resamples, got {}", n_resamples);
  const auto n = static_cast<std::int64_t>(samples.size());
  std::vector<double> means(static_cast<std::size_t>(n_resamples));
  for (auto& m : means) {
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      s += samples[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  return {quantile_sorted(means, 0.025), quantile_sorted(means, 0.975)};
}

namespace {

// Exact null distribution of U for tie-free samples, via the recurrence
// N_{m,n}(u) = N_{m-1,n}(u - n) + N_{m,n-1}(u): the largest pooled value
// is either an 'a' (beats all n 'b's) or a 'b' (beats nothing).
double exact_p_greater(int m, int n, double u_obs) {
  const int umax = m * n;
  std::vector<std::vector<double>> prev(static_cast<std::size_t>(m) + 1);
  std::vector<std::vector<double>> cur(static_cast<std::size_t>(m) + 1);
  for (int mm = 0; mm <= m; ++mm)
    prev[static_cast<std::size_t>(mm)] = {1.0};  // n' = 0: only u = 0
  for (int nn = 1; nn <= n; ++nn) {
    cur[0] = {1.0};
    for (int mm = 1; mm <= m; ++mm) {
      auto& row = cur[static_cast<std::size_t>(mm)];
      row.assign(static_cast<std::size_t>(mm * nn) + 1, 0.0);
      const auto& left = cur[static_cast<std::size_t>(mm) - 1];    // (mm-1, nn)
      const auto& down = prev[static_cast<std::size_t>(mm)];       // (mm, nn-1)
      for (int u = 0; u < static_cast<int>(row.size()); ++u) {
        double v = 0.0;
        if (u >= nn) v += left[static_cast<std::size_t>(u - nn)];
        if (u < static_cast<int>(down.size())) v += down[static_cast<std::size_t>(u)];
        row[static_cast<std::size_t>(u)] = v;
      }
    }
    std::swap(prev, cur);
  }
  const auto& dist = prev[static_cast<std::size_t>(m)];
  double total = 0.0, tail = 0.0;
  for (int u = 0; u <= umax; ++u) {
    total += dist[static_cast<std::size_t>(u)];
    if (static_cast<double>(u) >= u_obs - 1e-9) tail += dist[static_cast<std::size_t>(u)];
  }
  return tail / total;
}

}  // namespace

MannWhitneyResult mann_whitney_greater(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  require(!a.empty() && !b.empty(), "mann-whitney: empty sample");
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  const int N = m + n;

  std::vector<std::pair<double, int>> pooled;  // (value, 0 = a / 1 = b)
  pooled.reserve(static_cast<std::size_t>(N));
  for (double x : a) pooled.emplace_back(x, 0);
  for (double x : b) pooled.emplace_back(x, 1);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  MannWhitneyResult res;
  if (pooled.front().first == pooled.back().first) {
    res.degenerate = true;
    res.p = 1.0;
    res.u = m * n / 2.0;
    return res;
  }

  // Midranks; accumulate the tie-group correction term as we go.
  double r1 = 0.0;
  double tie_term = 0.0;
  bool ties = false;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j + 1 < pooled.size() && pooled[j + 1].first == pooled[i].first) ++j;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1.0) {
      ties = true;
      tie_term += t * t * t - t;
    }
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k)
      if (pooled[k].second == 0) r1 += rank;
    i = j + 1;
  }
  const double u1 = r1 - m * (m + 1) / 2.0;
  res.u = u1;

  if (!ties && m <= 30 && n <= 30 && m * n <= 900) {
    res.exact = true;
    res.p = exact_p_greater(m, n, u1);
    return res;
  }

  const double mu = m * n / 2.0;
  double var = static_cast<double>(m) * n * (N + 1) / 12.0;
  var -= static_cast<double>(m) * n * tie_term / (12.0 * N * (N - 1));
  if (var <= 0.0) {
    res.degenerate = true;
    res.p = 1.0;
    return res;
  }
  const double z = (u1 - mu - 0.5) / std::sqrt(var);  // continuity-corrected
  res.p = 0.5 * std::erfc(z / std::sqrt(2.0));
  return res;
}

}  // namespace coart
