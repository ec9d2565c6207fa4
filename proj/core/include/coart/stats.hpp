#pragma once

#include <utility>
#include <vector>

#include "coart/rng.hpp"

namespace coart {

double mean(const std::vector<double>& xs);
double stddev(const std::vector<double>& xs);  // population

/// Linear-interpolation quantile (the numpy default) on sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Percentile bootstrap of the mean: (2.5th, 97.5th) percentiles of
/// n_resamples resampled means. Seeded and deterministic.
std::pair<double, double> bootstrap_ci(const std::vector<double>& samples, int n_resamples,
                                       Rng rng);

struct MannWhitneyResult {
  double p = 1.0;
  double u = 0.0;       // U statistic of the first sample
  bool degenerate = false;
  bool exact = false;
};

/// One-sided Mann-Whitney U, alternative "a stochastically greater than
/// b". Exact null distribution for small tie-free samples, otherwise
/// normal approximation with tie and continuity corrections.
MannWhitneyResult mann_whitney_greater(const std::vector<double>& a,
                                       const std::vector<double>& b);

}  // namespace coart
