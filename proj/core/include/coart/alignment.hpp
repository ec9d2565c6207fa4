#pragma once

#include <utility>
#include <vector>

#include "coart/tensor.hpp"

namespace coart {

/// Frame cost throughout is squared Euclidean distance over channels.

/// Soft-DTW value: R_{i,j} = cost(i,j) + softmin_g(R_{i-1,j}, R_{i,j-1},
/// R_{i-1,j-1}), log-sum-exp stabilized. a, b are frames x channels.
double sdtw(const Matrix& a, const Matrix& b, double gamma);

/// dLoss/da via the backward occupancy recursion; loss_out, when given,
/// receives the forward value so callers get both from one pass.
Matrix sdtw_grad(const Matrix& a, const Matrix& b, double gamma, double* loss_out = nullptr);

/// Monotone contiguous warping path from (0,0) to (ta-1, tb-1).
struct AlignmentPath {
  std::vector<std::pair<int, int>> steps;
};

/// Exact min-cost path; ties prefer the diagonal, then the i-advance.
std::pair<double, AlignmentPath> dtw_align(const Matrix& a, const Matrix& b);

struct FitMetrics {
  double pcc = 0.0;   // per-channel Pearson, averaged
  double rmse = 0.0;  // per-channel RMSE, averaged
  bool degenerate_channel = false;  // some channel had zero variance
};

/// Warps pred onto truth's time axis (mean of the pred frames aligned
/// to each truth frame), then per-channel PCC and RMSE.
FitMetrics fit_metrics(const Matrix& pred, const Matrix& truth);

}  // namespace coart
