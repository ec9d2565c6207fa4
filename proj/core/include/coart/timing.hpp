#pragma once

#include "coart/tensor.hpp"

namespace coart {

// Floors keeping durations and kernels away from degenerate collapse:
// 3 frames = 30 ms at 100 Hz; sigma 0.5 still overlaps its neighbours.
inline constexpr double kDurationMin = 3.0;
inline constexpr double kSigmaMin = 0.5;

/// Per-phoneme timing in frame units. mu is strictly increasing by
/// construction: mu_i = cumsum(durations)_i - durations_i / 2.
struct TimingParams {
  Vector mu;
  Vector sigma;
  Vector durations;
  double sum_durations = 0.0;  // continuous total, before rounding
  int total_frames = 0;        // round(sum), clamped to >= n

  int n() const { return static_cast<int>(mu.size()); }
};

/// t x n Gaussian influence, values in (0, 1], column peak at mu_i.
struct InfluenceMatrix {
  Matrix values;

  int frames() const { return static_cast<int>(values.rows()); }
  int phones() const { return static_cast<int>(values.cols()); }
};

double softplus(double x);

/// raw is the n x 2 encoder output: column 0 -> duration, 1 -> sigma.
TimingParams timing_from_raw(const Matrix& raw);

/// Chain rule through timing_from_raw. dsum is dLoss/d(sum_durations)
/// (the length penalty path); accumulates into draw.
void timing_from_raw_backward(const Matrix& raw, const TimingParams& tp, const Vector& dmu,
                              const Vector& dsigma, double dsum, Matrix& draw);

/// M'_{k,i} = exp(-(k - mu_i)^2 / (2 sigma_i^2)) for k in [0, t).
InfluenceMatrix gaussian_expand(const TimingParams& tp, int t);

/// Analytic dLoss/dmu, dLoss/dsigma from dLoss/dM'; accumulates.
void gaussian_expand_backward(const TimingParams& tp, const InfluenceMatrix& infl,
                              const Matrix& dM, Vector& dmu, Vector& dsigma);

}  // namespace coart
