#include "coart/timing.hpp"

#include <algorithm>
#include <cmath>

#include "coart/common.hpp"

namespace coart {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

TimingParams timing_from_raw(const Matrix& raw) {
  require(raw.cols() == 2 && raw.rows() >= 1, "timing: raw must be n x 2, got {} x {}", raw.rows(),
          raw.cols());
  const auto n = raw.rows();
  TimingParams tp;
  tp.durations.resize(n);
  tp.sigma.resize(n);
  tp.mu.resize(n);
  double cum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    tp.durations[i] = softplus(raw(i, 0)) + kDurationMin;
    tp.sigma[i] = softplus(raw(i, 1)) + kSigmaMin;
    cum += tp.durations[i];
    tp.mu[i] = cum - tp.durations[i] / 2.0;
  }
  tp.sum_durations = cum;
  tp.total_frames = std::max(static_cast<int>(std::lround(cum)), static_cast<int>(n));
  return tp;
}

void timing_from_raw_backward(const Matrix& raw, const TimingParams& tp, const Vector& dmu,
                              const Vector& dsigma, double dsum, Matrix& draw) {
  const auto n = raw.rows();
  // mu_i depends on d_j with weight 1 for j < i and 1/2 for j = i.
  double suffix = 0.0;
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    const double dd = suffix + 0.5 * dmu[j] + dsum;
    draw(j, 0) += dd * sigmoid(raw(j, 0));
    draw(j, 1) += dsigma[j] * sigmoid(raw(j, 1));
    suffix += dmu[j];
  }
  (void)tp;
}

InfluenceMatrix gaussian_expand(const TimingParams& tp, int t) {
  require(t >= 1, "gaussian_expand: t must be >= 1, got {}", t);
  const int n = tp.n();
  for (int i = 0; i < n; ++i)
    require(tp.sigma[i] >= kSigmaMin - 1e-9, "gaussian_expand: sigma[{}] = {} below floor {}", i,
            tp.sigma[i], kSigmaMin);
  InfluenceMatrix infl;
  infl.values.resize(t, n);
  for (int k = 0; k < t; ++k)
    for (int i = 0; i < n; ++i) {
      const double d = k - tp.mu[i];
      infl.values(k, i) = std::exp(-d * d / (2.0 * tp.sigma[i] * tp.sigma[i]));
    }
  return infl;
}

void gaussian_expand_backward(const TimingParams& tp, const InfluenceMatrix& infl,
                              const Matrix& dM, Vector& dmu, Vector& dsigma) {
  const int t = infl.frames();
  const int n = infl.phones();
  for (int i = 0; i < n; ++i) {
    const double s2 = tp.sigma[i] * tp.sigma[i];
    double gmu = 0.0, gsig = 0.0;
    for (int k = 0; k < t; ++k) {
      const double d = k - tp.mu[i];
      const double common = dM(k, i) * infl.values(k, i);
      gmu += common * d / s2;
      gsig += common * d * d / (s2 * tp.sigma[i]);
    }
    dmu[i] += gmu;
    dsigma[i] += gsig;
  }
}

}  // namespace coart
