#include "coart/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coart/common.hpp"

namespace coart {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix cost_matrix(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "frame cost: {} vs {} channels", a.cols(), b.cols());
  require(a.rows() >= 1 && b.rows() >= 1, "frame cost: empty trajectory");
  Matrix d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return d;
}

double softmin3(double x, double y, double z, double gamma) {
  const double m = std::min({x, y, z});
  if (m == kInf) return kInf;
  const double s = std::exp(-(x - m) / gamma) + std::exp(-(y - m) / gamma) +
                   std::exp(-(z - m) / gamma);
  return m - gamma * std::log(s);
}

// Forward DP. R is (ta+1) x (tb+1), 1-based over frames; R(0,0) = 0.
Matrix sdtw_forward(const Matrix& d, double gamma) {
  const auto ta = d.rows();
  const auto tb = d.cols();
  Matrix r = Matrix::Constant(ta + 1, tb + 1, kInf);
  r(0, 0) = 0.0;
  for (Eigen::Index i = 1; i <= ta; ++i)
    for (Eigen::Index j = 1; j <= tb; ++j)
      r(i, j) = d(i - 1, j - 1) + softmin3(r(i - 1, j), r(i, j - 1), r(i - 1, j - 1), gamma);
  return r;
}

}  // namespace

double sdtw(const Matrix& a, const Matrix& b, double gamma) {
  require(gamma > 0.0, "sdtw: gamma must be positive, got {}", gamma);
  const Matrix d = cost_matrix(a, b);
  const Matrix r = sdtw_forward(d, gamma);
  return r(a.rows(), b.rows());
}

Matrix sdtw_grad(const Matrix& a, const Matrix& b, double gamma, double* loss_out) {
  require(gamma > 0.0, "sdtw: gamma must be positive, got {}", gamma);
  const auto ta = a.rows();
  const auto tb = b.rows();
  const Matrix d = cost_matrix(a, b);
  const Matrix r0 = sdtw_forward(d, gamma);
  if (loss_out) *loss_out = r0(ta, tb);

  // Occupancy recursion over a padded grid; E(i,j) is the expected
  // number of visits to cell (i,j) under the Gibbs path distribution.
  Matrix r = Matrix::Constant(ta + 2, tb + 2, kInf);
  r.topLeftCorner(ta + 1, tb + 1) = r0;
  Matrix e = Matrix::Zero(ta + 2, tb + 2);
  e(ta + 1, tb + 1) = 1.0;
  for (Eigen::Index i = 1; i <= ta; ++i) r(i, tb + 1) = -kInf;
  for (Eigen::Index j = 1; j <= tb; ++j) r(ta + 1, j) = -kInf;
  r(ta + 1, tb + 1) = r0(ta, tb);
  auto dpad = [&](Eigen::Index i, Eigen::Index j) {
    return (i <= ta && j <= tb) ? d(i - 1, j - 1) : 0.0;
  };
  for (Eigen::Index j = tb; j >= 1; --j) {
    for (Eigen::Index i = ta; i >= 1; --i) {
      const double wa = std::exp((r(i + 1, j) - r(i, j) - dpad(i + 1, j)) / gamma);
      const double wb = std::exp((r(i, j + 1) - r(i, j) - dpad(i, j + 1)) / gamma);
      const double wc = std::exp((r(i + 1, j + 1) - r(i, j) - dpad(i + 1, j + 1)) / gamma);
      e(i, j) = wa * e(i + 1, j) + wb * e(i, j + 1) + wc * e(i + 1, j + 1);
    }
  }

  Matrix grad = Matrix::Zero(ta, a.cols());
  for (Eigen::Index i = 0; i < ta; ++i)
    for (Eigen::Index j = 0; j < tb; ++j)
      if (e(i + 1, j + 1) != 0.0)
        grad.row(i) += e(i + 1, j + 1) * 2.0 * (a.row(i) - b.row(j));
  return grad;
}

std::pair<double, AlignmentPath> dtw_align(const Matrix& a, const Matrix& b) {
  const auto ta = a.rows();
  const auto tb = b.rows();
  const Matrix d = cost_matrix(a, b);
  Matrix c = Matrix::Constant(ta + 1, tb + 1, kInf);
  c(0, 0) = 0.0;
  for (Eigen::Index i = 1; i <= ta; ++i)
    for (Eigen::Index j = 1; j <= tb; ++j)
      c(i, j) = d(i - 1, j - 1) + std::min({c(i - 1, j - 1), c(i - 1, j), c(i, j - 1)});

  AlignmentPath path;
  Eigen::Index i = ta, j = tb;
  while (i > 1 || j > 1) {
    path.steps.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1));
    const double best = std::min({c(i - 1, j - 1), c(i - 1, j), c(i, j - 1)});
    if (i > 1 && j > 1 && c(i - 1, j - 1) == best) {
      --i;
      --j;
    } else if (i > 1 && c(i - 1, j) == best) {
      --i;
    } else {
      --j;
    }
  }
  path.steps.emplace_back(0, 0);
  std::reverse(path.steps.begin(), path.steps.end());
  return {c(ta, tb), path};
}

FitMetrics fit_metrics(const Matrix& pred, const Matrix& truth) {
  require(pred.cols() == truth.cols(), "fit_metrics: {} vs {} channels", pred.cols(),
          truth.cols());
  const auto [cost, path] = dtw_align(pred, truth);
  (void)cost;
  const auto tt = truth.rows();

  Matrix warped = Matrix::Zero(tt, truth.cols());
  Vector counts = Vector::Zero(tt);
  for (const auto& [i, j] : path.steps) {
    warped.row(j) += pred.row(i);
    counts[j] += 1.0;
  }
  for (Eigen::Index j = 0; j < tt; ++j) warped.row(j) /= counts[j];

  FitMetrics out;
  const double n = static_cast<double>(tt);
  for (Eigen::Index ch = 0; ch < truth.cols(); ++ch) {
    const Vector w = warped.col(ch);
    const Vector t = truth.col(ch);
    const double mw = w.mean();
    const double mt = t.mean();
    const Vector dw = w.array() - mw;
    const Vector dt = t.array() - mt;
    const double sw = std::sqrt(dw.squaredNorm() / n);
    const double st = std::sqrt(dt.squaredNorm() / n);
    if (sw < 1e-12 || st < 1e-12) {
      out.degenerate_channel = true;  // PCC undefined; counted as 0
    } else {
      out.pcc += dw.dot(dt) / (n * sw * st);
    }
    out.rmse += std::sqrt((w - t).squaredNorm() / n);
  }
  out.pcc /= static_cast<double>(truth.cols());
  out.rmse /= static_cast<double>(truth.cols());
  return out;
}

}  // namespace coart
