#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "coart/alignment.hpp"
#include "coart/common.hpp"
#include "coart/stats.hpp"
#include "testutil.hpp"

using namespace coart;
using testutil::central_diff;
using testutil::random_matrix;

namespace {

Matrix cost_matrix(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j) c(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return c;
}

void all_path_costs(const Matrix& cost, int i, int j, double acc, std::vector<double>& out) {
  acc += cost(i, j);
  const int ta = static_cast<int>(cost.rows());
  const int tb = static_cast<int>(cost.cols());
  if (i == ta - 1 && j == tb - 1) {
    out.push_back(acc);
    return;
  }
  if (i + 1 < ta) all_path_costs(cost, i + 1, j, acc, out);
  if (j + 1 < tb) all_path_costs(cost, i, j + 1, acc, out);
  if (i + 1 < ta && j + 1 < tb) all_path_costs(cost, i + 1, j + 1, acc, out);
}

/// Soft minimum over explicitly enumerated path costs.
double sdtw_by_enumeration(const Matrix& a, const Matrix& b, double gamma) {
  std::vector<double> costs;
  all_path_costs(cost_matrix(a, b), 0, 0, 0.0, costs);
  const double m = *std::min_element(costs.begin(), costs.end());
  double s = 0.0;
  for (double c : costs) s += std::exp(-(c - m) / gamma);
  return m - gamma * std::log(s);
}

double dtw_by_enumeration(const Matrix& a, const Matrix& b) {
  std::vector<double> costs;
  all_path_costs(cost_matrix(a, b), 0, 0, 0.0, costs);
  return *std::min_element(costs.begin(), costs.end());
}

Matrix integer_grid(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = static_cast<double>(rng.uniform_int(-3, 3));
  return m;
}

}  // namespace

TEST_CASE("sdtw equals the path-enumeration soft minimum") {
  Rng rng(101);
  for (double gamma : {0.1, 1.0, 10.0})
    for (int ta = 1; ta <= 4; ++ta)
      for (int tb = 1; tb <= 4; ++tb)
        for (int rep = 0; rep < 3; ++rep) {
          const Matrix a = integer_grid(ta, 2, rng);
          const Matrix b = integer_grid(tb, 2, rng);
          const double got = sdtw(a, b, gamma);
          const double want = sdtw_by_enumeration(a, b, gamma);
          CHECK(std::abs(got - want) < 1e-8);
        }
}

TEST_CASE("single-frame sdtw is the frame cost") {
  Matrix a(1, 2), b(1, 2);
  a << 1, 2;
  b << 4, 6;
  CHECK(sdtw(a, b, 1.0) == doctest::Approx(25.0));
}

TEST_CASE("sdtw is symmetric and bounded by the hard minimum") {
  Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix a = random_matrix(5, 3, rng);
    const Matrix b = random_matrix(4, 3, rng);
    const double gamma = 0.5;
    CHECK(sdtw(a, b, gamma) == doctest::Approx(sdtw(b, a, gamma)).epsilon(1e-12));
    const double hard = dtw_align(a, b).first;
    CHECK(sdtw(a, b, gamma) <= hard + 1e-12);
  }
}

TEST_CASE("sdtw approaches hard dtw as gamma shrinks") {
  Rng rng(23);
  const Matrix a = random_matrix(5, 2, rng);
  const Matrix b = random_matrix(5, 2, rng);
  const double hard = dtw_align(a, b).first;
  const double soft = sdtw(a, b, 1e-3);
  CHECK(std::abs(soft - hard) < 0.01);
  CHECK(soft <= hard);
}

TEST_CASE("sdtw gradient matches finite differences") {
  Rng rng(301);
  for (double gamma : {0.3, 1.0, 3.0})
    for (int rep = 0; rep < 4; ++rep) {
      Matrix a = random_matrix(static_cast<int>(rng.uniform_int(2, 6)), 2, rng);
      const Matrix b = random_matrix(static_cast<int>(rng.uniform_int(2, 6)), 2, rng);
      double loss_out = 0.0;
      const Matrix grad = sdtw_grad(a, b, gamma, &loss_out);
      CHECK(loss_out == doctest::Approx(sdtw(a, b, gamma)).epsilon(1e-12));
      auto loss = [&] { return sdtw(a, b, gamma); };
      for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) {
          const double fd = central_diff(loss, &a(i, j), 1e-6);
          const double rel =
              std::abs(fd - grad(i, j)) / std::max({std::abs(fd), std::abs(grad(i, j)), 1e-2});
          CHECK(rel < 1e-6);
        }
    }
}

TEST_CASE("sdtw scales with degree-2 homogeneity") {
  Rng rng(5);
  Matrix a = random_matrix(4, 2, rng);
  Matrix b = random_matrix(5, 2, rng);
  const double c = 3.0, gamma = 1.0;
  const double base = sdtw(a, b, gamma);
  // Squared-Euclidean costs scale by c^2, so gamma must follow.
  CHECK(sdtw(c * a, c * b, c * c * gamma) == doctest::Approx(c * c * base).epsilon(1e-10));
  const Matrix g1 = sdtw_grad(a, b, gamma);
  Matrix ca = c * a, cb = c * b;
  const Matrix g2 = sdtw_grad(ca, cb, c * c * gamma);
  CHECK((g2 - c * g1).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("hard dtw equals brute-force path minimum") {
  Rng rng(909);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix a = random_matrix(static_cast<int>(rng.uniform_int(1, 6)), 2, rng);
    const Matrix b = random_matrix(static_cast<int>(rng.uniform_int(1, 6)), 2, rng);
    const auto [value, path] = dtw_align(a, b);
    CHECK(value == doctest::Approx(dtw_by_enumeration(a, b)).epsilon(1e-12));
    // The reported path realizes the reported value.
    double acc = 0.0;
    for (auto [i, j] : path.steps) acc += (a.row(i) - b.row(j)).squaredNorm();
    CHECK(acc == doctest::Approx(value).epsilon(1e-12));
    CHECK(path.steps.front() == std::pair<int, int>{0, 0});
    CHECK(path.steps.back() ==
          std::pair<int, int>{static_cast<int>(a.rows()) - 1, static_cast<int>(b.rows()) - 1});
  }
}

TEST_CASE("dtw ties resolve to the diagonal, then the i-advance") {
  const Matrix sq = Matrix::Zero(3, 1);
  auto path = dtw_align(sq, sq).second;
  REQUIRE(path.steps.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(path.steps[static_cast<std::size_t>(k)] == std::pair{k, k});

  const Matrix tall = Matrix::Zero(3, 1);
  const Matrix wide = Matrix::Zero(2, 1);
  path = dtw_align(tall, wide).second;
  const std::vector<std::pair<int, int>> want = {{0, 0}, {1, 0}, {2, 1}};
  CHECK(path.steps == want);
}

TEST_CASE("identical inputs align on the diagonal at zero cost") {
  Rng rng(3);
  const Matrix a = random_matrix(6, 2, rng);
  const auto [value, path] = dtw_align(a, a);
  CHECK(value == 0.0);
  REQUIRE(path.steps.size() == 6);
  for (int k = 0; k < 6; ++k) CHECK(path.steps[static_cast<std::size_t>(k)] == std::pair{k, k});
}

TEST_CASE("fit metrics are exact on a perfect prediction") {
  Rng rng(41);
  const Matrix truth = random_matrix(10, 3, rng);
  const FitMetrics m = fit_metrics(truth, truth);
  CHECK(m.pcc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.rmse == doctest::Approx(0.0));
  CHECK_FALSE(m.degenerate_channel);
}

TEST_CASE("fit metrics see through frame duplication") {
  Rng rng(43);
  const Matrix truth = random_matrix(8, 2, rng);
  Matrix pred(16, 2);
  for (int j = 0; j < 8; ++j) {
    pred.row(2 * j) = truth.row(j);
    pred.row(2 * j + 1) = truth.row(j);
  }
  const FitMetrics m = fit_metrics(pred, truth);
  CHECK(m.pcc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.rmse == doctest::Approx(0.0));
}

TEST_CASE("fit metrics treat affine predictions as perfectly correlated") {
  Rng rng(47);
  const Matrix truth = random_matrix(12, 2, rng);
  const Matrix pred = 2.0 * truth.array() + 1.0;
  const FitMetrics m = fit_metrics(pred, truth);
  // Warping reorders by cost, so correlation is near, not exactly, 1.
  CHECK(m.pcc > 0.95);
  CHECK(m.rmse > 0.0);
}

TEST_CASE("a flat channel flags degeneracy and scores zero correlation") {
  Rng rng(53);
  Matrix truth = random_matrix(10, 2, rng);
  truth.col(1).setConstant(2.0);
  Matrix pred = truth;
  const FitMetrics m = fit_metrics(pred, truth);
  CHECK(m.degenerate_channel);
  CHECK(m.pcc == doctest::Approx(0.5).epsilon(1e-9));  // (1 + 0) / 2
}

TEST_CASE("mean, stddev and quantiles on hand data") {
  const std::vector<double> xs = {1, 2, 3, 4};
  CHECK(mean(xs) == doctest::Approx(2.5));
  CHECK(stddev(xs) == doctest::Approx(std::sqrt(1.25)));
  CHECK(quantile_sorted(xs, 0.0) == doctest::Approx(1.0));
  CHECK(quantile_sorted(xs, 0.25) == doctest::Approx(1.75));
  CHECK(quantile_sorted(xs, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_sorted(xs, 1.0) == doctest::Approx(4.0));
}

TEST_CASE("bootstrap interval on constant data collapses to the constant") {
  const std::vector<double> xs(20, 3.25);
  const auto [lo, hi] = bootstrap_ci(xs, 200, Rng(1));
  CHECK(lo == doctest::Approx(3.25));
  CHECK(hi == doctest::Approx(3.25));
}

TEST_CASE("bootstrap interval is seeded and brackets the sample mean") {
  Rng rng(77);
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(rng.normal());
  const auto [lo1, hi1] = bootstrap_ci(xs, 1000, Rng(9));
  const auto [lo2, hi2] = bootstrap_ci(xs, 1000, Rng(9));
  CHECK(lo1 == lo2);
  CHECK(hi1 == hi2);
  const double m = mean(xs);
  CHECK(lo1 < m);
  CHECK(hi1 > m);
  // Width should be near 2 * 1.96 * sd / sqrt(n).
  const double expect = 2 * 1.96 * stddev(xs) / std::sqrt(200.0);
  CHECK(hi1 - lo1 > 0.5 * expect);
  CHECK(hi1 - lo1 < 2.0 * expect);
}

TEST_CASE("mann-whitney exact p-values match the reference") {
  // m=4 vs n=5, tie-free: U=14, p = 26/126.
  const std::vector<double> a = {0.9, 1.7, 2.5, 3.1};
  const std::vector<double> b = {0.2, 0.8, 1.6, 2.4, 3.0};
  const MannWhitneyResult r = mann_whitney_greater(a, b);
  CHECK(r.exact);
  CHECK(r.u == doctest::Approx(14.0));
  CHECK(r.p == doctest::Approx(0.20634920634920634).epsilon(1e-12));

  const MannWhitneyResult above = mann_whitney_greater({3, 4, 5}, {1, 2});
  CHECK(above.u == doctest::Approx(6.0));
  CHECK(above.p == doctest::Approx(0.1).epsilon(1e-12));

  const MannWhitneyResult below = mann_whitney_greater({1, 2}, {3, 4, 5});
  CHECK(below.u == doctest::Approx(0.0));
  CHECK(below.p == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mann-whitney ties fall back to the corrected normal approximation") {
  const std::vector<double> a = {1, 1, 2, 3};
  const std::vector<double> b = {1, 2, 2, 3};
  const MannWhitneyResult r = mann_whitney_greater(a, b);
  CHECK_FALSE(r.exact);
  CHECK(r.u == doctest::Approx(6.5));
  CHECK(r.p == doctest::Approx(0.72940355062900042).epsilon(1e-9));
}

TEST_CASE("mann-whitney large samples use the normal approximation") {
  const std::vector<double> a = {
      -0.501931, -1.024359, 0.051638,  0.720445,  1.436047,  0.409706,  -0.252647, -0.48478,
      1.048746,  1.934783,  0.572769,  -0.933329, -0.658265, 1.900019,  0.502882,  -1.432135,
      0.216304,  -0.863226, -0.329288, -0.188006, -0.413313, 0.853378,  0.236914,  -0.289431,
      0.709638,  1.129855,  -1.343023, 0.04327,   -0.680747, 0.126845,  -0.989419};
  const std::vector<double> b = {
      0.02069,   -0.037886, -0.304338, -1.047927, -0.39619, -1.091329, -1.355209,
      0.224786,  -1.10935,  1.170296,  0.716588,  -1.997817, 0.272129, -1.101717,
      0.033057,  0.043632,  -1.98843,  -0.233423, -0.25579,  0.962001};
  const MannWhitneyResult r = mann_whitney_greater(a, b);
  CHECK_FALSE(r.exact);
  CHECK(r.u == doctest::Approx(383.0));
  CHECK(r.p == doctest::Approx(0.080948323601115257).epsilon(1e-9));
}

TEST_CASE("mann-whitney flags degenerate inputs") {
  const std::vector<double> same(5, 1.0);
  const MannWhitneyResult r = mann_whitney_greater(same, same);
  CHECK(r.degenerate);
  CHECK(r.p == doctest::Approx(1.0));
  CHECK_THROWS_AS(mann_whitney_greater({}, {1.0}), Error);
}

TEST_CASE("mann-whitney p decreases as separation grows") {
  std::vector<double> b = {0.0, 0.4, 0.8, 1.2, 1.6, 2.0};
  double prev = 1.1;
  for (double shift : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    std::vector<double> a;
    for (double x : b) a.push_back(x + shift);
    const double p = mann_whitney_greater(a, b).p;
    CHECK(p <= prev + 1e-12);
    prev = p;
  }
}

TEST_CASE("null rejections stay near the nominal rate") {
  Rng rng(1234);
  int rejections = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a, b;
    for (int i = 0; i < 12; ++i) a.push_back(rng.normal());
    for (int i = 0; i < 12; ++i) b.push_back(rng.normal());
    if (mann_whitney_greater(a, b).p < 0.05) ++rejections;
  }
  CHECK(rejections >= 1);
  CHECK(rejections <= 12);
}
