#include "coart/adam.hpp"

#include <cmath>

#include "coart/common.hpp"

namespace coart {

double global_norm(const std::vector<ParamView>& grads) {
  double sumsq = 0.0;
  for (const auto& g : grads)
    for (std::size_t i = 0; i < g.size; ++i) sumsq += g.data[i] * g.data[i];
  return std::sqrt(sumsq);
}

double Adam::step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads) {
  require(params.size() == grads.size(), "adam: {} param views vs {} grad views", params.size(),
          grads.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i].size == grads[i].size, "adam: size mismatch for '{}'", params[i].name);
    total += params[i].size;
  }
  if (m_.empty()) {
    m_.assign(total, 0.0);
    v_.assign(total, 0.0);
  }
  require(m_.size() == total, "adam: parameter count changed between steps");

  double sumsq = 0.0;
  for (const auto& g : grads)
    for (std::size_t i = 0; i < g.size; ++i) sumsq += g.data[i] * g.data[i];
  require(std::isfinite(sumsq), "adam: non-finite gradient; no update applied");
  const double norm = std::sqrt(sumsq);

  if (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) {
    const double scale = cfg_.clip_norm / norm;
    for (const auto& g : grads)
      for (std::size_t i = 0; i < g.size; ++i) g.data[i] *= scale;
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  std::size_t off = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].data;
    const double* g = grads[i].data;
    for (std::size_t k = 0; k < params[i].size; ++k) {
      double& m = m_[off + k];
      double& v = v_[off + k];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g[k];
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g[k] * g[k];
      p[k] -= cfg_.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps);
    }
    off += params[i].size;
  }
  return norm;
}

}  // namespace coart
