#pragma once

#include <vector>

#include "coart/nn.hpp"

namespace coart {

struct AdamConfig {
  double lr = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 10.0;  // global L2; <= 0 disables clipping
};

double global_norm(const std::vector<ParamView>& grads);

/// Gradient-norm scaling followed by one bias-corrected Adam step.
/// State is positional over the fixed view enumeration, so the same
/// views must be passed every step.
class Adam {
 public:
  explicit Adam(const AdamConfig& cfg) : cfg_(cfg) {}

  /// Mutates params in place; scales grads in place when the global
  /// norm exceeds clip_norm. Non-finite gradients abort before any
  /// update. Returns the pre-clip global norm.
  double step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads);

  long steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

}  // namespace coart
