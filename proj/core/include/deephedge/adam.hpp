#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace deephedge::nn {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_size(std::size_t n, double lr = 1e-3);
};

// One bias-corrected Adam update of theta in place. Throws NumericalError on a
// non-finite gradient, leaving theta and state untouched.
void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state);

}  // namespace deephedge::nn
