#pragma once

#include <cstdint>
#include <string>

#include "uavd/loss.hpp"
#include "uavd/model.hpp"

namespace uavd {

/// 1 layer, d_model 8, 2 heads, vocab 11, sequence length 6, f64.
ModelConfig grad_check_config();

struct GradCheckOptions {
  DistillConfig loss;  // defaults to the hybrid loss with KL and MSE active
  double eps = 1e-5;
  std::uint64_t seed = 7;
  /// Checks every parameter when 0, else an evenly strided subset of this size.
  std::size_t max_params = 0;
  /// Fault injection: use a wrong GELU derivative in the backward pass.
  bool corrupt_backward = false;
};

struct GradCheckResult {
  double max_rel_error = 0;
  std::string worst_param;
  std::size_t checked = 0;
};

/// Compares analytic gradients of the distillation loss (student parameters and
/// the hidden-state projection) against central finite differences. Relative
/// error per entry: |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(const GradCheckOptions& opts = {});

}  // namespace uavd
