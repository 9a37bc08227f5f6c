#pragma once

#include <functional>
#include <vector>

#include "heatopt/tensor.hpp"

namespace heatopt {

struct GradCheckReport {
  double max_rel_error = 0.0;
  long checked = 0;
};

// Compares analytic gradients with central finite differences.
//
// `loss` must be a deterministic pure function of the current parameter
// values (no dropout — run fragments with training disabled or probability
// zero). `compute_grads` must zero and then fill each parameter's gradient
// buffer for the current values. Up to `samples` entries per parameter array
// are probed; relative error uses max(|analytic|, |fd|, 1e-8) in the
// denominator.
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<void()>& compute_grads,
                           const std::vector<ParamRef>& params, double eps, long samples,
                           Rng& rng);

}  // namespace heatopt
