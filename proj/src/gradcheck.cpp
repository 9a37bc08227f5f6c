#include "heatopt/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace heatopt {

GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<void()>& compute_grads,
                           const std::vector<ParamRef>& params, double eps, long samples,
                           Rng& rng) {
  if (!(eps > 0.0)) throw Error("grad_check: eps must be positive");
  compute_grads();
  std::vector<Eigen::ArrayXd> analytic;
  analytic.reserve(params.size());
  for (const ParamRef& p : params) {
    if (!p.grad || p.grad->size() != p.value->size())
      throw DimensionError("grad_check: no gradient for " + p.name);
    analytic.push_back(*p.grad);
  }

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Eigen::ArrayXd& value = *params[pi].value;
    std::vector<TIndex> indices;
    if (value.size() <= samples) {
      indices.resize(static_cast<std::size_t>(value.size()));
      for (TIndex i = 0; i < value.size(); ++i) indices[static_cast<std::size_t>(i)] = i;
    } else {
      indices.reserve(static_cast<std::size_t>(samples));
      for (long s = 0; s < samples; ++s)
        indices.push_back(static_cast<TIndex>(rng.uniform_int(0, value.size() - 1)));
    }
    for (const TIndex i : indices) {
      const double saved = value[i];
      value[i] = saved + eps;
      const double plus = loss();
      value[i] = saved - eps;
      const double minus = loss();
      value[i] = saved;
      const double fd = (plus - minus) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.checked;
    }
  }
  return report;
}

}  // namespace heatopt
