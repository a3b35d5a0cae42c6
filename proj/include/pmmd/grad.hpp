#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "pmmd/circuits.hpp"
#include "pmmd/mmd.hpp"

namespace pmmd {

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> grad;  // one entry per circuit parameter
};

// Sampled loss and its exact derivative with respect to spec.params. The loss
// is bit-identical to mmd_hat_figure1 on the same batches.
LossAndGradient mmd_gradient(const CircuitSpec& spec, const EstimatorBatches& batches);

// Worst per-parameter relative deviation between an analytic gradient and
// central differences of `loss` at `params`:
//   |g_i - fd_i| / max(|g_i|, |fd_i|, 1e-3 max_j |fd_j|)
double finite_difference_check(const std::function<double(const std::vector<double>&)>& loss,
                               const std::vector<double>& params,
                               const std::vector<double>& gradient, double h);

double finite_difference_check(const CircuitSpec& spec, const EstimatorBatches& batches,
                               double h);

}  // namespace pmmd
