#include "pmmd/grad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmmd/error.hpp"

namespace pmmd {

LossAndGradient mmd_gradient(const CircuitSpec& spec, const EstimatorBatches& batches) {
  spec.validate();
  const ComplexMatrix u = compose_mesh(spec);
  ComplexMatrix u_adjoint;
  LossAndGradient out;
  out.loss = estimate_from_unitary(u, spec.input_state, batches, &u_adjoint).loss();
  out.grad = compose_mesh_backward(spec, u, u_adjoint);
  for (std::size_t i = 0; i < out.grad.size(); ++i)
    require(std::isfinite(out.grad[i]), ErrorCode::numeric_error,
            "non-finite gradient entry at parameter " + std::to_string(i));
  return out;
}

double finite_difference_check(const std::function<double(const std::vector<double>&)>& loss,
                               const std::vector<double>& params,
                               const std::vector<double>& gradient, double h) {
  require(h > 0.0 && std::isfinite(h), ErrorCode::invalid_argument,
          "finite-difference step must be positive");
  require(params.size() == gradient.size(), ErrorCode::shape_mismatch,
          "gradient length differs from the parameter count");
  std::vector<double> fd(params.size());
  std::vector<double> probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + h;
    const double up = loss(probe);
    probe[i] = params[i] - h;
    const double down = loss(probe);
    probe[i] = params[i];
    fd[i] = (up - down) / (2.0 * h);
  }
  double scale = 0.0;
  for (double v : fd) scale = std::max(scale, std::abs(v));
  const double floor = 1e-3 * scale;
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double denom = std::max({std::abs(gradient[i]), std::abs(fd[i]), floor});
    if (denom == 0.0) continue;
    worst = std::max(worst, std::abs(gradient[i] - fd[i]) / denom);
  }
  return worst;
}

double finite_difference_check(const CircuitSpec& spec, const EstimatorBatches& batches,
                               double h) {
  const LossAndGradient analytic = mmd_gradient(spec, batches);
  CircuitSpec probe = spec;
  auto loss = [&](const std::vector<double>& params) {
    probe.params = params;
    return mmd_hat_figure1(batches, probe);
  };
  return finite_difference_check(loss, spec.params, analytic.grad, h);
}

}  // namespace pmmd
