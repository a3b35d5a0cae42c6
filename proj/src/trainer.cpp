#include "pmmd/trainer.hpp"

#include <chrono>
#include <cmath>

#include "pmmd/boson.hpp"
#include "pmmd/error.hpp"
#include "pmmd/grad.hpp"

namespace pmmd {

void adam_step(std::vector<double>& params, const std::vector<double>& grad, AdamState& state,
               const AdamConfig& config) {
  require(params.size() == grad.size(), ErrorCode::shape_mismatch,
          "adam: gradient length differs from the parameter count");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  require(state.m.size() == params.size() && state.v.size() == params.size(),
          ErrorCode::shape_mismatch, "adam: optimizer state has the wrong length");
  for (std::size_t i = 0; i < params.size(); ++i)
    require(std::isfinite(params[i]) && std::isfinite(grad[i]), ErrorCode::numeric_error,
            "adam: non-finite input at index " + std::to_string(i));
  ++state.t;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grad[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
  }
}

std::vector<SigmaStage> TrainConfig::resolved_schedule() const {
  if (sigma_schedule.empty()) return {SigmaStage{mmd.sigma, steps}};
  return sigma_schedule;
}

void TrainConfig::validate() const {
  require(steps >= 1, ErrorCode::invalid_argument, "training needs at least one step");
  require(adam.lr > 0.0 && std::isfinite(adam.lr), ErrorCode::invalid_argument,
          "learning rate must be positive");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0,
          ErrorCode::invalid_argument, "Adam betas must lie in [0, 1)");
  require(adam.eps > 0.0, ErrorCode::invalid_argument, "Adam epsilon must be positive");
  mmd.validate();
  std::size_t total = 0;
  for (const auto& stage : resolved_schedule()) {
    require(stage.sigma > 0.0 && std::isfinite(stage.sigma), ErrorCode::invalid_argument,
            "schedule bandwidths must be positive");
    total += stage.steps;
  }
  require(total == steps, ErrorCode::invalid_argument,
          "sigma schedule covers " + std::to_string(total) + " steps but training runs " +
              std::to_string(steps));
}

MeanStd evaluate_model(const CircuitSpec& spec, std::span<const OccupationVector> test_set,
                       const Kernel& kernel, std::size_t repeats, std::uint64_t seed,
                       std::size_t fock_cap) {
  spec.validate();
  require(test_set.size() >= 2, ErrorCode::invalid_argument,
          "evaluation needs at least two test points");
  require(repeats >= 1, ErrorCode::invalid_argument, "evaluation repeats must be >= 1");
  const OutputDistribution dist = output_distribution(compose_mesh(spec), spec.input_state, fock_cap);
  const DistributionSampler sampler(dist);
  std::vector<double> values;
  for (std::size_t r = 0; r < repeats; ++r) {
    Rng rng = substream(seed, Stream::evaluation, r);
    std::vector<OccupationVector> samples;
    samples.reserve(test_set.size());
    for (std::size_t i = 0; i < test_set.size(); ++i) samples.push_back(sampler.draw(rng));
    values.push_back(mmd_unbiased_samples(samples, test_set, kernel));
  }
  return summarize(std::move(values));
}

TrainResult train(const CircuitSpec& initial, std::span<const OccupationVector> train_set,
                  std::span<const OccupationVector> test_set, const TrainConfig& config,
                  const CheckpointFn& checkpoint) {
  initial.validate();
  config.validate();
  const std::size_t m = initial.m;
  const std::size_t n = initial.photons();
  require(train_set.size() >= 2, ErrorCode::invalid_argument,
          "training needs at least two data records");
  for (const auto& x : train_set) {
    require(x.modes() == m, ErrorCode::shape_mismatch,
            "dataset has m = " + std::to_string(x.modes()) + " but the circuit has m = " +
                std::to_string(m));
    require(x.total() == n, ErrorCode::shape_mismatch,
            "dataset weight " + std::to_string(x.total()) + " differs from the photon count " +
                std::to_string(n));
  }
  for (const auto& x : test_set)
    require(x.modes() == m && x.total() == n, ErrorCode::shape_mismatch,
            "test set records do not match the circuit's m and photon count");

  MMDConfig mmd = config.mmd;
  mmd.data_batch = std::min(mmd.data_batch, train_set.size());

  TrainResult result;
  result.spec = initial;
  AdamState adam;
  const auto schedule = config.resolved_schedule();
  std::size_t stage = 0;
  std::size_t stage_end = schedule[0].steps;
  using Clock = std::chrono::steady_clock;

  for (std::size_t step = 1; step <= config.steps; ++step) {
    while (step > stage_end) stage_end += schedule[++stage].steps;
    mmd.sigma = schedule[stage].sigma;
    const auto start = Clock::now();

    EstimatorBatches batches;
    if (config.frozen_batches) {
      batches = draw_estimator_batches({}, m, n, mmd, config.seed, 0);
      batches.data = draw_estimator_batches(train_set, m, n, mmd, config.seed, step).data;
    } else {
      batches = draw_estimator_batches(train_set, m, n, mmd, config.seed, step);
    }
    const LossAndGradient lg = mmd_gradient(result.spec, batches);
    double norm2 = 0.0;
    for (double g : lg.grad) norm2 += g * g;
    adam_step(result.spec.params, lg.grad, adam, config.adam);

    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    result.trace.push_back({step, mmd.sigma, lg.loss, std::sqrt(norm2), ms});

    const bool periodic = config.eval_every > 0 && step % config.eval_every == 0;
    if (periodic || step == config.steps) {
      // Every evaluation reuses the same sample streams, so successive
      // records differ only through the parameters.
      if (test_set.size() >= 2) {
        const Kernel kernel{config.eval_kernel, mmd.sigma};
        result.evals.push_back({step, mmd.sigma,
                                evaluate_model(result.spec, test_set, kernel, config.eval_repeats,
                                               config.seed, config.fock_cap)});
      }
      if (checkpoint) checkpoint(step, result.spec);
    }
  }
  return result;
}

std::vector<GridPoint> run_grid(MeshKind mesh, const OccupationVector& input,
                                std::span<const OccupationVector> train_set,
                                std::span<const OccupationVector> test_set,
                                const TrainConfig& base, const std::vector<double>& lrs,
                                const std::vector<double>& epsilons,
                                const std::vector<double>& sigmas) {
  require(!lrs.empty() && !epsilons.empty() && !sigmas.empty(), ErrorCode::invalid_argument,
          "grid axes must be non-empty");
  std::vector<GridPoint> out;
  std::uint64_t index = 0;
  for (double lr : lrs)
    for (double eps : epsilons)
      for (double sigma : sigmas) {
        TrainConfig cfg = base;
        cfg.adam.lr = lr;
        cfg.mmd.sigma = sigma;
        cfg.sigma_schedule.clear();
        cfg.eval_every = 0;
        Rng rng = substream(base.seed, Stream::params, index++);
        CircuitSpec spec{mesh, input.modes(),
                         initialize_parameters(mesh, input.modes(),
                                               {InitStrategy::Kind::identity_perturbed, eps}, rng),
                         input};
        const TrainResult run = train(spec, train_set, test_set, cfg);
        GridPoint point{lr, eps, sigma, run.trace.back().mmd, {}};
        if (test_set.size() >= 2)
          point.evaluation = evaluate_model(run.spec, test_set, Kernel{base.eval_kernel, sigma},
                                            base.eval_repeats, base.seed, base.fock_cap);
        out.push_back(std::move(point));
      }
  return out;
}

}  // namespace pmmd
