#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pmmd/baselines.hpp"
#include "pmmd/circuits.hpp"
#include "pmmd/mmd.hpp"

namespace pmmd {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam, in place. An empty state is sized on first use.
void adam_step(std::vector<double>& params, const std::vector<double>& grad, AdamState& state,
               const AdamConfig& config);

struct SigmaStage {
  double sigma = 3.0;
  std::size_t steps = 0;
};

struct TrainConfig {
  std::size_t steps = 200;
  AdamConfig adam;
  MMDConfig mmd;                        // mmd.sigma is used when the schedule is empty
  std::vector<SigmaStage> sigma_schedule;
  std::uint64_t seed = 0;
  std::size_t eval_every = 0;           // 0 disables periodic evaluation
  std::size_t eval_repeats = 5;
  KernelKind eval_kernel = KernelKind::mod2;
  bool frozen_batches = false;          // reuse the step-0 masks and sign vectors
  std::size_t fock_cap = kDefaultFockCap;

  // The schedule with an empty one replaced by a single stage.
  std::vector<SigmaStage> resolved_schedule() const;
  void validate() const;
};

struct TraceRecord {
  std::size_t step = 0;
  double sigma = 0.0;
  double mmd = 0.0;        // sampled loss at the parameters before the update
  double grad_norm = 0.0;
  double wall_ms = 0.0;
};

struct EvalRecord {
  std::size_t step = 0;
  double sigma = 0.0;
  MeanStd result;
};

struct TrainResult {
  CircuitSpec spec;
  std::vector<TraceRecord> trace;
  std::vector<EvalRecord> evals;
};

// Called after every eval_every-th step and after the final step with the
// current parameters.
using CheckpointFn = std::function<void(std::size_t step, const CircuitSpec& spec)>;

TrainResult train(const CircuitSpec& initial, std::span<const OccupationVector> train_set,
                  std::span<const OccupationVector> test_set, const TrainConfig& config,
                  const CheckpointFn& checkpoint = {});

// Exact model samples of size |test_set| scored against the test set with
// the unbiased estimator, once per repeat with samples from the
// (seed, evaluation, repeat) substream.
MeanStd evaluate_model(const CircuitSpec& spec, std::span<const OccupationVector> test_set,
                       const Kernel& kernel, std::size_t repeats, std::uint64_t seed,
                       std::size_t fock_cap = kDefaultFockCap);

struct GridPoint {
  double lr = 0.0;
  double epsilon = 0.0;
  double sigma = 0.0;
  double final_loss = 0.0;
  MeanStd evaluation;
};

// One training run per (lr, epsilon, sigma) combination from an
// identity_perturbed(epsilon) start; each run uses the base config otherwise.
std::vector<GridPoint> run_grid(MeshKind mesh, const OccupationVector& input,
                                std::span<const OccupationVector> train_set,
                                std::span<const OccupationVector> test_set,
                                const TrainConfig& base, const std::vector<double>& lrs,
                                const std::vector<double>& epsilons,
                                const std::vector<double>& sigmas);

}  // namespace pmmd
