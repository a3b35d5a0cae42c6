#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pmmd/mmd.hpp"
#include "pmmd/numeric.hpp"
#include "pmmd/random.hpp"

namespace pmmd {

// Bernoulli-Bernoulli restricted Boltzmann machine. weights is row-major
// visible x hidden.
struct RbmModel {
  std::size_t visible = 0;
  std::size_t hidden = 0;
  std::vector<double> weights;
  std::vector<double> visible_bias;
  std::vector<double> hidden_bias;

  double weight(std::size_t i, std::size_t j) const { return weights[i * hidden + j]; }
  bool all_finite() const;
};

// Small Gaussian weights (std 0.01), zero biases.
RbmModel rbm_initialize(std::size_t visible, std::size_t hidden, Rng& rng);

struct RbmTrainOptions {
  std::size_t hidden = 0;  // 0 means "same as the number of visible units"
  std::size_t epochs = 200;
  double lr = 0.01;
  std::size_t batch_size = 16;
};

struct RbmTrainResult {
  RbmModel model;
  // Mean squared mean-field reconstruction error over the dataset, one entry
  // per epoch, measured after that epoch's updates.
  std::vector<double> reconstruction_error;
};

// CD-1 over shuffled minibatches. Initialization and the per-epoch shuffles
// both draw from `rng`.
RbmTrainResult rbm_train(std::span<const OccupationVector> data, const RbmTrainOptions& options,
                         Rng& rng);

double rbm_reconstruction_error(const RbmModel& model, std::span<const OccupationVector> data);

// F(v) = -b.v - sum_j log(1 + exp(c_j + v.W_j)); unnormalized probability is exp(-F).
double rbm_free_energy(const RbmModel& model, const OccupationVector& v);

struct RbmSampleOptions {
  std::size_t burn_in = 20;       // Gibbs sweeps before the first weight test
  std::size_t retry_cap = 1000;   // further sweeps allowed per sample
};

struct RbmSamples {
  std::vector<OccupationVector> samples;
  std::size_t fallback_count = 0;  // samples produced by the top-n projection
};

// Independent Gibbs chains, one per sample, each stopped at the first visible
// state of Hamming weight n. A chain that exhausts its retry cap keeps the n
// visible units with the largest activation probability.
RbmSamples rbm_sample(const RbmModel& model, std::size_t count, std::size_t n, Rng& rng,
                      const RbmSampleOptions& options = {});

// Uniform over the C(m, n) weight-n bitstrings.
std::vector<OccupationVector> uniform_fixed_hw_sample(std::size_t m, std::size_t n,
                                                      std::size_t count, Rng& rng);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for a single value
  std::vector<double> values;
};

MeanStd summarize(std::vector<double> values);

// Shuffles the test set, splits it into halves and scores the halves against
// each other with the unbiased estimator.
MeanStd test_to_test_mmd(std::span<const OccupationVector> test_set, const Kernel& kernel,
                         std::size_t repeats, Rng& rng);

// Unbiased MMD of each of `repeats` independent uniform samples of size
// |test_set| against the test set.
MeanStd uniform_baseline_mmd(std::span<const OccupationVector> test_set, std::size_t n,
                             const Kernel& kernel, std::size_t repeats, Rng& rng);

// Same protocol with post-selected RBM samples.
MeanStd rbm_baseline_mmd(const RbmModel& model, std::span<const OccupationVector> test_set,
                         std::size_t n, const Kernel& kernel, std::size_t repeats, Rng& rng);

}  // namespace pmmd
