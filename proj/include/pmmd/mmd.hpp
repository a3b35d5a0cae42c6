#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pmmd/boson.hpp"
#include "pmmd/circuits.hpp"
#include "pmmd/numeric.hpp"

namespace pmmd {

// exp(-|x - y|^2 / 2 sigma^2)
double gaussian_kernel(const OccupationVector& x, const OccupationVector& y, double sigma);

// exp(-(1 / 2 sigma^2) sum_i ((x_i + y_i) mod 2)); the kernel the linear-optical
// observable reproduces at every collision level.
double mod2_kernel(const OccupationVector& x, const OccupationVector& y, double sigma);

enum class KernelKind { gaussian, mod2 };

struct Kernel {
  KernelKind kind = KernelKind::mod2;
  double sigma = 1.0;

  double operator()(const OccupationVector& x, const OccupationVector& y) const {
    return kind == KernelKind::mod2 ? mod2_kernel(x, y, sigma) : gaussian_kernel(x, y, sigma);
  }
};

// Per-mode Bernoulli probability (1 - e^{-1/2 sigma^2}) / 2.
double p_sigma(double sigma);

using MaskVector = std::vector<std::uint8_t>;

MaskVector sample_mask(std::size_t m, double sigma, Rng& rng);

// (1 - p)^{m - |k|} p^{|k|}
double mask_probability(std::span<const std::uint8_t> mask, double sigma);

// (-1)^{x . k}
int parity_sign(const OccupationVector& x, std::span<const std::uint8_t> mask);

// Three double sums over the supports of p and q.
double mmd_exact(const OutputDistribution& p, const OutputDistribution& q, const Kernel& kernel);

// sum_{x,y} q(x) q(y) K(x, y)
double self_kernel_term(const OutputDistribution& q, const Kernel& kernel);

// Unbiased U-statistic estimate; may be negative.
double mmd_unbiased_samples(std::span<const OccupationVector> x,
                            std::span<const OccupationVector> y, const Kernel& kernel);

// <s| U~^dag W~^k U~ |s> = Perm((U^dag W^k U)^{s,s}) / prod s_i!
double expectation_wk_exact(const ComplexMatrix& u, const OccupationVector& s,
                            std::span<const std::uint8_t> mask);

enum class LoKernelMode {
  mod2,                     // sum_k P(k) <W~^k>^2 with single-permanent expectations
  gaussian_collision_free,  // same sum with expectations restricted to collision-free outputs
};

inline constexpr std::size_t kMaxEnumeratedMaskModes = 16;

// Model-model MMD term through exhaustive enumeration of all 2^m masks.
double mmd_lo_exact(const ComplexMatrix& u, const OccupationVector& s, double sigma,
                    LoKernelMode mode, std::size_t fock_cap = kDefaultFockCap);

struct MMDConfig {
  double sigma = 3.0;
  std::size_t mask_batch = 2000;   // |K|
  std::size_t glynn_batch = 2000;  // |Z|
  std::size_t data_batch = 256;    // |X|

  void validate() const;
};

// The three batches of one estimator evaluation.
struct EstimatorBatches {
  std::vector<OccupationVector> data;  // X
  std::vector<MaskVector> masks;       // K
  std::vector<SignVector> signs;       // Z, each of length n

  void validate(std::size_t m, std::size_t n) const;
};

// Draws K and Z from the (seed, index) mask and sign substreams and, when
// `pool` is non-empty, an |X|-subset of `pool` without replacement from the
// data substream.
EstimatorBatches draw_estimator_batches(std::span<const OccupationVector> pool, std::size_t m,
                                        std::size_t n, const MMDConfig& config,
                                        std::uint64_t seed, std::uint64_t index);

struct EstimatorTerms {
  double model_model = 0.0;
  double cross = 0.0;  // already carries the factor 2
  double data_data = 0.0;
  double loss() const { return model_model - cross + data_data; }
};

// The unbiased three-term estimate built from Glynn samples of
// Re Gly_z((U^dag W^k U)^{s,s}).
double mmd_hat_figure1(const EstimatorBatches& batches, const CircuitSpec& spec);
EstimatorTerms mmd_hat_terms(const EstimatorBatches& batches, const CircuitSpec& spec);

// Estimator on an explicit unitary. When `u_adjoint` is non-null it receives
// dL/dRe(U) + i dL/dIm(U). The forward arithmetic does not depend on whether
// the adjoint is requested.
EstimatorTerms estimate_from_unitary(const ComplexMatrix& u, const OccupationVector& input,
                                     const EstimatorBatches& batches,
                                     ComplexMatrix* u_adjoint = nullptr);

}  // namespace pmmd
