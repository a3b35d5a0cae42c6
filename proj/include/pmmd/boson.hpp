#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pmmd/dataio.hpp"
#include "pmmd/numeric.hpp"

namespace pmmd {

// A probability table over an enumerated set of occupation vectors.
struct OutputDistribution {
  std::vector<OccupationVector> domain;
  std::vector<double> probabilities;

  // Non-negative entries summing to 1 within `tol`.
  void validate(double tol = 1e-9) const;
  double probability_of(const OccupationVector& x) const;
  // Total probability of outcomes with some mode holding two or more photons.
  double collision_mass() const;
};

inline constexpr std::size_t kDefaultFockCap = 200000;

// |Perm(U_{s_in,s_out})|^2 / (prod s_in! prod s_out!) for every s_out.
OutputDistribution output_distribution(const ComplexMatrix& u, const OccupationVector& s_in,
                                       std::size_t fock_cap = kDefaultFockCap);

// Inverse-CDF sampler over a fixed distribution.
class DistributionSampler {
 public:
  explicit DistributionSampler(const OutputDistribution& dist);
  const OccupationVector& draw(Rng& rng) const;

 private:
  const OutputDistribution* dist_;
  std::vector<double> cdf_;
};

// i.i.d. inverse-CDF draws.
std::vector<OccupationVector> draw_samples(const OutputDistribution& dist, std::size_t count,
                                           Rng& rng);

struct BosonDatasetOptions {
  bool collision_free = false;
  std::size_t fock_cap = kDefaultFockCap;
  std::size_t retry_cap = 1000000;  // total rejected draws allowed when filtering
};

// Haar-random interferometer (qr_haar with Gaussian parameters), exact output
// distribution for photons in the first n modes, then `size` samples. The
// generator record (seed, m, n, unitary checksum) goes into the provenance.
Dataset generate_boson_dataset(std::size_t m, std::size_t n, std::size_t size,
                               std::uint64_t seed, const BosonDatasetOptions& options = {});

// The unitary generate_boson_dataset uses for a given (m, seed).
ComplexMatrix boson_dataset_unitary(std::size_t m, std::uint64_t seed);

// FNV-1a over the IEEE-754 bytes of the entries, as 16 hex digits.
std::string matrix_checksum(const ComplexMatrix& u);

}  // namespace pmmd
