#include "pmmd/boson.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

#include "pmmd/circuits.hpp"
#include "pmmd/error.hpp"
#include "pmmd/random.hpp"

namespace pmmd {

void OutputDistribution::validate(double tol) const {
  require(domain.size() == probabilities.size(), ErrorCode::shape_mismatch,
          "distribution domain and probability table differ in size");
  double total = 0.0;
  for (double p : probabilities) {
    require(p >= 0.0 && std::isfinite(p), ErrorCode::invalid_argument,
            "distribution has a negative or non-finite probability");
    total += p;
  }
  require(std::abs(total - 1.0) <= tol, ErrorCode::invalid_argument,
          "distribution is not normalized (sum = " + std::to_string(total) + ")");
}

double OutputDistribution::probability_of(const OccupationVector& x) const {
  for (std::size_t i = 0; i < domain.size(); ++i)
    if (domain[i] == x) return probabilities[i];
  return 0.0;
}

double OutputDistribution::collision_mass() const {
  double mass = 0.0;
  for (std::size_t i = 0; i < domain.size(); ++i)
    if (!domain[i].collision_free()) mass += probabilities[i];
  return mass;
}

OutputDistribution output_distribution(const ComplexMatrix& u, const OccupationVector& s_in,
                                       std::size_t fock_cap) {
  require(u.square() && u.rows() == s_in.modes(), ErrorCode::shape_mismatch,
          "output_distribution: unitary and input state disagree on m");
  const std::size_t m = u.rows();
  const std::size_t n = s_in.total();
  const std::size_t size = fock_space_size(m, n, false);
  require(size <= fock_cap, ErrorCode::cap_exceeded,
          "Fock space of m = " + std::to_string(m) + ", n = " + std::to_string(n) +
              " has " + (size == SIZE_MAX ? std::string("too many") : std::to_string(size)) +
              " states, above the exact-simulation cap of " + std::to_string(fock_cap));
  OutputDistribution dist;
  dist.domain = enumerate_fock_space(m, n, false);
  dist.probabilities.resize(dist.domain.size());
  const double in_fact = s_in.factorial_product();
  for (std::size_t i = 0; i < dist.domain.size(); ++i) {
    const auto& out = dist.domain[i];
    const Complex amp = permanent_exact(build_submatrix(u, s_in, out));
    dist.probabilities[i] = std::norm(amp) / (in_fact * out.factorial_product());
  }
  return dist;
}

DistributionSampler::DistributionSampler(const OutputDistribution& dist) : dist_(&dist) {
  require(!dist.domain.empty() && dist.domain.size() == dist.probabilities.size(),
          ErrorCode::invalid_argument, "cannot sample an empty or malformed distribution");
  cdf_.resize(dist.probabilities.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cdf_.size(); ++i) {
    acc += dist.probabilities[i];
    cdf_[i] = acc;
  }
}

const OccupationVector& DistributionSampler::draw(Rng& rng) const {
  const double u = uniform01(rng) * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t idx = static_cast<std::size_t>(it - cdf_.begin());
  if (idx >= cdf_.size()) idx = cdf_.size() - 1;
  // Rounding at a plateau of the CDF must not select a zero-probability state.
  while (dist_->probabilities[idx] == 0.0 && idx > 0) --idx;
  return dist_->domain[idx];
}

std::vector<OccupationVector> draw_samples(const OutputDistribution& dist, std::size_t count,
                                           Rng& rng) {
  const DistributionSampler sampler(dist);
  std::vector<OccupationVector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(sampler.draw(rng));
  return out;
}

ComplexMatrix boson_dataset_unitary(std::size_t m, std::uint64_t seed) {
  Rng rng = substream(seed, Stream::dataset);
  CircuitSpec spec{MeshKind::qr_haar, m, std::vector<double>(2 * m * m),
                   make_input_state(m, 1)};
  for (auto& p : spec.params) p = standard_normal(rng);
  return compose_mesh(spec);
}

std::string matrix_checksum(const ComplexMatrix& u) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& z : u.data()) {
    for (double part : {z.real(), z.imag()}) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &part, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

Dataset generate_boson_dataset(std::size_t m, std::size_t n, std::size_t size,
                               std::uint64_t seed, const BosonDatasetOptions& options) {
  require(n >= 1 && n <= m, ErrorCode::invalid_argument,
          "boson dataset needs 1 <= n <= m (one photon per input mode)");
  const std::size_t fock = fock_space_size(m, n, false);
  require(fock <= options.fock_cap, ErrorCode::cap_exceeded,
          "exact boson sampling refused for m = " + std::to_string(m) + ", n = " +
              std::to_string(n) +
              ": Fock space exceeds the desk-scale cap; larger datasets "
              "(m = 256, n = 16) need a dedicated sampler");
  const ComplexMatrix u = boson_dataset_unitary(m, seed);
  const OccupationVector s_in = make_input_state(m, n);
  const OutputDistribution dist = output_distribution(u, s_in, options.fock_cap);
  dist.validate();

  Rng rng = substream(seed, Stream::samples);
  const DistributionSampler sampler(dist);
  Dataset ds;
  ds.m = m;
  ds.n = n;
  ds.collisions = !options.collision_free;
  ds.records.reserve(size);
  std::size_t rejected = 0;
  while (ds.records.size() < size) {
    const OccupationVector& x = sampler.draw(rng);
    if (options.collision_free && !x.collision_free()) {
      ++rejected;
      require(rejected <= options.retry_cap, ErrorCode::cap_exceeded,
              "collision-free filtering exceeded its retry cap of " +
                  std::to_string(options.retry_cap) + " rejected draws");
      continue;
    }
    ds.records.push_back(x);
  }
  ds.provenance.push_back("generator boson_sampling seed=" + std::to_string(seed) +
                          " m=" + std::to_string(m) + " n=" + std::to_string(n) +
                          " unitary_checksum=" + matrix_checksum(u));
  ds.provenance.push_back("input " + s_in.to_string() + " collision_free_filter=" +
                          (options.collision_free ? "1" : "0") +
                          " rejected=" + std::to_string(rejected));
  return ds;
}

}  // namespace pmmd
