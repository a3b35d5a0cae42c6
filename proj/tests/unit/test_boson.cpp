#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "pmmd/boson.hpp"
#include "pmmd/circuits.hpp"
#include "pmmd/error.hpp"

using namespace pmmd;

namespace {

ComplexMatrix beam_splitter() {
  const double r = 1.0 / std::sqrt(2.0);
  return {{Complex(r, 0), Complex(0, r)}, {Complex(0, r), Complex(r, 0)}};
}

}  // namespace

TEST(Distribution, IdentityIsPointMass) {
  const OccupationVector s{1, 1, 0};
  const OutputDistribution d = output_distribution(ComplexMatrix::identity(3), s);
  d.validate();
  EXPECT_EQ(d.probability_of(s), 1.0);
  for (std::size_t i = 0; i < d.domain.size(); ++i)
    if (d.domain[i] != s) EXPECT_EQ(d.probabilities[i], 0.0);
}

TEST(Distribution, HongOuMandel) {
  const OutputDistribution d = output_distribution(beam_splitter(), OccupationVector{1, 1});
  EXPECT_NEAR(d.probability_of(OccupationVector{2, 0}), 0.5, 1e-15);
  EXPECT_NEAR(d.probability_of(OccupationVector{0, 2}), 0.5, 1e-15);
  EXPECT_NEAR(d.probability_of(OccupationVector{1, 1}), 0.0, 1e-15);
  EXPECT_NEAR(d.collision_mass(), 1.0, 1e-15);
}

TEST(Distribution, NormalizedAtDeskScale) {
  for (std::size_t m : {4u, 9u, 14u})
    for (std::size_t n : {1u, 2u, 3u}) {
      const ComplexMatrix u = boson_dataset_unitary(m, 17 * m + n);
      const OutputDistribution d = output_distribution(u, make_input_state(m, n));
      EXPECT_EQ(d.domain.size(), fock_space_size(m, n, false));
      EXPECT_NO_THROW(d.validate(1e-9)) << "m = " << m << " n = " << n;
    }
}

TEST(Distribution, CapRefusal) {
  const ComplexMatrix u = ComplexMatrix::identity(30);
  try {
    output_distribution(u, make_input_state(30, 6));
    FAIL() << "expected refusal";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::cap_exceeded);
  }
  EXPECT_NO_THROW(output_distribution(ComplexMatrix::identity(8), make_input_state(8, 2), 36));
  EXPECT_THROW(output_distribution(ComplexMatrix::identity(8), make_input_state(8, 2), 35), Error);
}

TEST(Sampling, PointMassAndSeeds) {
  const OccupationVector s{0, 1, 1};
  const OutputDistribution d = output_distribution(ComplexMatrix::identity(3), s);
  Rng rng = substream(1, Stream::user);
  for (const auto& x : draw_samples(d, 200, rng)) EXPECT_EQ(x, s);

  const OutputDistribution r = output_distribution(boson_dataset_unitary(5, 2), make_input_state(5, 2));
  Rng a = substream(3, Stream::user), b = substream(3, Stream::user);
  EXPECT_EQ(draw_samples(r, 500, a), draw_samples(r, 500, b));
}

TEST(Sampling, HongOuMandelFrequencies) {
  const OutputDistribution d = output_distribution(beam_splitter(), OccupationVector{1, 1});
  Rng rng = substream(4, Stream::user);
  const std::size_t count = 100000;
  std::size_t both = 0, first = 0;
  for (const auto& x : draw_samples(d, count, rng)) {
    if (x == OccupationVector{1, 1}) ++both;
    if (x == OccupationVector{2, 0}) ++first;
  }
  EXPECT_EQ(both, 0u);
  const double se = std::sqrt(0.25 / count);
  EXPECT_LT(std::abs(static_cast<double>(first) / count - 0.5), 3.0 * se);
}

TEST(Sampling, EmpiricalFrequenciesMatchExact) {
  const std::size_t m = 6, n = 2;
  const OutputDistribution d = output_distribution(boson_dataset_unitary(m, 8), make_input_state(m, n));
  Rng rng = substream(5, Stream::user);
  const std::size_t count = 100000;
  std::map<OccupationVector, std::size_t> hist;
  for (const auto& x : draw_samples(d, count, rng)) ++hist[x];
  for (std::size_t i = 0; i < d.domain.size(); ++i) {
    const double p = d.probabilities[i];
    const double freq = static_cast<double>(hist[d.domain[i]]) / count;
    const double se = std::sqrt(p * (1 - p) / count);
    EXPECT_LE(std::abs(freq - p), 4.0 * se + 1e-12) << d.domain[i].to_string();
  }
}

TEST(Dataset, ConservationDeterminismAndFilter) {
  const Dataset a = generate_boson_dataset(12, 3, 5000, 3);
  const Dataset b = generate_boson_dataset(12, 3, 5000, 3);
  ASSERT_EQ(a.records.size(), 5000u);
  for (const auto& x : a.records) EXPECT_EQ(x.total(), 3u);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.provenance, b.provenance);
  EXPECT_NE(a.provenance.front().find("unitary_checksum=" + matrix_checksum(boson_dataset_unitary(12, 3))),
            std::string::npos);
  EXPECT_NE(generate_boson_dataset(12, 3, 100, 4).records, generate_boson_dataset(12, 3, 100, 3).records);

  BosonDatasetOptions cf;
  cf.collision_free = true;
  const Dataset f = generate_boson_dataset(12, 3, 2000, 3, cf);
  EXPECT_FALSE(f.collisions);
  for (const auto& x : f.records) EXPECT_TRUE(x.collision_free());
  EXPECT_NO_THROW(f.validate());
}

TEST(Dataset, RefusesAboveCapAndCountsRetries) {
  try {
    generate_boson_dataset(256, 16, 10, 1);
    FAIL() << "expected refusal";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::cap_exceeded);
    EXPECT_NE(std::string(e.what()).find("dedicated sampler"), std::string::npos);
  }
  BosonDatasetOptions strict;
  strict.collision_free = true;
  strict.retry_cap = 0;
  // With two modes and two photons collisions are common; a zero retry cap must trip.
  EXPECT_THROW(generate_boson_dataset(2, 2, 200, 1, strict), Error);
}
