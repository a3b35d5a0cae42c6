#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pmmd/circuits.hpp"
#include "pmmd/error.hpp"

using namespace pmmd;

namespace {

constexpr double kPi = std::numbers::pi;

const MeshKind kAllMeshes[] = {MeshKind::clements, MeshKind::butterfly, MeshKind::three_mzi,
                               MeshKind::qr_haar};

CircuitSpec random_spec(MeshKind mesh, std::size_t m, std::uint64_t seed) {
  Rng rng = substream(seed, Stream::user);
  return {mesh, m, initialize_parameters(mesh, m, InitStrategy::parse("random"), rng),
          make_input_state(m, 1)};
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k)
    worst = std::max(worst, std::abs(a.data()[k] - b.data()[k]));
  return worst;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an exception";
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST(Mzi, KnownPoints) {
  EXPECT_LT(max_abs_diff(mzi_block(0.0, 0.0), ComplexMatrix::identity(2)), 1e-15);
  EXPECT_LT(max_abs_diff(mzi_block(0.0, kPi), ComplexMatrix{{0.0, -1.0}, {1.0, 0.0}}), 1e-15);
  Rng rng = substream(1, Stream::user);
  for (int i = 0; i < 100; ++i)
    EXPECT_LT(unitarity_defect(mzi_block(uniform(rng, -7, 7), uniform(rng, -7, 7))), 1e-12);
}

TEST(ThreeMzi, DiagonalAtHalfPiAndUnitary) {
  const ComplexMatrix b = three_mzi_block(kPi / 2, kPi / 2);
  EXPECT_LT(std::abs(b(0, 1)), 1e-15);
  EXPECT_LT(std::abs(b(1, 0)), 1e-15);
  EXPECT_NEAR(std::abs(b(0, 0)), 1.0, 1e-15);
  Rng rng = substream(2, Stream::user);
  for (int i = 0; i < 100; ++i)
    EXPECT_LT(unitarity_defect(three_mzi_block(uniform(rng, -7, 7), uniform(rng, -7, 7))), 1e-12);
}

TEST(Mesh, ParameterCounts) {
  for (std::size_t m : {2u, 4u, 8u, 16u}) {
    EXPECT_EQ(parameter_count(MeshKind::clements, m), m * m);
    EXPECT_EQ(parameter_count(MeshKind::three_mzi, m), m * m);
    EXPECT_EQ(parameter_count(MeshKind::qr_haar, m), 2 * m * m);
  }
  EXPECT_EQ(parameter_count(MeshKind::butterfly, 2), 4u);
  EXPECT_EQ(parameter_count(MeshKind::butterfly, 8), 32u);
  EXPECT_EQ(code_of([] { parameter_count(MeshKind::butterfly, 6); }), ErrorCode::invalid_argument);
}

TEST(Mesh, NamesRoundTrip) {
  for (MeshKind k : kAllMeshes) EXPECT_EQ(parse_mesh_kind(mesh_name(k)), k);
  EXPECT_EQ(parse_mesh_kind("clements"), MeshKind::clements);
  EXPECT_EQ(parse_mesh_kind("3mzi"), MeshKind::three_mzi);
  EXPECT_EQ(code_of([] { parse_mesh_kind("reck"); }), ErrorCode::invalid_argument);
}

TEST(Mesh, ClementsZeroPhasesIsIdentity) {
  for (std::size_t m : {1u, 2u, 5u, 8u}) {
    const CircuitSpec spec{MeshKind::clements, m, std::vector<double>(m * m, 0.0), make_input_state(m, 1)};
    EXPECT_LT(max_abs_diff(compose_mesh(spec), ComplexMatrix::identity(m)), 1e-15);
  }
}

TEST(Mesh, ClementsTwoModesIsDiagonalTimesBlock) {
  const double t = 0.7, tp = 1.9, d0 = -0.4, d1 = 2.2;
  const CircuitSpec spec{MeshKind::clements, 2, {t, tp, d0, d1}, make_input_state(2, 1)};
  const ComplexMatrix diag{{std::polar(1.0, d0), 0.0}, {0.0, std::polar(1.0, d1)}};
  EXPECT_LT(max_abs_diff(compose_mesh(spec), diag * mzi_block(t, tp)), 1e-15);
}

TEST(Mesh, IdentityParameterPoints) {
  for (std::size_t m : {2u, 4u, 8u}) {
    for (MeshKind k : {MeshKind::clements, MeshKind::butterfly, MeshKind::qr_haar}) {
      const CircuitSpec spec{k, m, identity_parameters(k, m), make_input_state(m, 1)};
      EXPECT_LT(max_abs_diff(compose_mesh(spec), ComplexMatrix::identity(m)), 1e-15) << mesh_name(k);
    }
    const CircuitSpec qr{MeshKind::qr_haar, m, identity_parameters(MeshKind::qr_haar, m), make_input_state(m, 1)};
    EXPECT_EQ(compose_mesh(qr), ComplexMatrix::identity(m));
    const CircuitSpec tri{MeshKind::three_mzi, m, identity_parameters(MeshKind::three_mzi, m), make_input_state(m, 1)};
    const ComplexMatrix u = compose_mesh(tri);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        EXPECT_NEAR(std::abs(u(i, j)), i == j ? 1.0 : 0.0, 1e-14);
  }
}

TEST(Mesh, UnitaryForRandomParameters) {
  for (MeshKind k : kAllMeshes)
    for (std::size_t m : {2u, 4u, 8u})
      for (int draw = 0; draw < 100; ++draw)
        ASSERT_LT(unitarity_defect(compose_mesh(random_spec(k, m, 1000 * m + draw))), 1e-10)
            << mesh_name(k) << " m = " << m;
}

TEST(Mesh, ContinuousInParameters) {
  const double delta = 1e-6;
  for (MeshKind k : kAllMeshes) {
    CircuitSpec spec = random_spec(k, 4, 5);
    const ComplexMatrix u = compose_mesh(spec);
    for (std::size_t p = 0; p < spec.params.size(); ++p) {
      CircuitSpec moved = spec;
      moved.params[p] += delta;
      EXPECT_LE(frobenius_norm(compose_mesh(moved) - u), 10.0 * delta) << mesh_name(k) << " p = " << p;
    }
  }
}

TEST(Mesh, ValidationErrors) {
  CircuitSpec spec{MeshKind::clements, 4, std::vector<double>(15), make_input_state(4, 2)};
  EXPECT_EQ(code_of([&] { compose_mesh(spec); }), ErrorCode::shape_mismatch);
  spec.params.resize(16);
  spec.input_state = OccupationVector{2, 0, 0, 0};
  EXPECT_EQ(code_of([&] { compose_mesh(spec); }), ErrorCode::invalid_argument);
  spec.input_state = OccupationVector{0, 0, 0, 0};
  EXPECT_EQ(code_of([&] { compose_mesh(spec); }), ErrorCode::invalid_argument);
  const CircuitSpec bfly{MeshKind::butterfly, 6, std::vector<double>(36), make_input_state(6, 2)};
  EXPECT_EQ(code_of([&] { compose_mesh(bfly); }), ErrorCode::invalid_argument);
}

TEST(HaarProbe, SingleDrawAndTwoModeMean) {
  Rng a = substream(3, Stream::user), b = substream(3, Stream::user);
  const auto single = qr_haar_statistics_probe(3, 1, a);
  CircuitSpec spec{MeshKind::qr_haar, 3, std::vector<double>(18), make_input_state(3, 1)};
  for (auto& p : spec.params) p = standard_normal(b);
  const ComplexMatrix u = compose_mesh(spec);
  for (std::size_t k = 0; k < 9; ++k) EXPECT_DOUBLE_EQ(single[k], std::norm(u.data()[k]));

  Rng rng = substream(4, Stream::user);
  const auto two = qr_haar_statistics_probe(2, 10000, rng);
  EXPECT_GE(two[0], 0.47);
  EXPECT_LE(two[0], 0.53);
}

TEST(Init, IdentityPerturbedBounds) {
  for (MeshKind k : kAllMeshes) {
    const std::size_t m = k == MeshKind::butterfly ? 8 : 6;
    Rng rng = substream(5, Stream::user);
    const auto p = initialize_parameters(k, m, InitStrategy::parse("identity:0.5"), rng);
    const auto id = identity_parameters(k, m);
    ASSERT_EQ(p.size(), id.size());
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_LE(std::abs(p[i] - id[i]), 0.5);
    Rng rng0 = substream(5, Stream::user);
    EXPECT_EQ(initialize_parameters(k, m, InitStrategy::parse("identity"), rng0), id);
  }
}

TEST(Init, SeededAndRangedRandom) {
  Rng a = substream(6, Stream::user), b = substream(6, Stream::user);
  const auto pa = initialize_parameters(MeshKind::clements, 6, InitStrategy::parse("random"), a);
  const auto pb = initialize_parameters(MeshKind::clements, 6, InitStrategy::parse("random"), b);
  EXPECT_EQ(pa, pb);
  for (std::size_t k = 0; k + 6 < pa.size(); k += 2) {
    EXPECT_GE(pa[k], 0.0);
    EXPECT_LT(pa[k], 2 * kPi);
    EXPECT_GE(pa[k + 1], 0.0);
    EXPECT_LE(pa[k + 1], kPi);
  }
}

TEST(Init, ParseErrors) {
  EXPECT_EQ(InitStrategy::parse("identity:0.25").epsilon, 0.25);
  EXPECT_EQ(code_of([] { InitStrategy::parse("identity:-1"); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { InitStrategy::parse("identityx"); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { InitStrategy::parse("zeros"); }), ErrorCode::invalid_argument);
}

TEST(InputState, DefaultsPositionsAndErrors) {
  EXPECT_EQ(make_input_state(4, 2), (OccupationVector{1, 1, 0, 0}));
  EXPECT_EQ(make_input_state(4, 2, std::vector<std::size_t>{1, 3}), (OccupationVector{0, 1, 0, 1}));
  EXPECT_EQ(code_of([] { make_input_state(3, 4); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { make_input_state(4, 2, std::vector<std::size_t>{1, 1}); }),
            ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { make_input_state(4, 1, std::vector<std::size_t>{4}); }),
            ErrorCode::invalid_argument);
}

TEST(Serialization, RoundTripIsExact) {
  for (MeshKind k : kAllMeshes) {
    CircuitSpec spec = random_spec(k, 4, 9);
    spec.input_state = make_input_state(4, 2, std::vector<std::size_t>{0, 3});
    spec.params[0] = 0.1 + 1e-17;
    const CircuitSpec back = parse_circuit(serialize_circuit(spec));
    EXPECT_EQ(back.mesh, spec.mesh);
    EXPECT_EQ(back.m, spec.m);
    EXPECT_EQ(back.input_state, spec.input_state);
    EXPECT_EQ(back.params, spec.params);
  }
}

TEST(Serialization, MalformedInputs) {
  EXPECT_EQ(code_of([] { parse_circuit("mesh clements_rectangular\nmodes 2\ninput 10\n"); }),
            ErrorCode::parse_error);
  EXPECT_EQ(code_of([] { parse_circuit("mesh clements_rectangular\nmodes 2\ninput 10\nparams 1 2 x 4\n"); }),
            ErrorCode::parse_error);
  EXPECT_EQ(code_of([] { parse_circuit("mesh clements_rectangular\nmodes 2\ninput 10\nparams 1 2 3 4\ncolor red\n"); }),
            ErrorCode::parse_error);
  EXPECT_ANY_THROW(parse_circuit("mesh clements_rectangular\nmodes 2\ninput 10\nparams 1 2 3\n"));
}
