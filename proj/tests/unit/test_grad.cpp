#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <limits>

#include "pmmd/boson.hpp"
#include "pmmd/error.hpp"
#include "pmmd/grad.hpp"

using namespace pmmd;

namespace {

struct Problem {
  CircuitSpec spec;
  EstimatorBatches batches;
};

Problem make_problem(MeshKind mesh, std::size_t m, std::size_t n, std::uint64_t seed,
                     std::size_t k = 40, std::size_t z = 40) {
  Rng rng = substream(seed, Stream::params);
  CircuitSpec spec{mesh, m, initialize_parameters(mesh, m, InitStrategy::parse("random"), rng),
                   make_input_state(m, n)};
  const Dataset target = generate_boson_dataset(m, n, 100, seed + 1000);
  return {spec, draw_estimator_batches(target.records, m, n, MMDConfig{1.0, k, z, 32}, seed, 0)};
}

}  // namespace

TEST(Gradient, LossIsBitIdenticalToForward) {
  for (MeshKind mesh : {MeshKind::clements, MeshKind::butterfly, MeshKind::three_mzi, MeshKind::qr_haar}) {
    const Problem p = make_problem(mesh, 4, 2, 3);
    EXPECT_EQ(mmd_gradient(p.spec, p.batches).loss, mmd_hat_figure1(p.batches, p.spec)) << mesh_name(mesh);
  }
}

TEST(Gradient, MatchesFiniteDifferencesForEveryMesh) {
  struct Case {
    MeshKind mesh;
    std::size_t m, n;
  };
  const Case cases[] = {
      {MeshKind::clements, 4, 2},  {MeshKind::clements, 6, 3},  {MeshKind::clements, 8, 2},
      {MeshKind::butterfly, 4, 2}, {MeshKind::butterfly, 8, 3}, {MeshKind::three_mzi, 4, 1},
      {MeshKind::three_mzi, 6, 2}, {MeshKind::qr_haar, 4, 2},   {MeshKind::qr_haar, 6, 3},
  };
  std::uint64_t seed = 10;
  for (const Case& c : cases) {
    const Problem p = make_problem(c.mesh, c.m, c.n, ++seed);
    const double err = finite_difference_check(p.spec, p.batches, 1e-6);
    EXPECT_LT(err, 1e-4) << mesh_name(c.mesh) << " m=" << c.m << " n=" << c.n;
  }
}

TEST(Gradient, UnitaryAdjointWithCollisionInput) {
  // Circuit inputs are collision-free, but the estimator core accepts repeated
  // modes; its adjoint is checked against differences in Re U and Im U.
  const std::size_t m = 4;
  const ComplexMatrix u = boson_dataset_unitary(m, 22);
  const OccupationVector s{2, 1, 0, 0};
  EstimatorBatches b = draw_estimator_batches({}, m, 3, MMDConfig{0.8, 20, 20, 4}, 22, 0);
  b.data = {OccupationVector{3, 0, 0, 0}, OccupationVector{1, 1, 1, 0}, OccupationVector{0, 0, 2, 1},
            OccupationVector{1, 0, 0, 2}};
  auto unpack = [&](const std::vector<double>& x) {
    ComplexMatrix v(m, m);
    for (std::size_t k = 0; k < m * m; ++k) v.data()[k] = Complex(x[2 * k], x[2 * k + 1]);
    return v;
  };
  std::vector<double> x;
  for (const Complex& z : u.data()) {
    x.push_back(z.real());
    x.push_back(z.imag());
  }
  ComplexMatrix adj;
  estimate_from_unitary(u, s, b, &adj);
  std::vector<double> g;
  for (const Complex& z : adj.data()) {
    g.push_back(z.real());
    g.push_back(z.imag());
  }
  auto loss = [&](const std::vector<double>& v) { return estimate_from_unitary(unpack(v), s, b).loss(); };
  EXPECT_LT(finite_difference_check(loss, x, g, 1e-6), 1e-6);
}

TEST(Gradient, ErrorShrinksWithStepUntilRoundoff) {
  const Problem p = make_problem(MeshKind::qr_haar, 4, 2, 30);
  const double coarse = finite_difference_check(p.spec, p.batches, 1e-1);
  const double fine = finite_difference_check(p.spec, p.batches, 1e-3);
  EXPECT_GT(coarse, fine);
  EXPECT_GT(coarse / fine, 10.0);
}

TEST(Gradient, StationaryAtPerfectFit) {
  const std::size_t m = 6, n = 2;
  const OccupationVector s = make_input_state(m, n);
  const CircuitSpec spec{MeshKind::clements, m, identity_parameters(MeshKind::clements, m), s};
  const std::vector<OccupationVector> data(50, s);
  const EstimatorBatches b = draw_estimator_batches(data, m, n, MMDConfig{1.0, 30, 30, 20}, 5, 0);
  const LossAndGradient lg = mmd_gradient(spec, b);
  EXPECT_NEAR(lg.loss, 0.0, 1e-12);
  for (double g : lg.grad) EXPECT_NEAR(g, 0.0, 1e-12);
}

TEST(FiniteDifference, QuadraticHook) {
  const std::vector<double> x{0.3, -1.2, 2.5};
  auto loss = [](const std::vector<double>& v) {
    return 0.5 * v[0] * v[0] + 2.0 * v[1] * v[1] + v[0] * v[2] - 3.0 * v[2];
  };
  const std::vector<double> g{x[0] + x[2], 4.0 * x[1], x[0] - 3.0};
  EXPECT_LT(finite_difference_check(loss, x, g, 1e-4), 1e-10);
  std::vector<double> wrong = g;
  wrong[1] *= 1.01;
  EXPECT_GT(finite_difference_check(loss, x, wrong, 1e-4), 5e-3);
  EXPECT_THROW(finite_difference_check(loss, x, g, 0.0), Error);
  EXPECT_THROW(finite_difference_check(loss, x, std::vector<double>{1.0}, 1e-4), Error);
}

TEST(Gradient, NonFiniteParametersAreRejected) {
  Problem p = make_problem(MeshKind::clements, 4, 2, 40);
  p.spec.params[3] = std::numeric_limits<double>::quiet_NaN();
  try {
    mmd_gradient(p.spec, p.batches);
    FAIL() << "expected numeric_error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::numeric_error);
  }
}

TEST(Gradient, CostIsAConstantMultipleOfForward) {
  const Problem p = make_problem(MeshKind::clements, 12, 3, 50, 1000, 1000);
  using clock = std::chrono::steady_clock;
  // Warm both paths once so page faults and allocation do not skew the ratio.
  mmd_hat_figure1(p.batches, p.spec);
  mmd_gradient(p.spec, p.batches);
  auto t0 = clock::now();
  for (int i = 0; i < 3; ++i) mmd_hat_figure1(p.batches, p.spec);
  auto t1 = clock::now();
  for (int i = 0; i < 3; ++i) mmd_gradient(p.spec, p.batches);
  auto t2 = clock::now();
  const double forward = std::chrono::duration<double>(t1 - t0).count();
  const double backward = std::chrono::duration<double>(t2 - t1).count();
  EXPECT_LT(backward, 10.0 * forward);
}
