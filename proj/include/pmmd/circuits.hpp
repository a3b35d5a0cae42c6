#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pmmd/numeric.hpp"

namespace pmmd {

enum class MeshKind { clements, butterfly, three_mzi, qr_haar };

std::string mesh_name(MeshKind kind);
// Accepts the canonical names plus a few short aliases ("clements", "3mzi", "qr").
MeshKind parse_mesh_kind(const std::string& name);

std::size_t parameter_count(MeshKind kind, std::size_t m);

// [[e^{i t} cos(t'/2), -sin(t'/2)], [e^{i t} sin(t'/2), cos(t'/2)]]
ComplexMatrix mzi_block(double theta, double theta_prime);

// B P(theta) B P(phi) B with B the symmetric 50:50 splitter and P a phase on
// the first mode of the pair. Diagonal at theta = phi = pi/2.
ComplexMatrix three_mzi_block(double theta, double phi);

struct CircuitSpec {
  MeshKind mesh = MeshKind::clements;
  std::size_t m = 0;
  std::vector<double> params;
  OccupationVector input_state;

  std::size_t photons() const { return input_state.total(); }
  // Throws on any invariant violation (parameter count, input state, mesh size).
  void validate() const;
};

// U_theta for the spec's mesh.
ComplexMatrix compose_mesh(const CircuitSpec& spec);

// Reverse pass of compose_mesh. `u` must be compose_mesh(spec); `u_adjoint`
// holds dL/dRe(U) + i dL/dIm(U). Returns dL/dparams.
std::vector<double> compose_mesh_backward(const CircuitSpec& spec, const ComplexMatrix& u,
                                          const ComplexMatrix& u_adjoint);

// Mean of |u_ij|^2 over `draws` qr_haar unitaries with standard Gaussian
// parameters, row-major m x m.
std::vector<double> qr_haar_statistics_probe(std::size_t m, std::size_t draws, Rng& rng);

struct InitStrategy {
  enum class Kind { identity_perturbed, random } kind = Kind::identity_perturbed;
  double epsilon = 0.0;

  // "identity:0.5", "identity" or "random"
  static InitStrategy parse(const std::string& text);
};

// Parameter value at which the mesh is the identity (or, for three_mzi, a
// diagonal phase matrix).
std::vector<double> identity_parameters(MeshKind kind, std::size_t m);

std::vector<double> initialize_parameters(MeshKind kind, std::size_t m,
                                          const InitStrategy& strategy, Rng& rng);

// n photons, one per mode, in modes 0..n-1 or the given 0-based positions.
OccupationVector make_input_state(std::size_t m, std::size_t n,
                                  const std::optional<std::vector<std::size_t>>& positions = {});

// Line-oriented checkpoint text: "mesh <name>", "modes <m>", "input <digits>",
// "params <v0> <v1> ...". Values round-trip exactly.
std::string serialize_circuit(const CircuitSpec& spec);
CircuitSpec parse_circuit(const std::string& text);

}  // namespace pmmd
