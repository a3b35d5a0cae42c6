#include "pmmd/circuits.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "pmmd/error.hpp"

namespace pmmd {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = kPi / 2.0;

struct Block {
  std::size_t p = 0;
  std::size_t q = 0;
  std::size_t param = 0;  // index of the first of two consecutive parameters
};

using Mat2 = std::array<Complex, 4>;  // row-major 2x2

struct BlockJet {
  Mat2 value;
  Mat2 d_first;
  Mat2 d_second;
};

Mat2 mul2(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

BlockJet mzi_jet(double theta, double theta_prime) {
  const Complex e = std::polar(1.0, theta);
  const double c = std::cos(theta_prime / 2.0);
  const double s = std::sin(theta_prime / 2.0);
  const Complex ie = Complex(0.0, 1.0) * e;
  return {
      {e * c, -s, e * s, c},
      {ie * c, 0.0, ie * s, 0.0},
      {-0.5 * e * s, -0.5 * c, 0.5 * e * c, -0.5 * s},
  };
}

BlockJet three_mzi_jet(double theta, double phi) {
  const double r = 1.0 / std::sqrt(2.0);
  const Mat2 b{r, Complex(0.0, r), Complex(0.0, r), r};
  const Complex et = std::polar(1.0, theta);
  const Complex ep = std::polar(1.0, phi);
  const Complex i{0.0, 1.0};
  const Mat2 pt{et, 0.0, 0.0, 1.0};
  const Mat2 pp{ep, 0.0, 0.0, 1.0};
  const Mat2 dpt{i * et, 0.0, 0.0, 0.0};
  const Mat2 dpp{i * ep, 0.0, 0.0, 0.0};
  const Mat2 tail = mul2(b, mul2(pp, b));   // B P(phi) B
  const Mat2 head = mul2(b, pt);            // B P(theta)
  return {
      mul2(head, tail),
      mul2(mul2(b, dpt), tail),
      mul2(head, mul2(b, mul2(dpp, b))),
  };
}

BlockJet block_jet(MeshKind kind, double a, double b) {
  return kind == MeshKind::three_mzi ? three_mzi_jet(a, b) : mzi_jet(a, b);
}

bool power_of_two(std::size_t m) { return m >= 1 && std::has_single_bit(m); }

// Blocks in the order light traverses them.
std::vector<Block> mesh_layout(MeshKind kind, std::size_t m) {
  std::vector<Block> blocks;
  std::size_t next = 0;
  if (kind == MeshKind::butterfly) {
    const int stages = std::countr_zero(m);
    for (int s = 0; s < stages; ++s) {
      const std::size_t stride = std::size_t{1} << s;
      for (std::size_t i = 0; i < m; ++i) {
        if (i & stride) continue;
        blocks.push_back({i, i + stride, next});
        next += 2;
      }
    }
    return blocks;
  }
  // Rectangular brick pattern: even layers couple (0,1),(2,3)..., odd layers (1,2),(3,4)...
  for (std::size_t layer = 0; layer < m; ++layer) {
    for (std::size_t p = layer % 2; p + 1 < m; p += 2) {
      blocks.push_back({p, p + 1, next});
      next += 2;
    }
  }
  return blocks;
}

void apply_rows(ComplexMatrix& u, std::size_t p, std::size_t q, const Mat2& t) {
  auto rp = u.row(p);
  auto rq = u.row(q);
  for (std::size_t c = 0; c < u.cols(); ++c) {
    const Complex a = rp[c];
    const Complex b = rq[c];
    rp[c] = t[0] * a + t[1] * b;
    rq[c] = t[2] * a + t[3] * b;
  }
}

Mat2 adjoint2(const Mat2& t) {
  return {std::conj(t[0]), std::conj(t[2]), std::conj(t[1]), std::conj(t[3])};
}

double contract(const Mat2& adj, const Mat2& d) {
  double s = 0.0;
  for (std::size_t k = 0; k < 4; ++k) s += (std::conj(adj[k]) * d[k]).real();
  return s;
}

ComplexMatrix compose_interferometer(const CircuitSpec& spec) {
  const std::size_t m = spec.m;
  ComplexMatrix u = ComplexMatrix::identity(m);
  for (const Block& b : mesh_layout(spec.mesh, m)) {
    const BlockJet jet = block_jet(spec.mesh, spec.params[b.param], spec.params[b.param + 1]);
    apply_rows(u, b.p, b.q, jet.value);
  }
  const std::size_t diag = spec.params.size() - m;
  for (std::size_t r = 0; r < m; ++r) {
    const Complex ph = std::polar(1.0, spec.params[diag + r]);
    for (auto& z : u.row(r)) z *= ph;
  }
  return u;
}

std::vector<double> interferometer_backward(const CircuitSpec& spec, const ComplexMatrix& u,
                                            const ComplexMatrix& u_adjoint) {
  const std::size_t m = spec.m;
  std::vector<double> grad(spec.params.size(), 0.0);
  const std::size_t diag = spec.params.size() - m;

  ComplexMatrix state = u;        // product of the blocks applied so far
  ComplexMatrix adj = u_adjoint;  // adjoint of `state`
  const Complex i{0.0, 1.0};
  for (std::size_t r = 0; r < m; ++r) {
    double g = 0.0;
    const auto ur = u.row(r);
    const auto ar = u_adjoint.row(r);
    for (std::size_t c = 0; c < m; ++c) g += (std::conj(ar[c]) * i * ur[c]).real();
    grad[diag + r] = g;
    const Complex undo = std::polar(1.0, -spec.params[diag + r]);
    for (auto& z : state.row(r)) z *= undo;
    for (auto& z : adj.row(r)) z *= undo;
  }

  const auto blocks = mesh_layout(spec.mesh, m);
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    const BlockJet jet = block_jet(spec.mesh, spec.params[it->param], spec.params[it->param + 1]);
    const Mat2 inv = adjoint2(jet.value);
    apply_rows(state, it->p, it->q, inv);
    const auto xp = adj.row(it->p);
    const auto xq = adj.row(it->q);
    const auto sp = state.row(it->p);
    const auto sq = state.row(it->q);
    Mat2 t_adj{};
    for (std::size_t c = 0; c < m; ++c) {
      t_adj[0] += xp[c] * std::conj(sp[c]);
      t_adj[1] += xp[c] * std::conj(sq[c]);
      t_adj[2] += xq[c] * std::conj(sp[c]);
      t_adj[3] += xq[c] * std::conj(sq[c]);
    }
    grad[it->param] = contract(t_adj, jet.d_first);
    grad[it->param + 1] = contract(t_adj, jet.d_second);
    apply_rows(adj, it->p, it->q, inv);
  }
  return grad;
}

// Modified Gram-Schmidt on the columns of X + iY.
struct GramSchmidt {
  std::vector<std::vector<Complex>> q;  // orthonormal columns
  std::vector<Complex> r;               // strictly upper part, r[i * m + j]
  std::vector<double> pivot;            // diagonal of R (real, positive)
};

GramSchmidt gram_schmidt(const CircuitSpec& spec) {
  const std::size_t m = spec.m;
  const std::size_t half = m * m;
  GramSchmidt gs;
  gs.q.assign(m, std::vector<Complex>(m));
  gs.r.assign(m * m, 0.0);
  gs.pivot.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<Complex> v(m);
    for (std::size_t row = 0; row < m; ++row)
      v[row] = Complex(spec.params[row * m + j], spec.params[half + row * m + j]);
    for (std::size_t i = 0; i < j; ++i) {
      Complex rij{};
      for (std::size_t k = 0; k < m; ++k) rij += std::conj(gs.q[i][k]) * v[k];
      for (std::size_t k = 0; k < m; ++k) v[k] -= rij * gs.q[i][k];
      gs.r[i * m + j] = rij;
    }
    double norm = 0.0;
    for (const auto& z : v) norm += std::norm(z);
    norm = std::sqrt(norm);
    require(norm > 1e-300 && std::isfinite(norm), ErrorCode::numeric_error,
            "qr_haar parameters give a singular matrix");
    gs.pivot[j] = norm;
    for (std::size_t k = 0; k < m; ++k) gs.q[j][k] = v[k] / norm;
  }
  return gs;
}

ComplexMatrix compose_qr_haar(const CircuitSpec& spec) {
  const GramSchmidt gs = gram_schmidt(spec);
  ComplexMatrix u(spec.m, spec.m);
  for (std::size_t j = 0; j < spec.m; ++j)
    for (std::size_t k = 0; k < spec.m; ++k) u(k, j) = gs.q[j][k];
  return u;
}

std::vector<double> qr_haar_backward(const CircuitSpec& spec, const ComplexMatrix& u_adjoint) {
  const std::size_t m = spec.m;
  const GramSchmidt gs = gram_schmidt(spec);
  std::vector<std::vector<Complex>> q_adj(m, std::vector<Complex>(m));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k) q_adj[j][k] = u_adjoint(k, j);

  std::vector<double> grad(2 * m * m, 0.0);
  std::vector<Complex> v(m), v_adj(m), v_prev(m);
  for (std::size_t j = m; j-- > 0;) {
    const auto& qj = gs.q[j];
    const double rho = gs.pivot[j];
    // q = v / |v|
    double proj = 0.0;
    for (std::size_t k = 0; k < m; ++k) proj += (std::conj(qj[k]) * q_adj[j][k]).real();
    for (std::size_t k = 0; k < m; ++k) {
      v[k] = qj[k] * rho;
      v_adj[k] = (q_adj[j][k] - proj * qj[k]) / rho;
    }
    for (std::size_t i = j; i-- > 0;) {
      const auto& qi = gs.q[i];
      const Complex rij = gs.r[i * m + j];
      // v = v_prev - r q_i with r = <q_i, v_prev>
      Complex r_adj{};
      for (std::size_t k = 0; k < m; ++k) {
        v_prev[k] = v[k] + rij * qi[k];
        r_adj -= std::conj(qi[k]) * v_adj[k];
      }
      for (std::size_t k = 0; k < m; ++k) {
        q_adj[i][k] += -std::conj(rij) * v_adj[k] + std::conj(r_adj) * v_prev[k];
        v_adj[k] += r_adj * qi[k];
      }
      std::swap(v, v_prev);
    }
    for (std::size_t row = 0; row < m; ++row) {
      grad[row * m + j] = v_adj[row].real();
      grad[m * m + row * m + j] = v_adj[row].imag();
    }
  }
  return grad;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

std::string mesh_name(MeshKind kind) {
  switch (kind) {
    case MeshKind::clements:
      return "clements_rectangular";
    case MeshKind::butterfly:
      return "butterfly";
    case MeshKind::three_mzi:
      return "three_mzi";
    case MeshKind::qr_haar:
      return "qr_haar";
  }
  return "unknown";
}

MeshKind parse_mesh_kind(const std::string& name) {
  if (name == "clements_rectangular" || name == "clements" || name == "rectangular")
    return MeshKind::clements;
  if (name == "butterfly") return MeshKind::butterfly;
  if (name == "three_mzi" || name == "3mzi" || name == "3-mzi") return MeshKind::three_mzi;
  if (name == "qr_haar" || name == "qr" || name == "haar") return MeshKind::qr_haar;
  fail(ErrorCode::invalid_argument, "unknown mesh kind '" + name + "'");
}

std::size_t parameter_count(MeshKind kind, std::size_t m) {
  switch (kind) {
    case MeshKind::clements:
    case MeshKind::three_mzi:
      return m * m;
    case MeshKind::butterfly:
      require(power_of_two(m), ErrorCode::invalid_argument,
              "butterfly mesh needs a power-of-two mode count, got " + std::to_string(m));
      return m * static_cast<std::size_t>(std::countr_zero(m)) + m;
    case MeshKind::qr_haar:
      return 2 * m * m;
  }
  return 0;
}

ComplexMatrix mzi_block(double theta, double theta_prime) {
  const Mat2 t = mzi_jet(theta, theta_prime).value;
  return {{t[0], t[1]}, {t[2], t[3]}};
}

ComplexMatrix three_mzi_block(double theta, double phi) {
  const Mat2 t = three_mzi_jet(theta, phi).value;
  return {{t[0], t[1]}, {t[2], t[3]}};
}

void CircuitSpec::validate() const {
  require(m >= 1, ErrorCode::invalid_argument, "circuit needs at least one mode");
  const std::size_t expected = parameter_count(mesh, m);
  require(params.size() == expected, ErrorCode::shape_mismatch,
          "mesh " + mesh_name(mesh) + " with m = " + std::to_string(m) + " needs " +
              std::to_string(expected) + " parameters, got " + std::to_string(params.size()));
  require(input_state.modes() == m, ErrorCode::shape_mismatch,
          "input state length " + std::to_string(input_state.modes()) + " != m = " +
              std::to_string(m));
  require(input_state.collision_free(), ErrorCode::invalid_argument,
          "input state must hold at most one photon per mode");
  require(photons() >= 1, ErrorCode::invalid_argument, "input state must hold a photon");
}

ComplexMatrix compose_mesh(const CircuitSpec& spec) {
  spec.validate();
  if (spec.mesh == MeshKind::qr_haar) return compose_qr_haar(spec);
  return compose_interferometer(spec);
}

std::vector<double> compose_mesh_backward(const CircuitSpec& spec, const ComplexMatrix& u,
                                          const ComplexMatrix& u_adjoint) {
  spec.validate();
  require(u.rows() == spec.m && u.cols() == spec.m && u_adjoint.rows() == spec.m &&
              u_adjoint.cols() == spec.m,
          ErrorCode::shape_mismatch, "compose_mesh_backward: matrix shape mismatch");
  if (spec.mesh == MeshKind::qr_haar) return qr_haar_backward(spec, u_adjoint);
  return interferometer_backward(spec, u, u_adjoint);
}

std::vector<double> qr_haar_statistics_probe(std::size_t m, std::size_t draws, Rng& rng) {
  require(m >= 1 && draws >= 1, ErrorCode::invalid_argument,
          "qr_haar_statistics_probe needs m >= 1 and draws >= 1");
  CircuitSpec spec{MeshKind::qr_haar, m, std::vector<double>(2 * m * m),
                   make_input_state(m, 1)};
  std::vector<double> mean(m * m, 0.0);
  for (std::size_t d = 0; d < draws; ++d) {
    for (auto& p : spec.params) p = standard_normal(rng);
    const ComplexMatrix u = compose_mesh(spec);
    for (std::size_t k = 0; k < m * m; ++k) mean[k] += std::norm(u.data()[k]);
  }
  for (auto& v : mean) v /= static_cast<double>(draws);
  return mean;
}

InitStrategy InitStrategy::parse(const std::string& text) {
  if (text == "random") return {Kind::random, 0.0};
  const std::string prefix = "identity";
  require(text.rfind(prefix, 0) == 0, ErrorCode::invalid_argument,
          "unknown init strategy '" + text + "' (expected identity[:eps] or random)");
  InitStrategy s{Kind::identity_perturbed, 0.0};
  if (text.size() > prefix.size()) {
    require(text[prefix.size()] == ':', ErrorCode::invalid_argument,
            "malformed init strategy '" + text + "'");
    const std::string eps = text.substr(prefix.size() + 1);
    auto res = std::from_chars(eps.data(), eps.data() + eps.size(), s.epsilon);
    require(res.ec == std::errc() && res.ptr == eps.data() + eps.size() && s.epsilon >= 0.0,
            ErrorCode::invalid_argument, "init perturbation must be a number >= 0");
  }
  return s;
}

std::vector<double> identity_parameters(MeshKind kind, std::size_t m) {
  const std::size_t count = parameter_count(kind, m);
  std::vector<double> p(count, 0.0);
  if (kind == MeshKind::qr_haar) {
    for (std::size_t i = 0; i < m; ++i) p[i * m + i] = 1.0;
  } else if (kind == MeshKind::three_mzi) {
    std::fill(p.begin(), p.end() - static_cast<std::ptrdiff_t>(m), kHalfPi);
  }
  return p;
}

std::vector<double> initialize_parameters(MeshKind kind, std::size_t m,
                                          const InitStrategy& strategy, Rng& rng) {
  require(strategy.epsilon >= 0.0, ErrorCode::invalid_argument, "epsilon must be >= 0");
  std::vector<double> p = identity_parameters(kind, m);
  if (strategy.kind == InitStrategy::Kind::identity_perturbed) {
    for (auto& v : p) v += uniform(rng, -strategy.epsilon, strategy.epsilon);
    return p;
  }
  if (kind == MeshKind::qr_haar) {
    for (auto& v : p) v = standard_normal(rng);
    return p;
  }
  const std::size_t diag = p.size() - m;
  for (std::size_t k = 0; k < diag; k += 2) {
    p[k] = uniform(rng, 0.0, 2.0 * kPi);
    p[k + 1] = (kind == MeshKind::three_mzi) ? uniform(rng, 0.0, 2.0 * kPi)
                                             : kPi * uniform01(rng);
  }
  for (std::size_t k = diag; k < p.size(); ++k) p[k] = uniform(rng, 0.0, 2.0 * kPi);
  return p;
}

OccupationVector make_input_state(std::size_t m, std::size_t n,
                                  const std::optional<std::vector<std::size_t>>& positions) {
  require(n <= m, ErrorCode::invalid_argument,
          "cannot place " + std::to_string(n) + " photons in " + std::to_string(m) +
              " modes with at most one per mode");
  std::vector<OccupationVector::value_type> counts(m, 0);
  if (!positions) {
    for (std::size_t i = 0; i < n; ++i) counts[i] = 1;
    return OccupationVector(std::move(counts));
  }
  require(positions->size() == n, ErrorCode::invalid_argument,
          "expected " + std::to_string(n) + " input positions, got " +
              std::to_string(positions->size()));
  for (std::size_t pos : *positions) {
    require(pos < m, ErrorCode::invalid_argument,
            "input position " + std::to_string(pos) + " out of range");
    require(counts[pos] == 0, ErrorCode::invalid_argument,
            "duplicate input position " + std::to_string(pos) +
                ": at most one photon per mode");
    counts[pos] = 1;
  }
  return OccupationVector(std::move(counts));
}

std::string serialize_circuit(const CircuitSpec& spec) {
  std::ostringstream out;
  out << "mesh " << mesh_name(spec.mesh) << '\n';
  out << "modes " << spec.m << '\n';
  out << "input " << spec.input_state.to_string() << '\n';
  out << "params";
  for (double v : spec.params) out << ' ' << format_double(v);
  out << '\n';
  return out.str();
}

CircuitSpec parse_circuit(const std::string& text) {
  CircuitSpec spec;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    const std::string where = "circuit line " + std::to_string(lineno) + ": ";
    require(seen.insert(key).second, ErrorCode::parse_error, where + "duplicate key " + key);
    if (key == "mesh") {
      std::string name;
      fields >> name;
      spec.mesh = parse_mesh_kind(name);
    } else if (key == "modes") {
      require(static_cast<bool>(fields >> spec.m), ErrorCode::parse_error,
              where + "bad mode count");
    } else if (key == "input") {
      std::string digits;
      fields >> digits;
      spec.input_state = OccupationVector::from_string(digits);
    } else if (key == "params") {
      std::string tok;
      while (fields >> tok) {
        double v = 0.0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        require(res.ec == std::errc() && res.ptr == tok.data() + tok.size(),
                ErrorCode::parse_error, where + "bad parameter '" + tok + "'");
        spec.params.push_back(v);
      }
    } else {
      fail(ErrorCode::parse_error, where + "unknown key '" + key + "'");
    }
  }
  for (const char* key : {"mesh", "modes", "input", "params"})
    require(seen.count(key) == 1, ErrorCode::parse_error,
            std::string("circuit text lacks '") + key + "' line");
  spec.validate();
  return spec;
}

}  // namespace pmmd
