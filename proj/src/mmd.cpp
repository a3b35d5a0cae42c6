#include "pmmd/mmd.hpp"

#include <cmath>
#include <numeric>

#include "pmmd/error.hpp"
#include "pmmd/parallel.hpp"

namespace pmmd {

namespace {

void require_same_length(const OccupationVector& x, const OccupationVector& y) {
  require(x.modes() == y.modes(), ErrorCode::shape_mismatch,
          "kernel arguments differ in length");
}

void require_sigma(double sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::invalid_argument,
          "bandwidth sigma must be a positive finite number");
}

double double_sum(const OutputDistribution& a, const OutputDistribution& b,
                  const Kernel& kernel) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.domain.size(); ++i) {
    if (a.probabilities[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.domain.size(); ++j) {
      if (b.probabilities[j] == 0.0) continue;
      total += a.probabilities[i] * b.probabilities[j] * kernel(a.domain[i], b.domain[j]);
    }
  }
  return total;
}

ComplexMatrix masked_observable(const ComplexMatrix& u, std::span<const std::uint8_t> mask) {
  ComplexMatrix w = u;
  for (std::size_t r = 0; r < u.rows(); ++r)
    if (mask[r])
      for (auto& z : w.row(r)) z = -z;
  return u.adjoint() * w;
}

}  // namespace

double gaussian_kernel(const OccupationVector& x, const OccupationVector& y, double sigma) {
  require_same_length(x, y);
  require_sigma(sigma);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.modes(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    d2 += d * d;
  }
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

double mod2_kernel(const OccupationVector& x, const OccupationVector& y, double sigma) {
  require_same_length(x, y);
  require_sigma(sigma);
  unsigned odd = 0;
  for (std::size_t i = 0; i < x.modes(); ++i) odd += (x[i] + y[i]) & 1u;
  return std::exp(-static_cast<double>(odd) / (2.0 * sigma * sigma));
}

double p_sigma(double sigma) {
  require_sigma(sigma);
  return -0.5 * std::expm1(-1.0 / (2.0 * sigma * sigma));
}

MaskVector sample_mask(std::size_t m, double sigma, Rng& rng) {
  const double p = p_sigma(sigma);
  MaskVector k(m);
  for (auto& bit : k) bit = uniform01(rng) < p ? 1 : 0;
  return k;
}

double mask_probability(std::span<const std::uint8_t> mask, double sigma) {
  const double p = p_sigma(sigma);
  double prob = 1.0;
  for (auto bit : mask) prob *= bit ? p : 1.0 - p;
  return prob;
}

int parity_sign(const OccupationVector& x, std::span<const std::uint8_t> mask) {
  require(x.modes() == mask.size(), ErrorCode::shape_mismatch,
          "mask and occupation vector differ in length");
  unsigned dot = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) dot += mask[i] ? x[i] : 0u;
  return (dot & 1u) ? -1 : 1;
}

double mmd_exact(const OutputDistribution& p, const OutputDistribution& q, const Kernel& kernel) {
  p.validate();
  q.validate();
  return double_sum(p, p, kernel) - 2.0 * double_sum(p, q, kernel) + double_sum(q, q, kernel);
}

double self_kernel_term(const OutputDistribution& q, const Kernel& kernel) {
  q.validate();
  return double_sum(q, q, kernel);
}

double mmd_unbiased_samples(std::span<const OccupationVector> x,
                            std::span<const OccupationVector> y, const Kernel& kernel) {
  require(x.size() >= 2 && y.size() >= 2, ErrorCode::invalid_argument,
          "unbiased MMD needs at least two samples on each side");
  auto within = [&](std::span<const OccupationVector> s) {
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j) total += kernel(s[i], s[j]);
    const double n = static_cast<double>(s.size());
    return 2.0 * total / (n * (n - 1.0));
  };
  double cross = 0.0;
  for (const auto& a : x)
    for (const auto& b : y) cross += kernel(a, b);
  cross /= static_cast<double>(x.size()) * static_cast<double>(y.size());
  return within(x) - 2.0 * cross + within(y);
}

double expectation_wk_exact(const ComplexMatrix& u, const OccupationVector& s,
                            std::span<const std::uint8_t> mask) {
  require(u.square() && u.rows() == s.modes() && mask.size() == s.modes(),
          ErrorCode::shape_mismatch, "expectation_wk_exact: sizes disagree");
  const ComplexMatrix q = masked_observable(u, mask);
  const Complex value = permanent_exact(build_submatrix(q, s, s)) / s.factorial_product();
  require(std::abs(value.imag()) <= 1e-8, ErrorCode::numeric_error,
          "observable expectation has imaginary part " + std::to_string(value.imag()));
  return value.real();
}

double mmd_lo_exact(const ComplexMatrix& u, const OccupationVector& s, double sigma,
                    LoKernelMode mode, std::size_t fock_cap) {
  const std::size_t m = s.modes();
  require(m <= kMaxEnumeratedMaskModes, ErrorCode::cap_exceeded,
          "mask enumeration refused: m = " + std::to_string(m) + " exceeds " +
              std::to_string(kMaxEnumeratedMaskModes));
  require_sigma(sigma);

  std::vector<std::size_t> cf_index;
  OutputDistribution dist;
  if (mode == LoKernelMode::gaussian_collision_free) {
    dist = output_distribution(u, s, fock_cap);
    for (std::size_t i = 0; i < dist.domain.size(); ++i)
      if (dist.domain[i].collision_free()) cf_index.push_back(i);
  }

  MaskVector mask(m);
  double total = 0.0;
  const std::uint64_t count = std::uint64_t{1} << m;
  for (std::uint64_t bits = 0; bits < count; ++bits) {
    for (std::size_t i = 0; i < m; ++i) mask[i] = (bits >> i) & 1u;
    double e = 0.0;
    if (mode == LoKernelMode::mod2) {
      e = expectation_wk_exact(u, s, mask);
    } else {
      for (std::size_t i : cf_index) e += parity_sign(dist.domain[i], mask) * dist.probabilities[i];
    }
    total += mask_probability(mask, sigma) * e * e;
  }
  return total;
}

void MMDConfig::validate() const {
  require_sigma(sigma);
  require(mask_batch >= 1, ErrorCode::invalid_argument, "mask batch |K| must be >= 1");
  require(glynn_batch >= 2, ErrorCode::invalid_argument, "sign batch |Z| must be >= 2");
  require(data_batch >= 2, ErrorCode::invalid_argument, "data batch |X| must be >= 2");
}

void EstimatorBatches::validate(std::size_t m, std::size_t n) const {
  require(masks.size() >= 1, ErrorCode::invalid_argument, "estimator needs |K| >= 1");
  require(signs.size() >= 2, ErrorCode::invalid_argument, "estimator needs |Z| >= 2");
  require(data.size() >= 2, ErrorCode::invalid_argument, "estimator needs |X| >= 2");
  for (const auto& k : masks)
    require(k.size() == m, ErrorCode::shape_mismatch, "mask length differs from m");
  for (const auto& z : signs) {
    require(z.size() == n, ErrorCode::shape_mismatch, "sign vector length differs from n");
    for (auto v : z)
      require(v == 1 || v == -1, ErrorCode::invalid_argument, "sign vector entry not +-1");
  }
  for (const auto& x : data)
    require(x.modes() == m, ErrorCode::shape_mismatch, "data record length differs from m");
}

EstimatorBatches draw_estimator_batches(std::span<const OccupationVector> pool, std::size_t m,
                                        std::size_t n, const MMDConfig& config,
                                        std::uint64_t seed, std::uint64_t index) {
  config.validate();
  EstimatorBatches b;
  Rng mask_rng = substream(seed, Stream::masks, index);
  b.masks.reserve(config.mask_batch);
  for (std::size_t i = 0; i < config.mask_batch; ++i)
    b.masks.push_back(sample_mask(m, config.sigma, mask_rng));
  Rng sign_rng = substream(seed, Stream::signs, index);
  b.signs.reserve(config.glynn_batch);
  for (std::size_t j = 0; j < config.glynn_batch; ++j) b.signs.push_back(random_signs(n, sign_rng));
  if (!pool.empty()) {
    require(pool.size() >= config.data_batch, ErrorCode::invalid_argument,
            "data batch |X| = " + std::to_string(config.data_batch) +
                " exceeds the dataset size " + std::to_string(pool.size()));
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng data_rng = substream(seed, Stream::data, index);
    for (std::size_t i = 0; i < config.data_batch; ++i) {
      const std::size_t j = i + uniform_index(data_rng, idx.size() - i);
      std::swap(idx[i], idx[j]);
      b.data.push_back(pool[idx[i]]);
    }
  }
  return b;
}

EstimatorTerms estimate_from_unitary(const ComplexMatrix& u, const OccupationVector& input,
                                     const EstimatorBatches& batches, ComplexMatrix* u_adjoint) {
  const std::size_t m = u.rows();
  require(u.square() && input.modes() == m, ErrorCode::shape_mismatch,
          "estimator: unitary and input state disagree on m");
  const std::vector<std::size_t> cols = input.photon_modes();
  const std::size_t n = cols.size();
  require(n >= 1, ErrorCode::invalid_argument, "estimator needs at least one photon");
  batches.validate(m, n);

  const std::size_t nk = batches.masks.size();
  const std::size_t nz = batches.signs.size();
  const std::size_t nx = batches.data.size();
  const double dk = static_cast<double>(nk);
  const double dz = static_cast<double>(nz);
  const double dx = static_cast<double>(nx);

  // Photon columns of U and their Gram matrix.
  std::vector<Complex> uc(m * n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t a = 0; a < n; ++a) uc[r * n + a] = u(r, cols[a]);
  std::vector<Complex> gram(n * n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        gram[a * n + b] += std::conj(uc[r * n + a]) * uc[r * n + b];

  const double norm = 1.0 / input.factorial_product();
  std::vector<double> zs(nz * n);
  std::vector<double> zprod(nz);
  for (std::size_t j = 0; j < nz; ++j) {
    int sign = 1;
    for (std::size_t b = 0; b < n; ++b) {
      zs[j * n + b] = batches.signs[j][b];
      sign *= batches.signs[j][b];
    }
    zprod[j] = sign * norm;
  }

  // Modes with an odd count in each data record.
  std::vector<std::vector<std::size_t>> odd_modes(nx);
  for (std::size_t l = 0; l < nx; ++l)
    for (std::size_t r = 0; r < m; ++r)
      if (batches.data[l][r] & 1u) odd_modes[l].push_back(r);

  std::vector<std::vector<std::size_t>> flips(nk);
  for (std::size_t i = 0; i < nk; ++i)
    for (std::size_t r = 0; r < m; ++r)
      if (batches.masks[i][r]) flips[i].push_back(r);

  const bool want_grad = u_adjoint != nullptr;
  std::vector<double> sum_f(nk), sum_f2(nk), parity_sum(nk);
  std::vector<Complex> h_mats(want_grad ? nk * n * n : 0);

  const double c1 = 1.0 / (dk * dz * (dz - 1.0));
  const double c2 = 2.0 / (dk * dz * dx);

  parallel_for(nk, [&](std::size_t begin, std::size_t end) {
    std::vector<Complex> a(n * n), y(n), prefix(n + 1), suffix(n + 1), a_adj(n * n);
    std::vector<double> f(nz);
    for (std::size_t i = begin; i < end; ++i) {
      const auto& mask = batches.masks[i];
      // A = (U^dag W^k U)^{s,s} = Gram - 2 sum_{flipped r} conj(u_r) u_r^T
      a = gram;
      for (std::size_t r : flips[i])
        for (std::size_t p = 0; p < n; ++p) {
          const Complex cr = 2.0 * std::conj(uc[r * n + p]);
          for (std::size_t q = 0; q < n; ++q) a[p * n + q] -= cr * uc[r * n + q];
        }

      double s1 = 0.0, s2 = 0.0;
      for (std::size_t j = 0; j < nz; ++j) {
        const double* z = &zs[j * n];
        Complex prod = 1.0;
        for (std::size_t p = 0; p < n; ++p) {
          Complex dot{};
          for (std::size_t q = 0; q < n; ++q) dot += a[p * n + q] * z[q];
          prod *= dot;
        }
        const double value = zprod[j] * prod.real();
        f[j] = value;
        s1 += value;
        s2 += value * value;
      }
      double c = 0.0;
      for (std::size_t l = 0; l < nx; ++l) {
        unsigned dot = 0;
        for (std::size_t r : odd_modes[l]) dot += mask[r];
        c += (dot & 1u) ? -1.0 : 1.0;
      }
      sum_f[i] = s1;
      sum_f2[i] = s2;
      parity_sum[i] = c;
      if (!want_grad) continue;

      // dL/df_ij, then the adjoint of A through Re Gly.
      std::fill(a_adj.begin(), a_adj.end(), Complex{});
      for (std::size_t j = 0; j < nz; ++j) {
        const double w = c1 * 2.0 * (s1 - f[j]) - c2 * c;
        if (w == 0.0) continue;
        const double* z = &zs[j * n];
        for (std::size_t p = 0; p < n; ++p) {
          Complex dot{};
          for (std::size_t q = 0; q < n; ++q) dot += a[p * n + q] * z[q];
          y[p] = dot;
        }
        prefix[0] = 1.0;
        for (std::size_t p = 0; p < n; ++p) prefix[p + 1] = prefix[p] * y[p];
        suffix[n] = 1.0;
        for (std::size_t p = n; p-- > 0;) suffix[p] = suffix[p + 1] * y[p];
        const double scale = w * zprod[j];
        for (std::size_t p = 0; p < n; ++p) {
          const Complex e = scale * std::conj(prefix[p] * suffix[p + 1]);
          for (std::size_t q = 0; q < n; ++q) a_adj[p * n + q] += e * z[q];
        }
      }
      Complex* h = &h_mats[i * n * n];
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q)
          h[p * n + q] = std::conj(a_adj[p * n + q]) + a_adj[q * n + p];
    }
  });

  EstimatorTerms terms;
  for (std::size_t i = 0; i < nk; ++i) {
    terms.model_model += sum_f[i] * sum_f[i] - sum_f2[i];
    terms.cross += sum_f[i] * parity_sum[i];
    terms.data_data += parity_sum[i] * parity_sum[i] - dx;
  }
  terms.model_model *= c1;
  terms.cross *= c2;
  terms.data_data /= dk * dx * (dx - 1.0);

  if (want_grad) {
    // dL/dU_{r,c_a} = sum_b (sum_i w^i_r H^i)_{ab} U_{r,c_b} with w^i_r = 1 - 2 k^i_r.
    const std::size_t nn = n * n;
    std::vector<Complex> h_total(nn);
    std::vector<Complex> h_flip(m * nn);
    for (std::size_t i = 0; i < nk; ++i) {
      const Complex* h = &h_mats[i * nn];
      for (std::size_t e = 0; e < nn; ++e) h_total[e] += h[e];
      for (std::size_t r : flips[i])
        for (std::size_t e = 0; e < nn; ++e) h_flip[r * nn + e] += h[e];
    }
    *u_adjoint = ComplexMatrix(m, m);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t p = 0; p < n; ++p) {
        Complex acc{};
        for (std::size_t q = 0; q < n; ++q)
          acc += (h_total[p * n + q] - 2.0 * h_flip[r * nn + p * n + q]) * uc[r * n + q];
        (*u_adjoint)(r, cols[p]) += acc;
      }
  }
  return terms;
}

EstimatorTerms mmd_hat_terms(const EstimatorBatches& batches, const CircuitSpec& spec) {
  return estimate_from_unitary(compose_mesh(spec), spec.input_state, batches);
}

double mmd_hat_figure1(const EstimatorBatches& batches, const CircuitSpec& spec) {
  return mmd_hat_terms(batches, spec).loss();
}

}  // namespace pmmd
