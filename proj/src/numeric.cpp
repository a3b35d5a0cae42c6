#include "pmmd/numeric.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "pmmd/error.hpp"

namespace pmmd {

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, ErrorCode::shape_mismatch,
          "matrix data size does not match its shape");
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, ErrorCode::shape_mismatch, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

bool ComplexMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const Complex& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  require(a.cols() == b.rows(), ErrorCode::shape_mismatch, "matrix product shape mismatch");
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::shape_mismatch,
          "matrix difference shape mismatch");
  ComplexMatrix out = a;
  auto d = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= bd[i];
  return out;
}

double frobenius_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (const auto& z : a.data()) s += std::norm(z);
  return std::sqrt(s);
}

double unitarity_defect(const ComplexMatrix& u) {
  return frobenius_norm(u.adjoint() * u - ComplexMatrix::identity(u.cols()));
}

ComplexMatrix random_complex_matrix(std::size_t n, Rng& rng, double radius) {
  // Uniform in the disk of the given radius.
  ComplexMatrix a(n, n);
  for (auto& z : a.data()) {
    const double r = radius * std::sqrt(uniform01(rng));
    const double phi = uniform(rng, 0.0, 2.0 * M_PI);
    z = std::polar(r, phi);
  }
  return a;
}

OccupationVector OccupationVector::from_string(const std::string& digits) {
  std::vector<value_type> counts;
  counts.reserve(digits.size());
  for (char ch : digits) {
    require(ch >= '0' && ch <= '9', ErrorCode::parse_error,
            std::string("invalid occupation digit '") + ch + "'");
    counts.push_back(static_cast<value_type>(ch - '0'));
  }
  return OccupationVector(std::move(counts));
}

unsigned OccupationVector::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), 0u);
}

bool OccupationVector::collision_free() const noexcept {
  return std::all_of(counts_.begin(), counts_.end(), [](value_type c) { return c <= 1; });
}

std::vector<std::size_t> OccupationVector::photon_modes() const {
  std::vector<std::size_t> modes;
  for (std::size_t i = 0; i < counts_.size(); ++i)
    for (value_type k = 0; k < counts_[i]; ++k) modes.push_back(i);
  return modes;
}

double OccupationVector::factorial_product() const {
  double p = 1.0;
  for (value_type c : counts_)
    for (value_type k = 2; k <= c; ++k) p *= k;
  return p;
}

std::string OccupationVector::to_string() const {
  std::string s;
  s.reserve(counts_.size());
  for (value_type c : counts_) {
    require(c <= 9, ErrorCode::invalid_argument,
            "occupation above 9 has no single-digit encoding");
    s.push_back(static_cast<char>('0' + c));
  }
  return s;
}

SignVector random_signs(std::size_t n, Rng& rng) {
  SignVector x(n);
  for (auto& v : x) v = coin(rng) ? 1 : -1;
  return x;
}

Complex permanent_exact(const ComplexMatrix& a, std::size_t cap) {
  require(a.square(), ErrorCode::shape_mismatch, "permanent needs a square matrix");
  const std::size_t n = a.rows();
  require(n <= cap, ErrorCode::cap_exceeded,
          "exact permanent refused: dimension " + std::to_string(n) + " exceeds cap " +
              std::to_string(cap));
  if (n == 0) return 1.0;

  std::vector<Complex> row_sums(n);
  Complex total{};
  std::uint64_t subset = 0;
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < count; ++k) {
    const int j = std::countr_zero(k);
    const std::uint64_t bit = std::uint64_t{1} << j;
    subset ^= bit;
    const bool added = (subset & bit) != 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (added)
        row_sums[i] += a(i, j);
      else
        row_sums[i] -= a(i, j);
    }
    Complex prod = 1.0;
    for (const auto& s : row_sums) prod *= s;
    if (std::popcount(subset) % 2 == 0)
      total += prod;
    else
      total -= prod;
  }
  return (n % 2 == 0) ? total : -total;
}

Complex permanent_naive(const ComplexMatrix& a) {
  require(a.square(), ErrorCode::shape_mismatch, "permanent needs a square matrix");
  const std::size_t n = a.rows();
  require(n <= 10, ErrorCode::cap_exceeded, "naive permanent refused above n = 10");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Complex total{};
  do {
    Complex prod = 1.0;
    for (std::size_t i = 0; i < n; ++i) prod *= a(i, perm[i]);
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

Complex glynn_sample(const ComplexMatrix& a, std::span<const std::int8_t> x) {
  require(a.square() && x.size() == a.rows(), ErrorCode::shape_mismatch,
          "glynn_sample needs an n x n matrix and a length-n sign vector");
  int sign = 1;
  for (auto v : x) sign *= v;
  Complex prod = static_cast<double>(sign);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Complex dot{};
    const auto r = a.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) dot += r[j] * static_cast<double>(x[j]);
    prod *= dot;
  }
  return prod;
}

Complex glynn_exhaustive_mean(const ComplexMatrix& a) {
  require(a.square(), ErrorCode::shape_mismatch, "glynn mean needs a square matrix");
  const std::size_t n = a.rows();
  require(n <= 20, ErrorCode::cap_exceeded, "exhaustive Glynn mean refused above n = 20");
  const std::uint64_t count = std::uint64_t{1} << n;
  SignVector x(n);
  Complex total{};
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (std::size_t i = 0; i < n; ++i) x[i] = ((mask >> i) & 1u) ? -1 : 1;
    total += glynn_sample(a, x);
  }
  return total / static_cast<double>(count);
}

McEstimate gurvits_permanent_mc(const ComplexMatrix& a, std::size_t samples, Rng& rng) {
  require(a.square(), ErrorCode::shape_mismatch, "permanent needs a square matrix");
  require(samples >= 2, ErrorCode::invalid_argument,
          "gurvits_permanent_mc needs at least 2 samples");
  std::vector<Complex> draws(samples);
  for (auto& d : draws) {
    const SignVector x = random_signs(a.rows(), rng);
    d = glynn_sample(a, x);
  }
  Complex mean{};
  for (const auto& d : draws) mean += d;
  mean /= static_cast<double>(samples);
  double ss = 0.0;
  for (const auto& d : draws) ss += std::norm(d - mean);
  const double var = ss / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

ComplexMatrix build_submatrix(const ComplexMatrix& q, const OccupationVector& s_in,
                              const OccupationVector& s_out) {
  require(q.square() && s_in.modes() == q.rows() && s_out.modes() == q.rows(),
          ErrorCode::shape_mismatch, "build_submatrix: vectors must have one entry per mode");
  require(s_in.total() == s_out.total(), ErrorCode::shape_mismatch,
          "build_submatrix: input and output photon numbers differ");
  const auto rows = s_out.photon_modes();
  const auto cols = s_in.photon_modes();
  ComplexMatrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = q(rows[i], cols[j]);
  return out;
}

namespace {

void enumerate_into(std::size_t mode, std::size_t remaining, bool collision_free,
                    std::vector<OccupationVector::value_type>& current,
                    std::vector<OccupationVector>& out) {
  const std::size_t m = current.size();
  if (mode + 1 == m) {
    if (collision_free && remaining > 1) return;
    current[mode] = static_cast<OccupationVector::value_type>(remaining);
    out.emplace_back(current);
    current[mode] = 0;
    return;
  }
  const std::size_t top = collision_free ? std::min<std::size_t>(remaining, 1) : remaining;
  for (std::size_t c = top + 1; c-- > 0;) {
    current[mode] = static_cast<OccupationVector::value_type>(c);
    enumerate_into(mode + 1, remaining - c, collision_free, current, out);
  }
  current[mode] = 0;
}

}  // namespace

std::vector<OccupationVector> enumerate_fock_space(std::size_t m, std::size_t n,
                                                   bool collision_free) {
  require(m >= 1, ErrorCode::invalid_argument, "enumerate_fock_space needs m >= 1");
  std::vector<OccupationVector> out;
  if (collision_free && n > m) return out;
  std::vector<OccupationVector::value_type> current(m, 0);
  enumerate_into(0, n, collision_free, current, out);
  return out;
}

std::size_t fock_space_size(std::size_t m, std::size_t n, bool collision_free) {
  std::size_t top = collision_free ? m : m + n - 1;
  std::size_t k = n;
  if (k > top) return 0;
  k = std::min(k, top - k);
  // Exact binomial with overflow saturation.
  long double acc = 1.0L;
  for (std::size_t i = 1; i <= k; ++i) {
    acc = acc * static_cast<long double>(top - k + i) / static_cast<long double>(i);
    if (acc > static_cast<long double>(std::numeric_limits<std::size_t>::max() / 2))
      return std::numeric_limits<std::size_t>::max();
  }
  return static_cast<std::size_t>(std::llround(acc));
}

}  // namespace pmmd
