#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "pmmd/random.hpp"

namespace pmmd {

using Complex = std::complex<double>;

// Dense row-major complex matrix.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> data);
  ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows);

  static ComplexMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<Complex> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Complex> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<const Complex> data() const noexcept { return data_; }
  std::span<Complex> data() noexcept { return data_; }

  ComplexMatrix adjoint() const;
  bool all_finite() const;

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
  friend ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b);
  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

double frobenius_norm(const ComplexMatrix& a);

// ||U^dagger U - I||_F
double unitarity_defect(const ComplexMatrix& u);

ComplexMatrix random_complex_matrix(std::size_t n, Rng& rng, double radius = 1.0);

// Per-mode photon counts. Doubles as a data bitstring when every count is 0/1.
class OccupationVector {
 public:
  using value_type = std::uint16_t;

  OccupationVector() = default;
  explicit OccupationVector(std::vector<value_type> counts) : counts_(std::move(counts)) {}
  OccupationVector(std::initializer_list<value_type> counts) : counts_(counts) {}

  // Parses a digit string such as "0110".
  static OccupationVector from_string(const std::string& digits);

  std::size_t modes() const noexcept { return counts_.size(); }
  unsigned total() const noexcept;
  bool collision_free() const noexcept;

  value_type operator[](std::size_t i) const { return counts_[i]; }
  value_type& operator[](std::size_t i) { return counts_[i]; }
  std::span<const value_type> counts() const noexcept { return counts_; }

  // Occupied modes, each listed once per photon, ascending.
  std::vector<std::size_t> photon_modes() const;

  // prod_i s_i!
  double factorial_product() const;

  std::string to_string() const;

  friend bool operator==(const OccupationVector&, const OccupationVector&) = default;
  friend auto operator<=>(const OccupationVector&, const OccupationVector&) = default;

 private:
  std::vector<value_type> counts_;
};

using SignVector = std::vector<std::int8_t>;

SignVector random_signs(std::size_t n, Rng& rng);

inline constexpr std::size_t kDefaultPermanentCap = 14;

// Ryser's formula with Gray-code subset ordering, O(2^n n).
Complex permanent_exact(const ComplexMatrix& a, std::size_t cap = kDefaultPermanentCap);

// Sum over all n! permutations; a cross-check for permanent_exact only.
Complex permanent_naive(const ComplexMatrix& a);

// x_1...x_n prod_i (a_i . x)
Complex glynn_sample(const ComplexMatrix& a, std::span<const std::int8_t> x);

// Mean of glynn_sample over all 2^n sign vectors (equals Perm(a)).
Complex glynn_exhaustive_mean(const ComplexMatrix& a);

struct McEstimate {
  Complex estimate;
  double std_error = 0.0;
};

McEstimate gurvits_permanent_mc(const ComplexMatrix& a, std::size_t samples, Rng& rng);

// Repeats row i of q s_out[i] times, then column j of the result s_in[j] times.
ComplexMatrix build_submatrix(const ComplexMatrix& q, const OccupationVector& s_in,
                              const OccupationVector& s_out);

// All occupation vectors of n photons in m modes, first mode most occupied first.
std::vector<OccupationVector> enumerate_fock_space(std::size_t m, std::size_t n,
                                                   bool collision_free);

// C(m+n-1, n), or C(m, n) when collision_free; saturates at SIZE_MAX.
std::size_t fock_space_size(std::size_t m, std::size_t n, bool collision_free);

}  // namespace pmmd
