#pragma once

// Dense real linear algebra for desk-scale problems (dimensions up to a few
// dozen). Everything here is a pure function of its inputs.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace fdcert {

using Vector = std::vector<double>;

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  /// n x 1 matrix holding `v`.
  static Matrix column(std::span<const double> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& m);
  Vector row(std::size_t i) const;
  Vector col(std::size_t j) const;
  std::vector<std::vector<double>> to_rows() const;

  bool is_finite() const;
  double norm_frobenius() const;
  double norm_one() const;
  double max_abs() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator-(Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Vector operator*(const Matrix& a, std::span<const double> x);

/// [a b ...] side by side; all blocks need equal row counts.
Matrix hstack(std::initializer_list<Matrix> blocks);
/// Blocks stacked top to bottom; all blocks need equal column counts.
Matrix vstack(std::initializer_list<Matrix> blocks);

/// Symmetric matrix. Symmetry holds by construction: building one from a
/// general matrix averages it with its transpose.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n);
  explicit SymMatrix(const Matrix& m);
  SymMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(std::span<const double> d);
  static SymMatrix scaled_identity(std::size_t n, double s);

  std::size_t dim() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  void set(std::size_t i, std::size_t j, double v);
  const Matrix& matrix() const noexcept { return m_; }

  double trace() const;
  bool is_finite() const { return m_.is_finite(); }
  /// Spectral norm (largest absolute eigenvalue).
  double norm() const;

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) = default;

 private:
  Matrix m_;
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator-(SymMatrix a, const SymMatrix& b);
SymMatrix operator*(SymMatrix a, double s);
SymMatrix operator*(double s, SymMatrix a);

/// T * S * T^T.
SymMatrix congruence(const Matrix& t, const SymMatrix& s);
SymMatrix block_diag(const SymMatrix& a, const SymMatrix& b);
/// Principal submatrix on the given indices, in the given order.
SymMatrix principal(const SymMatrix& s, std::span<const std::size_t> idx);

/// Absolute-plus-relative slack: abs + rel * scale.
struct Tolerance {
  double abs = 1e-9;
  double rel = 1e-9;
  double at(double scale) const { return abs + rel * scale; }
};

struct CholeskyResult {
  bool psd = false;
  /// Lower-triangular L with L L^T = M + tol I (present iff psd).
  std::optional<Matrix> factor;
};

/// Cholesky of M + tol*I with pivot threshold -tol. Zero pivots are accepted
/// when the rest of their column vanishes, so singular PSD matrices pass.
CholeskyResult cholesky_psd(const SymMatrix& m, double tol);

struct SymEig {
  Vector values;   // ascending
  Matrix vectors;  // column k pairs with values[k]
};

/// Cyclic Jacobi eigensolver.
SymEig sym_eig(const SymMatrix& m);
double lambda_min(const SymMatrix& m);
double lambda_max(const SymMatrix& m);

/// Solves M X = B for positive definite M; throws SingularityError otherwise.
Matrix solve_spd(const SymMatrix& m, const Matrix& b);
SymMatrix inverse(const SymMatrix& m);

/// LU with partial pivoting; throws SingularityError on a zero pivot.
Matrix solve(const Matrix& a, const Matrix& b);
Matrix inverse_general(const Matrix& a);

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
Matrix mat_exp(const Matrix& m);

/// All eigenvalues of a general real matrix (Hessenberg + shifted QR).
std::vector<std::complex<double>> eigenvalues(const Matrix& m);
double spectral_radius(const Matrix& m);

/// Symmetric square root of a PSD matrix; tiny negative eigenvalues clamp to 0.
SymMatrix sqrt_psd(const SymMatrix& m);
/// Moore-Penrose pseudo-inverse; eigenvalues below rel_tol * max are dropped.
SymMatrix pseudo_inverse(const SymMatrix& m, double rel_tol = 1e-12);
double log_det_spd(const SymMatrix& m);
std::size_t rank(const Matrix& m, double rel_tol = 1e-10);

/// Solves X = A^T X A + Q for Schur-stable A (doubling iteration).
SymMatrix discrete_lyapunov(const Matrix& a, const SymMatrix& q);

}  // namespace fdcert
