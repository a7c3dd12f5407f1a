#include <algorithm>
#include <cmath>
#include <string>

#include "fdcert/error.hpp"
#include "fdcert/numerics.hpp"

namespace fdcert {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                         "x" + std::to_string(b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t nr = rows.size();
  const std::size_t nc = nr == 0 ? 0 : rows.front().size();
  Matrix m(nr, nc);
  for (std::size_t i = 0; i < nr; ++i) {
    if (rows[i].size() != nc) throw DimensionError("Matrix::from_rows: ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * nc));
  }
  return m;
}

Matrix Matrix::column(std::span<const double> v) {
  Matrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data_.begin());
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) throw DimensionError("Matrix::block: out of range");
  Matrix b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& m) {
  if (r0 + m.rows() > rows_ || c0 + m.cols() > cols_)
    throw DimensionError("Matrix::set_block: out of range");
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) (*this)(r0 + i, c0 + j) = m(i, j);
}

Vector Matrix::row(std::size_t i) const {
  return Vector(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
}

Vector Matrix::col(std::size_t j) const {
  Vector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out;
  out.reserve(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out.push_back(row(i));
  return out;
}

bool Matrix::is_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Matrix::norm_frobenius() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Matrix::norm_one() const {
  double best = 0.0;
  for (std::size_t j = 0; j < cols_; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) s += std::abs((*this)(i, j));
    best = std::max(best, s);
  }
  return best;
}

double Matrix::max_abs() const {
  double best = 0.0;
  for (double v : data_) best = std::max(best, std::abs(v));
  return best;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o, "operator+");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o, "operator-");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator-(Matrix a) { return a *= -1.0; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("operator*: inner dimensions " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DimensionError("matrix-vector product: dimension mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Matrix hstack(std::initializer_list<Matrix> blocks) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool first = true;
  for (const auto& b : blocks) {
    if (first) {
      rows = b.rows();
      first = false;
    } else if (b.rows() != rows) {
      throw DimensionError("hstack: row count mismatch");
    }
    cols += b.cols();
  }
  Matrix out(rows, cols);
  std::size_t c0 = 0;
  for (const auto& b : blocks) {
    out.set_block(0, c0, b);
    c0 += b.cols();
  }
  return out;
}

Matrix vstack(std::initializer_list<Matrix> blocks) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool first = true;
  for (const auto& b : blocks) {
    if (first) {
      cols = b.cols();
      first = false;
    } else if (b.cols() != cols) {
      throw DimensionError("vstack: column count mismatch");
    }
    rows += b.rows();
  }
  Matrix out(rows, cols);
  std::size_t r0 = 0;
  for (const auto& b : blocks) {
    out.set_block(r0, 0, b);
    r0 += b.rows();
  }
  return out;
}

// ---------------------------------------------------------------------------
// SymMatrix

SymMatrix::SymMatrix(std::size_t n) : m_(n, n) {}

SymMatrix::SymMatrix(const Matrix& m) : m_(m.rows(), m.cols()) {
  if (!m.is_square()) throw DimensionError("SymMatrix: matrix is not square");
  const std::size_t n = m.rows();
  for (std::size_t i = 0; i < n; ++i) {
    m_(i, i) = m(i, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m_(i, j) = v;
      m_(j, i) = v;
    }
  }
}

SymMatrix::SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : SymMatrix(Matrix(rows)) {}

SymMatrix SymMatrix::identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
  return SymMatrix(Matrix::diagonal(d));
}

SymMatrix SymMatrix::scaled_identity(std::size_t n, double s) {
  return SymMatrix(Matrix::identity(n) * s);
}

void SymMatrix::set(std::size_t i, std::size_t j, double v) {
  m_(i, j) = v;
  m_(j, i) = v;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) t += m_(i, i);
  return t;
}

double SymMatrix::norm() const {
  if (dim() == 0) return 0.0;
  const auto eig = sym_eig(*this);
  return std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  m_ += o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  m_ -= o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  m_ *= s;
  return *this;
}

SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

SymMatrix congruence(const Matrix& t, const SymMatrix& s) {
  if (t.cols() != s.dim()) throw DimensionError("congruence: T columns must match S dimension");
  return SymMatrix(t * s.matrix() * t.transpose());
}

SymMatrix block_diag(const SymMatrix& a, const SymMatrix& b) {
  Matrix m(a.dim() + b.dim(), a.dim() + b.dim());
  m.set_block(0, 0, a.matrix());
  m.set_block(a.dim(), a.dim(), b.matrix());
  return SymMatrix(m);
}

SymMatrix principal(const SymMatrix& s, std::span<const std::size_t> idx) {
  SymMatrix out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= s.dim()) throw DimensionError("principal: index out of range");
    for (std::size_t j = i; j < idx.size(); ++j) out.set(i, j, s(idx[i], idx[j]));
  }
  return out;
}

}  // namespace fdcert
