#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fdcert/error.hpp"
#include "fdcert/numerics.hpp"

namespace fdcert {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double max_diag(const SymMatrix& m) {
  double d = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i) d = std::max(d, std::abs(m(i, i)));
  return d;
}

}  // namespace

CholeskyResult cholesky_psd(const SymMatrix& m, double tol) {
  if (!m.is_finite()) throw InputError("cholesky_psd: non-finite entry");
  const std::size_t n = m.dim();
  const double scale = std::max(max_diag(m), 1e-300);
  const double zero_pivot = 64.0 * kEps * (scale + std::abs(tol));
  const double zero_col = std::sqrt(zero_pivot * (scale + std::abs(tol)));
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j) + tol;
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d < -tol - zero_pivot) return {};
    if (d > zero_pivot) {
      const double ljj = std::sqrt(d);
      l(j, j) = ljj;
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = m(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        l(i, j) = s / ljj;
      }
    } else {
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = m(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        if (std::abs(s) > zero_col) return {};
      }
    }
  }
  return {true, std::move(l)};
}

SymEig sym_eig(const SymMatrix& sm) {
  if (!sm.is_finite()) throw InputError("sym_eig: non-finite entry");
  const std::size_t n = sm.dim();
  Matrix a = sm.matrix();
  Matrix v = Matrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::abs(a(p, q));
    if (off == 0.0) break;
    const double thresh = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + g == std::abs(a(q, q))) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        if (std::abs(apq) <= thresh || apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymEig out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

double lambda_min(const SymMatrix& m) {
  if (m.dim() == 0) throw DimensionError("lambda_min: empty matrix");
  return sym_eig(m).values.front();
}

double lambda_max(const SymMatrix& m) {
  if (m.dim() == 0) throw DimensionError("lambda_max: empty matrix");
  return sym_eig(m).values.back();
}

namespace {

Matrix strict_cholesky(const SymMatrix& m) {
  const std::size_t n = m.dim();
  if (!m.is_finite()) throw InputError("cholesky: non-finite entry");
  const double floor = kEps * std::max(max_diag(m), 1e-300);
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > floor)) throw SingularityError("matrix is not positive definite");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

}  // namespace

Matrix solve_spd(const SymMatrix& m, const Matrix& b) {
  const std::size_t n = m.dim();
  if (b.rows() != n) throw DimensionError("solve_spd: right-hand side has wrong row count");
  const Matrix l = strict_cholesky(m);
  Matrix x = b;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
      x(ii, c) = s / l(ii, ii);
    }
  }
  return x;
}

SymMatrix inverse(const SymMatrix& m) {
  return SymMatrix(solve_spd(m, Matrix::identity(m.dim())));
}

Matrix solve(const Matrix& a, const Matrix& b) {
  if (!a.is_square()) throw DimensionError("solve: matrix is not square");
  const std::size_t n = a.rows();
  if (b.rows() != n) throw DimensionError("solve: right-hand side has wrong row count");
  if (!a.is_finite() || !b.is_finite()) throw InputError("solve: non-finite entry");
  Matrix lu = a;
  Matrix x = b;
  const double scale = std::max(a.max_abs(), 1e-300);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (std::abs(lu(piv, k)) <= kEps * scale * static_cast<double>(n))
      throw SingularityError("solve: matrix is singular");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      if (f == 0.0) continue;
      lu(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= lu(ii, k) * x(k, c);
      x(ii, c) = s / lu(ii, ii);
    }
  }
  return x;
}

Matrix inverse_general(const Matrix& a) { return solve(a, Matrix::identity(a.rows())); }

Matrix mat_exp(const Matrix& m) {
  if (!m.is_square()) throw DimensionError("mat_exp: matrix is not square");
  if (!m.is_finite()) throw InputError("mat_exp: non-finite entry");
  const std::size_t n = m.rows();
  const Matrix eye = Matrix::identity(n);
  if (m.max_abs() == 0.0) return eye;

  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  int s = 0;
  const double norm = m.norm_one();
  if (norm > theta13) s = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
  const Matrix a = m * std::ldexp(1.0, -s);

  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                         b[3] * a2 + b[1] * eye;
  const Matrix u = a * u_inner;
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                   b[2] * a2 + b[0] * eye;
  Matrix r = solve(v - u, v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  if (!r.is_finite()) throw RangeError("mat_exp: result overflows double precision");
  return r;
}

namespace {

// Balancing, reduction to upper Hessenberg by stabilized elementary
// similarity transforms, then Francis double-shift QR. 1-based indexing.
class Hqr {
 public:
  explicit Hqr(const Matrix& m) : n_(m.rows()), a_((n_ + 1) * (n_ + 1), 0.0) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) at(i + 1, j + 1) = m(i, j);
  }

  std::vector<std::complex<double>> run() {
    balance();
    hessenberg();
    return qr();
  }

 private:
  double& at(std::size_t i, std::size_t j) { return a_[i * (n_ + 1) + j]; }

  void balance() {
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    bool done = false;
    while (!done) {
      done = true;
      for (std::size_t i = 1; i <= n_; ++i) {
        double r = 0.0;
        double c = 0.0;
        for (std::size_t j = 1; j <= n_; ++j) {
          if (j == i) continue;
          c += std::abs(at(j, i));
          r += std::abs(at(i, j));
        }
        if (c == 0.0 || r == 0.0) continue;
        double g = r / radix;
        double f = 1.0;
        const double s = c + r;
        while (c < g) {
          f *= radix;
          c *= sqrdx;
        }
        g = r * radix;
        while (c > g) {
          f /= radix;
          c /= sqrdx;
        }
        if ((c + r) / f < 0.95 * s) {
          done = false;
          g = 1.0 / f;
          for (std::size_t j = 1; j <= n_; ++j) at(i, j) *= g;
          for (std::size_t j = 1; j <= n_; ++j) at(j, i) *= f;
        }
      }
    }
  }

  void hessenberg() {
    for (std::size_t m = 2; m < n_; ++m) {
      double x = 0.0;
      std::size_t i = m;
      for (std::size_t j = m; j <= n_; ++j) {
        if (std::abs(at(j, m - 1)) > std::abs(x)) {
          x = at(j, m - 1);
          i = j;
        }
      }
      if (i != m) {
        for (std::size_t j = m - 1; j <= n_; ++j) std::swap(at(i, j), at(m, j));
        for (std::size_t j = 1; j <= n_; ++j) std::swap(at(j, i), at(j, m));
      }
      if (x != 0.0) {
        for (i = m + 1; i <= n_; ++i) {
          double y = at(i, m - 1);
          if (y == 0.0) continue;
          y /= x;
          at(i, m - 1) = y;
          for (std::size_t j = m; j <= n_; ++j) at(i, j) -= y * at(m, j);
          for (std::size_t j = 1; j <= n_; ++j) at(j, m) += y * at(j, i);
        }
      }
    }
    for (std::size_t i = 3; i <= n_; ++i)
      for (std::size_t j = 1; j + 1 < i; ++j) at(i, j) = 0.0;
  }

  std::vector<std::complex<double>> qr() {
    std::vector<double> wr(n_ + 1, 0.0);
    std::vector<double> wi(n_ + 1, 0.0);
    double anorm = 0.0;
    for (std::size_t i = 1; i <= n_; ++i)
      for (std::size_t j = std::max<std::size_t>(i - 1, 1); j <= n_; ++j) anorm += std::abs(at(i, j));

    std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n_);
    double t = 0.0;
    double p = 0.0, q = 0.0, r = 0.0, s = 0.0, w = 0.0, x = 0.0, y = 0.0, z = 0.0;
    auto A = [this](std::ptrdiff_t i, std::ptrdiff_t j) -> double& {
      return at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    };
    while (nn >= 1) {
      int its = 0;
      std::ptrdiff_t l = 0;
      do {
        for (l = nn; l >= 2; --l) {
          s = std::abs(A(l - 1, l - 1)) + std::abs(A(l, l));
          if (s == 0.0) s = anorm;
          if (std::abs(A(l, l - 1)) + s == s) {
            A(l, l - 1) = 0.0;
            break;
          }
        }
        x = A(nn, nn);
        if (l == nn) {
          wr[static_cast<std::size_t>(nn)] = x + t;
          wi[static_cast<std::size_t>(nn)] = 0.0;
          --nn;
        } else {
          y = A(nn - 1, nn - 1);
          w = A(nn, nn - 1) * A(nn - 1, nn);
          if (l == nn - 1) {
            p = 0.5 * (y - x);
            q = p * p + w;
            z = std::sqrt(std::abs(q));
            x += t;
            const auto k1 = static_cast<std::size_t>(nn - 1);
            const auto k2 = static_cast<std::size_t>(nn);
            if (q >= 0.0) {
              z = p + std::copysign(z, p);
              wr[k1] = wr[k2] = x + z;
              if (z != 0.0) wr[k2] = x - w / z;
              wi[k1] = wi[k2] = 0.0;
            } else {
              wr[k1] = wr[k2] = x + p;
              wi[k2] = z;
              wi[k1] = -z;
            }
            nn -= 2;
          } else {
            if (its == 60) throw SingularityError("eigenvalues: QR iteration did not converge");
            if (its == 10 || its == 20 || its == 40) {
              t += x;
              for (std::ptrdiff_t i = 1; i <= nn; ++i) A(i, i) -= x;
              s = std::abs(A(nn, nn - 1)) + std::abs(A(nn - 1, nn - 2));
              y = x = 0.75 * s;
              w = -0.4375 * s * s;
            }
            ++its;
            std::ptrdiff_t m = nn - 2;
            for (; m >= l; --m) {
              z = A(m, m);
              r = x - z;
              s = y - z;
              p = (r * s - w) / A(m + 1, m) + A(m, m + 1);
              q = A(m + 1, m + 1) - z - r - s;
              r = A(m + 2, m + 1);
              s = std::abs(p) + std::abs(q) + std::abs(r);
              p /= s;
              q /= s;
              r /= s;
              if (m == l) break;
              const double u = std::abs(A(m, m - 1)) * (std::abs(q) + std::abs(r));
              const double v = std::abs(p) * (std::abs(A(m - 1, m - 1)) + std::abs(z) +
                                              std::abs(A(m + 1, m + 1)));
              if (u + v == v) break;
            }
            for (std::ptrdiff_t i = m + 2; i <= nn; ++i) {
              A(i, i - 2) = 0.0;
              if (i != m + 2) A(i, i - 3) = 0.0;
            }
            for (std::ptrdiff_t k = m; k <= nn - 1; ++k) {
              if (k != m) {
                p = A(k, k - 1);
                q = A(k + 1, k - 1);
                r = 0.0;
                if (k != nn - 1) r = A(k + 2, k - 1);
                if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                  p /= x;
                  q /= x;
                  r /= x;
                }
              }
              if ((s = std::copysign(std::sqrt(p * p + q * q + r * r), p)) != 0.0) {
                if (k == m) {
                  if (l != m) A(k, k - 1) = -A(k, k - 1);
                } else {
                  A(k, k - 1) = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;
                for (std::ptrdiff_t j = k; j <= nn; ++j) {
                  p = A(k, j) + q * A(k + 1, j);
                  if (k != nn - 1) {
                    p += r * A(k + 2, j);
                    A(k + 2, j) -= p * z;
                  }
                  A(k + 1, j) -= p * y;
                  A(k, j) -= p * x;
                }
                const std::ptrdiff_t mmin = nn < k + 3 ? nn : k + 3;
                for (std::ptrdiff_t i = l; i <= mmin; ++i) {
                  p = x * A(i, k) + y * A(i, k + 1);
                  if (k != nn - 1) {
                    p += z * A(i, k + 2);
                    A(i, k + 2) -= p * r;
                  }
                  A(i, k + 1) -= p * q;
                  A(i, k) -= p;
                }
              }
            }
          }
        }
      } while (l < nn - 1);
    }
    std::vector<std::complex<double>> out;
    out.reserve(n_);
    for (std::size_t i = 1; i <= n_; ++i) out.emplace_back(wr[i], wi[i]);
    return out;
  }

  std::size_t n_;
  std::vector<double> a_;
};

}  // namespace

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  if (!m.is_square()) throw DimensionError("eigenvalues: matrix is not square");
  if (!m.is_finite()) throw InputError("eigenvalues: non-finite entry");
  if (m.rows() == 0) return {};
  return Hqr(m).run();
}

double spectral_radius(const Matrix& m) {
  double rho = 0.0;
  for (const auto& ev : eigenvalues(m)) rho = std::max(rho, std::abs(ev));
  return rho;
}

SymMatrix sqrt_psd(const SymMatrix& m) {
  const auto eig = sym_eig(m);
  const std::size_t n = m.dim();
  Matrix d(n, n);
  for (std::size_t k = 0; k < n; ++k) d(k, k) = std::sqrt(std::max(eig.values[k], 0.0));
  return SymMatrix(eig.vectors * d * eig.vectors.transpose());
}

SymMatrix pseudo_inverse(const SymMatrix& m, double rel_tol) {
  const std::size_t n = m.dim();
  if (n == 0) return SymMatrix();
  const auto eig = sym_eig(m);
  const double top =
      std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
  Matrix d(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = eig.values[k];
    if (std::abs(v) > rel_tol * top) d(k, k) = 1.0 / v;
  }
  return SymMatrix(eig.vectors * d * eig.vectors.transpose());
}

double log_det_spd(const SymMatrix& m) {
  const Matrix l = strict_cholesky(m);
  double s = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

std::size_t rank(const Matrix& m, double rel_tol) {
  if (m.empty()) return 0;
  if (!m.is_finite()) throw InputError("rank: non-finite entry");
  // One-sided Jacobi: orthogonalize columns, singular values are column norms.
  Matrix u = m.rows() >= m.cols() ? m : m.transpose();
  const std::size_t rows = u.rows();
  const std::size_t cols = u.cols();
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
          alpha += u(i, p) * u(i, p);
          beta += u(i, q) * u(i, q);
          gamma += u(i, p) * u(i, q);
        }
        if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double up = u(i, p);
          const double uq = u(i, q);
          u(i, p) = c * up - s * uq;
          u(i, q) = s * up + c * uq;
        }
      }
    }
    if (!rotated) break;
  }
  Vector sv(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double n2 = 0.0;
    for (std::size_t i = 0; i < rows; ++i) n2 += u(i, j) * u(i, j);
    sv[j] = std::sqrt(n2);
  }
  const double top = *std::max_element(sv.begin(), sv.end());
  if (top == 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(sv.begin(), sv.end(), [&](double v) { return v > rel_tol * top; }));
}

SymMatrix discrete_lyapunov(const Matrix& a, const SymMatrix& q) {
  if (!a.is_square() || a.rows() != q.dim())
    throw DimensionError("discrete_lyapunov: incompatible dimensions");
  const double rho = spectral_radius(a);
  if (!(rho < 1.0)) {
    throw InputError("discrete_lyapunov: matrix is not Schur stable (spectral radius " +
                     std::to_string(rho) + ")");
  }
  Matrix x = q.matrix();
  Matrix ak = a;
  for (int it = 0; it < 128; ++it) {
    const Matrix inc = ak.transpose() * x * ak;
    x += inc;
    if (inc.max_abs() <= kEps * x.max_abs()) break;
    ak = ak * ak;
  }
  return SymMatrix(x);
}

}  // namespace fdcert
