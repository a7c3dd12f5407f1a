#include "fdcert/ellipsoid.hpp"

#include <algorithm>
#include <cmath>

#include "fdcert/error.hpp"

namespace fdcert {

void EllipsoidP::validate() const {
  if (P.dim() != vars.size()) throw DimensionError("EllipsoidP: variable count does not match P");
  if (!(level > 0.0) || !std::isfinite(level)) throw InputError("EllipsoidP: level must be positive");
  if (!P.is_finite()) throw InputError("EllipsoidP: non-finite entries");
  (void)solve_spd(P, Matrix(P.dim(), 0));
}

double EllipsoidP::value(std::span<const double> x) const {
  if (x.size() != P.dim()) throw DimensionError("EllipsoidP::value: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) row += P(i, j) * x[j];
    s += x[i] * row;
  }
  return s;
}

void EllipsoidQ::validate() const {
  if (Q.dim() != vars.size()) throw DimensionError("EllipsoidQ: variable count does not match Q");
  if (!Q.is_finite()) throw InputError("EllipsoidQ: non-finite entries");
}

void SProcCertificate::validate() const {
  if (!(alpha > 0.0) || !(gamma > 0.0) || !(alpha + gamma < 1.0)) {
    throw CertificateError("S-procedure multipliers need alpha > 0, gamma > 0, alpha + gamma < 1 (alpha=" +
                           std::to_string(alpha) + ", gamma=" + std::to_string(gamma) + ")");
  }
}

EllipsoidQ p_to_q(const EllipsoidP& e) {
  e.validate();
  return {inverse(e.P) * e.level, e.vars};
}

EllipsoidP q_to_p(const EllipsoidQ& e) {
  e.validate();
  try {
    return {inverse(e.Q), e.vars, 1.0};
  } catch (const SingularityError&) {
    throw DegeneracyError("q_to_p: shape matrix is singular");
  }
}

EllipsoidQ affine_image(const EllipsoidQ& e, const Matrix& t, VarList out_vars) {
  if (t.cols() != e.dim()) throw DimensionError("affine_image: T columns must match ellipsoid dimension");
  if (t.rows() != out_vars.size()) throw DimensionError("affine_image: T rows must match output variables");
  return {congruence(t, e.Q), std::move(out_vars)};
}

EllipsoidQ stacked_image(const EllipsoidQ& e, const Matrix& t, const VarList& out_vars) {
  const Matrix aug = vstack({Matrix::identity(e.dim()), t});
  return affine_image(e, aug, concat(e.vars, out_vars));
}

EllipsoidQ project(const EllipsoidQ& e, const VarList& keep) {
  return {principal(e.Q, indices_of(e.vars, keep)), keep};
}

EllipsoidQ weighted_join(const EllipsoidQ& a, double wa, const EllipsoidQ& b, double wb) {
  if (!(wa > 0.0) || !(wb > 0.0)) throw CertificateError("weighted_join: weights must be positive");
  return {block_diag(a.Q * (1.0 / wa), b.Q * (1.0 / wb)), concat(a.vars, b.vars)};
}

EllipsoidP sproc_combine(const EllipsoidP& ex, const EllipsoidP& exh, const SProcCertificate& cert,
                         VarList out_vars) {
  cert.validate();
  ex.validate();
  exh.validate();
  const std::size_t n = ex.P.dim();
  if (exh.P.dim() != n || out_vars.size() != n)
    throw DimensionError("sproc_combine: both ellipsoids and the output must share a dimension");
  const SymMatrix pj = block_diag(ex.P * (cert.gamma / ex.level),
                                  exh.P * ((1.0 - cert.alpha - cert.gamma) / exh.level));
  const Matrix t = hstack({Matrix::identity(n), Matrix::identity(n) * -1.0});
  const SymMatrix qe = congruence(t, inverse(pj));
  return {inverse(qe), std::move(out_vars), 1.0};
}

bool contains(const EllipsoidQ& e, std::span<const double> x, double tol) {
  const std::size_t n = e.dim();
  if (x.size() != n) throw DimensionError("contains: dimension mismatch");
  Matrix b(n + 1, n + 1);
  b(0, 0) = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    b(0, i + 1) = b(i + 1, 0) = x[i];
    for (std::size_t j = 0; j < n; ++j) b(i + 1, j + 1) = e.Q(i, j);
  }
  return cholesky_psd(SymMatrix(b), tol).psd;
}

double inclusion_margin(const SymMatrix& q1, const SymMatrix& q2) {
  if (q1.dim() != q2.dim()) throw DimensionError("inclusion: dimension mismatch");
  if (q1.dim() == 0) return 0.0;
  return lambda_min(q2 - q1);
}

bool inclusion(const EllipsoidQ& e1, const EllipsoidQ& e2, double tol) {
  if (e1.vars != e2.vars) throw InputError("inclusion: ellipsoids are over different variables");
  return inclusion_margin(e1.Q, e2.Q) >= -tol;
}

std::vector<std::size_t> indices_of(const VarList& vars, const VarList& sub) {
  std::vector<std::size_t> idx;
  idx.reserve(sub.size());
  for (const auto& name : sub) {
    const auto it = std::find(vars.begin(), vars.end(), name);
    if (it == vars.end()) throw InputError("unknown variable '" + name + "'");
    idx.push_back(static_cast<std::size_t>(it - vars.begin()));
  }
  return idx;
}

Matrix selector(const VarList& vars, const VarList& sub) {
  const auto idx = indices_of(vars, sub);
  Matrix s(sub.size(), vars.size());
  for (std::size_t i = 0; i < idx.size(); ++i) s(i, idx[i]) = 1.0;
  return s;
}

VarList vector_vars(const std::string& base, std::size_t dim) {
  if (dim == 1) return {base};
  VarList out;
  out.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) out.push_back(base + "[" + std::to_string(i) + "]");
  return out;
}

VarList concat(const VarList& a, const VarList& b) {
  VarList out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Vector concat_values(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace fdcert
