#pragma once

// Origin-centred ellipsoids.
//   P-form: {x | x^T P x <= level}, P positive definite.
//   Q-form: {x | [[1, x^T], [x, Q]] PSD}, Q PSD and possibly singular; for
//           nonsingular Q this is {x | x^T Q^-1 x <= 1}, so Q = level P^-1.

#include <span>
#include <string>
#include <vector>

#include "fdcert/numerics.hpp"

namespace fdcert {

using VarList = std::vector<std::string>;

struct EllipsoidP {
  SymMatrix P;
  VarList vars;
  double level = 1.0;

  void validate() const;
  /// x^T P x.
  double value(std::span<const double> x) const;
  bool contains(std::span<const double> x, double rel_tol = 0.0) const {
    return value(x) <= level * (1.0 + rel_tol);
  }
};

struct EllipsoidQ {
  SymMatrix Q;
  VarList vars;

  std::size_t dim() const { return Q.dim(); }
  void validate() const;
};

struct SProcCertificate {
  double alpha = 0.0;
  double gamma = 0.0;

  /// Throws CertificateError unless alpha > 0, gamma > 0, alpha + gamma < 1.
  void validate() const;
};

EllipsoidQ p_to_q(const EllipsoidP& e);
/// Throws DegeneracyError when Q is singular.
EllipsoidP q_to_p(const EllipsoidQ& e);

/// Image under x -> T x: Q' = T Q T^T.
EllipsoidQ affine_image(const EllipsoidQ& e, const Matrix& t, VarList out_vars);
/// Image under x -> [x; T x], over e.vars followed by out_vars.
EllipsoidQ stacked_image(const EllipsoidQ& e, const Matrix& t, const VarList& out_vars);
/// Shadow on the named variables, in the order given.
EllipsoidQ project(const EllipsoidQ& e, const VarList& keep);
/// Outer bound of the product set: blockdiag(Q1 / w1, Q2 / w2), valid when
/// w1 + w2 <= 1.
EllipsoidQ weighted_join(const EllipsoidQ& a, double wa, const EllipsoidQ& b, double wb);

/// P_e = (T P_j^-1 T^T)^-1 with P_j = blockdiag(gamma P_x, (1 - alpha - gamma) P_xh)
/// and T = [I  -I]: an ellipsoid on e = x - xh.
EllipsoidP sproc_combine(const EllipsoidP& ex, const EllipsoidP& exh, const SProcCertificate& cert,
                         VarList out_vars);

bool contains(const EllipsoidQ& e, std::span<const double> x, double tol);
/// Sufficient test Q2 - Q1 >= -tol I.
bool inclusion(const EllipsoidQ& e1, const EllipsoidQ& e2, double tol);
/// lambda_min(Q2 - Q1).
double inclusion_margin(const SymMatrix& q1, const SymMatrix& q2);

/// Index of each name of `sub` inside `vars`; throws InputError on unknown names.
std::vector<std::size_t> indices_of(const VarList& vars, const VarList& sub);
/// Selection matrix picking `sub` out of `vars`.
Matrix selector(const VarList& vars, const VarList& sub);
/// "x" with dim 1 stays "x"; otherwise "x[0]", "x[1]", ...
VarList vector_vars(const std::string& base, std::size_t dim);
VarList concat(const VarList& a, const VarList& b);
Vector concat_values(std::span<const double> a, std::span<const double> b);

}  // namespace fdcert
