#include "fdcert/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fdcert/error.hpp"

namespace fdcert {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

constexpr double kGolden = 0.6180339887498949;

// Minimizes f on [lo, hi] assuming unimodality.
template <class F>
double golden_min(F&& f, double lo, double hi, int iters = 60) {
  double a = lo, b = hi;
  double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

Vector geomspace(double lo, double hi, int n) {
  Vector out;
  for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return out;
}

// Range of a PSD input bound: V (m x r) and the matching P-form diag(1/s).
struct InputRange {
  Matrix V;
  SymMatrix p1;
};

InputRange input_range(const SymMatrix& q) {
  const std::size_t m = q.dim();
  if (m == 0) return {Matrix(0, 0), SymMatrix(0)};
  const auto eig = sym_eig(q);
  const double top = std::max(eig.values.back(), 0.0);
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < m; ++k)
    if (eig.values[k] > 1e-12 * top && top > 0.0) keep.push_back(k);
  if (keep.size() == m) return {Matrix::identity(m), inverse(q)};
  Matrix v(m, keep.size());
  Vector inv(keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    for (std::size_t i = 0; i < m; ++i) v(i, c) = eig.vectors(i, keep[c]);
    inv[c] = 1.0 / eig.values[keep[c]];
  }
  return {v, SymMatrix::diagonal(inv)};
}

SymMatrix stein(const Matrix& a, const SymMatrix& p, double alpha) {
  return congruence(a.transpose(), p) - p * (1.0 - alpha);
}

// Q_alpha = A Q A^T / (1 - alpha) + W / alpha.
std::optional<SymMatrix> q_alpha(const Matrix& a, const SymMatrix& w, double alpha) {
  try {
    return discrete_lyapunov(a.transpose() * (1.0 / std::sqrt(1.0 - alpha)), w * (1.0 / alpha));
  } catch (const Error&) {
    return std::nullopt;
  }
}

double logdet_or_inf(const SymMatrix& q) {
  try {
    return log_det_spd(q);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

// Largest c <= 1 with lambda_max(block(c P0)) <= -margin. The block is
// convex in c and vanishes in its top-left corner at c = 0, so the feasible
// c form an interval; scan down from 1 to land inside, then bisect its top.
std::optional<double> scale_search(const Matrix& a, const Matrix& b, const SymMatrix& p0, double alpha,
                                   const SymMatrix& iq, double margin) {
  auto f = [&](double c) { return bounded_input_lambda_max(a, b, p0 * c, alpha, iq); };
  // aim slightly past the requested margin
  margin *= 1.001;
  static constexpr double trial[] = {1.0,        1.0 - 1e-12, 1.0 - 1e-10, 1.0 - 1e-8, 1.0 - 1e-6,
                                     1.0 - 1e-4, 0.99,        0.9,         0.5,        0.1,
                                     1e-2,       1e-3,        1e-4};
  double hi = 0.0;
  std::optional<double> lo;
  for (double c : trial) {
    if (f(c) <= -margin) {
      lo = c;
      break;
    }
    hi = c;
  }
  if (!lo) return std::nullopt;
  if (*lo == 1.0) return 1.0;
  double good = *lo, bad = hi;
  for (int i = 0; i < 80 && bad - good > 1e-15 * bad; ++i) {
    const double mid = 0.5 * (good + bad);
    (f(mid) <= -margin ? good : bad) = mid;
  }
  return good;
}

bool negative_semidefinite(const SymMatrix& m) { return cholesky_psd(m * -1.0, 0.0).psd; }

}  // namespace

SymMatrix bounded_input_block(const Matrix& a, const Matrix& b, const SymMatrix& p, double alpha,
                              const SymMatrix& p1) {
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();
  if (!a.is_square() || b.rows() != n || p.dim() != n || p1.dim() != m)
    throw DimensionError("bounded_input_block: inconsistent dimensions");
  const Matrix pb = p.matrix() * b;
  Matrix blk(n + m, n + m);
  blk.set_block(0, 0, stein(a, p, alpha).matrix());
  const Matrix off = a.transpose() * pb;
  blk.set_block(0, n, off);
  blk.set_block(n, 0, off.transpose());
  blk.set_block(n, n, (congruence(b.transpose(), p) - p1 * alpha).matrix());
  return SymMatrix(blk);
}

double bounded_input_lambda_max(const Matrix& a, const Matrix& b, const SymMatrix& p, double alpha,
                                const SymMatrix& input_q) {
  const auto r = input_range(input_q);
  if (r.p1.dim() == 0) return lambda_max(stein(a, p, alpha));
  return lambda_max(bounded_input_block(a, b * r.V, p, alpha, r.p1));
}

BoundedInputInvariant synth_invariant_bounded_input(const Matrix& a, const Matrix& b, const SymMatrix& p1,
                                                    const SynthOptions& opt) {
  SymMatrix q1;
  try {
    q1 = inverse(p1);
  } catch (const SingularityError&) {
    throw InputError("input bound P1 must be positive definite");
  }
  return synth_invariant_q(a, b, q1, opt);
}

BoundedInputInvariant synth_invariant_q(const Matrix& a, const Matrix& b, const SymMatrix& input_q,
                                        const SynthOptions& opt) {
  const std::size_t n = a.rows();
  if (!a.is_square() || b.rows() != n || input_q.dim() != b.cols())
    throw DimensionError("synth_invariant: inconsistent dimensions");
  const double rho = spectral_radius(a);
  if (!(rho < 1.0))
    throw SynthesisError("no invariant ellipsoid: dynamics not Schur stable (spectral radius " + fmt(rho) +
                         ")");
  const SymMatrix w0 = congruence(b, input_q);
  const double wscale = w0.norm();
  const double amax = 1.0 - rho * rho;

  Vector alphas;
  for (int k = 1; k <= 49; ++k) alphas.push_back(0.02 * k);
  for (double x : geomspace(1e-5, amax, 80)) alphas.push_back(x);
  std::erase_if(alphas, [&](double x) { return !(x < amax * (1.0 - 1e-9)); });
  std::sort(alphas.begin(), alphas.end());
  if (alphas.empty()) throw SynthesisError("no admissible multiplier alpha");

  double best_lambda = std::numeric_limits<double>::infinity();
  std::vector<double> first_order;
  // The tight Lyapunov candidate is singular in the directions the input
  // never excites; a growing ridge buys the margin back.
  for (double ridge : {1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2}) {
    const SymMatrix w = w0 + SymMatrix::scaled_identity(n, wscale > 0.0 ? ridge * wscale : 1.0);
    auto score = [&](double al) {
      const auto q = q_alpha(a, w, al);
      return q ? logdet_or_inf(*q) : std::numeric_limits<double>::infinity();
    };
    std::vector<std::pair<double, double>> scored;
    for (double al : alphas) scored.emplace_back(score(al), al);
    std::size_t ibest = 0;
    for (std::size_t i = 1; i < scored.size(); ++i)
      if (scored[i].first < scored[ibest].first) ibest = i;
    if (!std::isfinite(scored[ibest].first)) continue;
    const double lo = ibest > 0 ? alphas[ibest - 1] : alphas[0] * 0.5;
    const double hi = ibest + 1 < alphas.size() ? alphas[ibest + 1] : 0.5 * (alphas[ibest] + amax);
    std::vector<double> order{golden_min(score, lo, hi)};
    std::sort(scored.begin(), scored.end());
    for (const auto& [s, al] : scored)
      if (std::isfinite(s) && order.size() < 6) order.push_back(al);
    if (first_order.empty()) first_order = order;

    for (double al : order) {
      const auto q = q_alpha(a, w, al);
      if (!q) continue;
      SymMatrix p0;
      try {
        p0 = inverse(*q);
      } catch (const Error&) {
        continue;
      }
      best_lambda = std::min(best_lambda, bounded_input_lambda_max(a, b, p0, al, input_q));
      const auto c = scale_search(a, b, p0, al, input_q, opt.margin);
      if (!c) continue;
      BoundedInputInvariant out;
      out.P = p0 * *c;
      out.Q = inverse(out.P);
      out.alpha = al;
      out.lambda_max = bounded_input_lambda_max(a, b, out.P, al, input_q);
      out.input_q = input_q;
      out.method = "lyapunov";
      return out;
    }
  }
  for (std::size_t i = 0; i < std::min<std::size_t>(3, first_order.size()); ++i) {
    if (auto r = alternating_projections(a, b, input_q, first_order[i], opt)) return *r;
  }
  throw SynthesisError("no feasible (P, alpha) found; best lambda_max " + fmt(best_lambda) +
                       " against required " + fmt(-opt.margin));
}

std::optional<BoundedInputInvariant> alternating_projections(const Matrix& a, const Matrix& b,
                                                             const SymMatrix& input_q, double alpha,
                                                             const SynthOptions& opt) {
  const std::size_t n = a.rows();
  const auto range = input_range(input_q);
  const Matrix bs = range.p1.dim() ? b * range.V : Matrix(n, 0);
  const std::size_t r = range.p1.dim();
  const std::size_t dim = n + r;
  const SymMatrix zero_p1(r);

  // Linear part of the block, one matrix per symmetric basis element.
  std::vector<std::pair<std::size_t, std::size_t>> basis;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) basis.emplace_back(i, j);
  const std::size_t nb = basis.size();
  auto unit = [&](std::size_t k) {
    SymMatrix e(n);
    e.set(basis[k].first, basis[k].second, 1.0);
    return e;
  };
  auto linear = [&](const SymMatrix& p) {
    return r ? bounded_input_block(a, bs, p, alpha, zero_p1) : stein(a, p, alpha);
  };
  std::vector<Matrix> lk;
  lk.reserve(nb);
  for (std::size_t k = 0; k < nb; ++k) lk.push_back(linear(unit(k)).matrix());
  auto inner = [&](const Matrix& x, const Matrix& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.data().size(); ++i) s += x.data()[i] * y.data()[i];
    return s;
  };
  SymMatrix gram(nb);
  for (std::size_t k = 0; k < nb; ++k)
    for (std::size_t l = k; l < nb; ++l) gram.set(k, l, inner(lk[k], lk[l]));
  Matrix konst(dim, dim);
  if (r) konst.set_block(n, n, (range.p1 * -alpha).matrix());

  const double target = 10.0 * opt.margin;
  SymMatrix p = SymMatrix::identity(n);
  try {
    p = discrete_lyapunov(a.transpose() * (1.0 / std::sqrt(1.0 - alpha)), SymMatrix::identity(n));
  } catch (const Error&) {
  }
  for (int it = 0; it < opt.projection_iterations; ++it) {
    const SymMatrix m(linear(p).matrix() + konst);
    const double lam = lambda_max(m);
    if (lam <= -opt.margin && lambda_min(p) > 0.0) {
      BoundedInputInvariant out;
      out.P = p;
      out.Q = inverse(p);
      out.alpha = alpha;
      out.lambda_max = bounded_input_lambda_max(a, b, p, alpha, input_q);
      out.input_q = input_q;
      out.method = "projection";
      if (out.lambda_max <= -opt.margin) return out;
    }
    auto eig = sym_eig(m);
    for (auto& v : eig.values) v = std::min(v, -target);
    const Matrix z = eig.vectors * Matrix::diagonal(eig.values) * eig.vectors.transpose() - konst;
    Matrix rhs(nb, 1);
    for (std::size_t k = 0; k < nb; ++k) rhs(k, 0) = inner(lk[k], z);
    Matrix coef;
    try {
      coef = solve_spd(gram, rhs);
    } catch (const Error&) {
      return std::nullopt;
    }
    SymMatrix next(n);
    for (std::size_t k = 0; k < nb; ++k) next.set(basis[k].first, basis[k].second, coef(k, 0));
    p = next;
  }
  return std::nullopt;
}

SymMatrix level_set_block(const Matrix& a, const Matrix& e, const SymMatrix& p, double alpha, double c,
                          double sigma) {
  return bounded_input_block(a, e, p, alpha,
                             SymMatrix::scaled_identity(e.cols(), c / (sigma * sigma)));
}

LevelSet faulty_level_set(const Matrix& a, const Matrix& e, const SymMatrix& p, double sigma) {
  if (!(sigma > 0.0)) throw InputError("faulty_level_set: sigma must be positive");
  const double rho = spectral_radius(a);
  if (!(rho < 1.0)) throw SynthesisError("faulty_level_set: error dynamics unstable (spectral radius " +
                                         fmt(rho) + ")");
  if (!(lambda_min(p) > 0.0)) throw InputError("faulty_level_set: P must be positive definite");

  Vector grid = geomspace(1e-6, 1e-3, 30);
  for (int k = 1; k < 1000; ++k) grid.push_back(k / 1000.0);
  Vector alphas;
  for (double al : grid)
    if (lambda_min(stein(a, p, al) * -1.0) > 0.0) alphas.push_back(al);
  if (alphas.empty()) throw SynthesisError("faulty_level_set: no admissible multiplier alpha");

  std::size_t last = 0;
  auto feasible = [&](double c) -> std::optional<double> {
    if (negative_semidefinite(level_set_block(a, e, p, alphas[last], c, sigma))) return alphas[last];
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      if (negative_semidefinite(level_set_block(a, e, p, alphas[i], c, sigma))) {
        last = i;
        return alphas[i];
      }
    }
    return std::nullopt;
  };
  double hi = 1e6, lo = 0.0;
  auto ahi = feasible(hi);
  if (!ahi) throw SynthesisError("faulty_level_set: upper bracket c = 1e6 infeasible");
  for (int i = 0; i < 400 && hi - lo > 1e-4 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (auto am = feasible(mid)) {
      hi = mid;
      ahi = am;
    } else {
      lo = mid;
    }
  }
  return {hi, *ahi};
}

SymMatrix continuous_bound_block(const Matrix& a, const Matrix& e, const ContinuousBoundCertificate& cert) {
  const std::size_t n = a.rows();
  const std::size_t m = e.cols();
  if (!a.is_square() || e.rows() != n || cert.Q.dim() != n || cert.P.dim() != n)
    throw DimensionError("continuous_bound_block: inconsistent dimensions");
  const Matrix q = cert.Q.matrix();
  const Matrix ph = sqrt_psd(cert.P).matrix();
  Matrix blk(2 * n + m, 2 * n + m);
  blk.set_block(0, 0, a.transpose() * q + q * a);
  const Matrix qe = q * e;
  blk.set_block(0, n, qe);
  blk.set_block(n, 0, qe.transpose());
  blk.set_block(n, n, Matrix::identity(m) * -cert.rho);
  blk.set_block(0, n + m, ph);
  blk.set_block(n + m, 0, ph);
  blk.set_block(n + m, n + m, Matrix::identity(n) * -cert.rho);
  return SymMatrix(blk);
}

bool check_continuous_bound(const Matrix& a, const Matrix& e, const ContinuousBoundCertificate& cert, double tol) {
  if (!(cert.rho > 0.0)) throw CertificateError("continuous bound certificate: rho must be positive");
  const double qmin = lambda_min(cert.Q);
  if (qmin < 0.0) throw CertificateError("continuous bound certificate: Q has a negative eigenvalue " + fmt(qmin));
  const double pmin = lambda_min(cert.P);
  if (pmin < -1e-12 * std::max(1.0, cert.P.norm()))
    throw CertificateError("continuous bound certificate: P is not positive semidefinite");
  return qmin > 0.0 && lambda_max(continuous_bound_block(a, e, cert)) < -tol;
}

double residual_threshold(const EllipsoidP& err, const Matrix& c) {
  err.validate();
  if (c.cols() != err.P.dim()) throw DimensionError("residual_threshold: C columns must match P");
  return std::sqrt(err.level * lambda_max(congruence(c, inverse(err.P))));
}

SymMatrix detector_shape(const Matrix& a_hat, const Matrix& c) {
  const SymMatrix p = discrete_lyapunov(a_hat, SymMatrix::identity(a_hat.rows()));
  return p * lambda_max(congruence(c, inverse(p)));
}

double best_split(const SymMatrix& qx, const SymMatrix& qxh, double alpha) {
  const double room = 1.0 - alpha;
  if (!(room > 0.0)) throw CertificateError("best_split: alpha must be below 1");
  auto f = [&](double g) { return logdet_or_inf(qx * (1.0 / g) + qxh * (1.0 / (room - g))); };
  double best = 0.5 * room, fbest = f(best);
  for (int k = 1; k < 1000; ++k) {
    const double g = room * k / 1000.0;
    const double v = f(g);
    if (v < fbest) {
      fbest = v;
      best = g;
    }
  }
  const double step = room / 1000.0;
  const double g = golden_min(f, std::max(best - step, 1e-3 * step), std::min(best + step, room - 1e-3 * step));
  return f(g) <= fbest ? g : best;
}

namespace {

VarList closed_vars(const FdModel& m) {
  return concat(vector_vars(names::kState, m.plant.state_dim()),
                vector_vars(names::kController, m.controller.state_dim()));
}

}  // namespace

BoundedInputInvariant closed_loop_invariant(const FdModel& m, bool faulty, const SynthOptions& opt) {
  const Matrix x = faulty ? m.fault.X : Matrix::identity(m.plant.input_dim());
  const ClosedLoop cl = closed_loop(m, x);
  try {
    return synth_invariant_q(cl.A, cl.B_ref, m.reference_q, opt);
  } catch (const SynthesisError& e) {
    throw SynthesisError(std::string(faulty ? "faulty" : "nominal") + " closed loop: " + e.what());
  }
}

SymMatrix observer_input_bound(const FdModel& m, const SymMatrix& closed_q) {
  const std::size_t n = m.plant.state_dim();
  const std::size_t nc = m.controller.state_dim();
  const std::size_t nu = m.plant.input_dim();
  const std::size_t ny = m.plant.output_dim();
  Matrix t(nu + ny, n + nc);
  t.set_block(0, 0, m.controller.D * m.controller.M);
  t.set_block(0, n, m.controller.C);
  t.set_block(nu, 0, m.plant.C);
  return congruence(t, closed_q);
}

void derive_error_invariants(CertificateBundle& b) {
  for (ModeCertificates* mode : {&b.nominal, &b.faulty}) {
    if (!(mode->alpha_observer > 0.0))
      throw CertificateError("derive_error_invariants: observer multiplier missing");
    const std::size_t n = mode->observer.P.dim();
    const VarList xvars = vector_vars(names::kState, n);
    const EllipsoidQ qx = project(p_to_q(mode->closed), xvars);
    const EllipsoidQ qxh = p_to_q(mode->observer);
    const double gamma = best_split(qx.Q, qxh.Q, mode->alpha_observer);
    mode->split = {mode->alpha_observer, gamma};
    mode->error = sproc_combine(q_to_p(qx), mode->observer, mode->split, vector_vars(names::kError, n));
  }
}

CertificateBundle synthesize(const FdModel& m) {
  const DerivedSystems d = assemble(m);
  const SynthOptions opt{m.margin, 10000};
  CertificateBundle b;
  b.model = m.name;
  const std::size_t n = m.plant.state_dim();
  const Matrix b_obs = hstack({m.plant.B, m.L});
  for (bool faulty : {false, true}) {
    ModeCertificates& mode = faulty ? b.faulty : b.nominal;
    const auto cl = closed_loop_invariant(m, faulty, opt);
    mode.closed = {cl.P, closed_vars(m), 1.0};
    mode.alpha_closed = cl.alpha;
    mode.lmi_closed = cl.lambda_max;
    mode.reference_q = m.reference_q;
    mode.observer_input_q = observer_input_bound(m, cl.Q);
    BoundedInputInvariant obs;
    try {
      obs = synth_invariant_q(d.observer.A_hat, b_obs, mode.observer_input_q, opt);
    } catch (const SynthesisError& e) {
      throw SynthesisError(std::string(faulty ? "faulty" : "nominal") + " observer: " + e.what());
    }
    mode.observer = {obs.P, vector_vars(names::kObserver, n), 1.0};
    mode.alpha_observer = obs.alpha;
    mode.lmi_observer = obs.lambda_max;
  }
  derive_error_invariants(b);

  const SymMatrix pdet = detector_shape(d.observer.A_hat, m.plant.C);
  const VarList evars = vector_vars(names::kError, n);
  const LevelSet ls = faulty_level_set(d.observer.A_hat, d.E, pdet, m.fault.sigma);
  b.detector.nominal = {pdet, evars, m.zeta};
  b.detector.faulty = {pdet, evars, std::max(m.zeta, ls.level)};
  b.detector.alpha_fault = ls.alpha;
  b.detector.sigma = m.fault.sigma;
  b.detector.r_th = residual_threshold(b.detector.nominal, m.plant.C);
  b.validate();
  return b;
}

LoopCertificate synthesize(const LoopModel& m) {
  m.validate();
  const auto inv = synth_invariant_q(m.A, m.B, m.input_q, {m.margin, 10000});
  LoopCertificate out;
  out.model = m.name;
  out.invariant = {inv.P, vector_vars(m.state_var, m.A.rows()), 1.0};
  out.alpha = inv.alpha;
  out.lmi = inv.lambda_max;
  out.input_q = m.input_q;
  return out;
}

AnyBundle synthesize(const AnyModel& m) {
  return std::visit([](const auto& x) -> AnyBundle { return synthesize(x); }, m);
}

void CertificateBundle::validate() const {
  for (const ModeCertificates* mode : {&nominal, &faulty}) {
    mode->closed.validate();
    mode->observer.validate();
    mode->error.validate();
    mode->split.validate();
  }
  detector.nominal.validate();
  detector.faulty.validate();
  if (detector.nominal.level > detector.faulty.level) throw CertificateError("bundle: zeta exceeds zeta_bar");
  if (!(detector.r_th > 0.0)) throw CertificateError("bundle: r_th must be positive");
}

// ---- serialization

namespace {

using textfmt::Table;
using textfmt::Value;

Table ellipsoid_table(const EllipsoidP& e) {
  Table t;
  t.set("vars", textfmt::strings_value(e.vars));
  t.set("P", textfmt::matrix_value(e.P.matrix()));
  t.set("level", e.level);
  return t;
}

EllipsoidP ellipsoid_from(const Table& t) {
  EllipsoidP e{t.at("P").as_sym(), t.at("vars").as_strings(), t.at("level").as_number()};
  if (e.P.dim() != e.vars.size())
    throw ParseError(t.line(), "ellipsoid: " + std::to_string(e.vars.size()) + " vars for a " +
                                   std::to_string(e.P.dim()) + "x" + std::to_string(e.P.dim()) + " P");
  return e;
}

Table mode_table(const ModeCertificates& m) {
  Table out;
  Table closed = ellipsoid_table(m.closed);
  closed.set("alpha", m.alpha_closed);
  closed.set("lmi_lambda_max", m.lmi_closed);
  closed.set("input_Q", textfmt::matrix_value(m.reference_q.matrix()));
  Table obs = ellipsoid_table(m.observer);
  obs.set("alpha", m.alpha_observer);
  obs.set("lmi_lambda_max", m.lmi_observer);
  obs.set("input_Q", textfmt::matrix_value(m.observer_input_q.matrix()));
  Table err = ellipsoid_table(m.error);
  err.set("alpha", m.split.alpha);
  err.set("gamma", m.split.gamma);
  out.set("closed", std::move(closed));
  out.set("observer", std::move(obs));
  out.set("error", std::move(err));
  return out;
}

ModeCertificates mode_from(const Table& t) {
  ModeCertificates m;
  const Table& closed = t.at("closed").as_table();
  m.closed = ellipsoid_from(closed);
  m.alpha_closed = closed.at("alpha").as_number();
  m.lmi_closed = closed.at("lmi_lambda_max").as_number();
  m.reference_q = closed.at("input_Q").as_sym();
  const Table& obs = t.at("observer").as_table();
  m.observer = ellipsoid_from(obs);
  m.alpha_observer = obs.at("alpha").as_number();
  m.lmi_observer = obs.at("lmi_lambda_max").as_number();
  m.observer_input_q = obs.at("input_Q").as_sym();
  const Table& err = t.at("error").as_table();
  m.error = ellipsoid_from(err);
  m.split = {err.at("alpha").as_number(), err.at("gamma").as_number()};
  return m;
}

}  // namespace

textfmt::Table bundle_to_table(const AnyBundle& any) {
  Table root;
  if (const auto* lc = std::get_if<LoopCertificate>(&any)) {
    root.set("kind", "linear_loop");
    root.set("model", lc->model);
    Table inv = ellipsoid_table(lc->invariant);
    inv.set("alpha", lc->alpha);
    inv.set("lmi_lambda_max", lc->lmi);
    inv.set("input_Q", textfmt::matrix_value(lc->input_q.matrix()));
    root.set("invariant", std::move(inv));
    return root;
  }
  const auto& b = std::get<CertificateBundle>(any);
  root.set("kind", "fault_detection");
  root.set("model", b.model);
  root.set("nominal", mode_table(b.nominal));
  root.set("faulty", mode_table(b.faulty));
  Table det;
  det.set("vars", textfmt::strings_value(b.detector.nominal.vars));
  det.set("P", textfmt::matrix_value(b.detector.nominal.P.matrix()));
  det.set("zeta", b.detector.nominal.level);
  det.set("zeta_bar", b.detector.faulty.level);
  det.set("alpha_fault", b.detector.alpha_fault);
  det.set("sigma", b.detector.sigma);
  det.set("r_th", b.detector.r_th);
  root.set("detector", std::move(det));
  return root;
}

AnyBundle bundle_from_table(const textfmt::Table& root) {
  const std::string kind = root.contains("kind") ? root.at("kind").as_string() : "fault_detection";
  if (kind == "linear_loop") {
    LoopCertificate lc;
    lc.model = root.at("model").as_string();
    const Table& inv = root.at("invariant").as_table();
    lc.invariant = ellipsoid_from(inv);
    lc.alpha = inv.at("alpha").as_number();
    lc.lmi = inv.at("lmi_lambda_max").as_number();
    lc.input_q = inv.at("input_Q").as_sym();
    lc.invariant.validate();
    return lc;
  }
  if (kind != "fault_detection") throw ParseError(root.line(), "unknown bundle kind '" + kind + "'");
  CertificateBundle b;
  b.model = root.at("model").as_string();
  b.nominal = mode_from(root.at("nominal").as_table());
  b.faulty = mode_from(root.at("faulty").as_table());
  const Table& det = root.at("detector").as_table();
  const SymMatrix p = det.at("P").as_sym();
  const VarList vars = det.at("vars").as_strings();
  b.detector.nominal = {p, vars, det.at("zeta").as_number()};
  b.detector.faulty = {p, vars, det.at("zeta_bar").as_number()};
  b.detector.alpha_fault = det.at("alpha_fault").as_number();
  b.detector.sigma = det.at("sigma").as_number();
  b.detector.r_th = det.at("r_th").as_number();
  b.validate();
  return b;
}

void save_bundle(const AnyBundle& b, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << textfmt::emit(bundle_to_table(b));
  if (!out) throw InputError("failed writing " + path);
}

AnyBundle load_bundle(const std::string& path) { return bundle_from_table(textfmt::parse_file(path)); }

}  // namespace fdcert
