#include "fdcert/model.hpp"

#include <cmath>
#include <sstream>

#include "fdcert/error.hpp"

namespace fdcert {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.is_finite()) throw InputError(std::string(what) + " has non-finite entries");
}

void require_shape(const Matrix& m, std::size_t r, std::size_t c, const std::string& what) {
  if (m.rows() != r || m.cols() != c) {
    throw DimensionError(what + " must be " + std::to_string(r) + "x" + std::to_string(c) +
                         ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

void LtiContinuous::validate() const {
  require_finite(A, "A");
  require_finite(B, "B");
  require_finite(C, "C");
  const std::size_t n = A.rows();
  require_shape(A, n, n, "A");
  require_shape(B, n, B.cols(), "B");
  require_shape(C, C.rows(), n, "C");
}

void LtiDiscrete::validate() const {
  LtiContinuous{A, B, C}.validate();
  if (!(dt > 0.0)) throw InputError("dt must be positive");
}

void PhysicalParams::validate() const {
  const std::pair<const char*, double> fields[] = {{"m_f", m_f}, {"m_w", m_w}, {"L_a", L_a},
                                                   {"L_h", L_h}, {"L_m", L_m}, {"L_w", L_w},
                                                   {"L_f", L_f}, {"K_f", K_f}, {"g", g}};
  for (const auto& [name, v] : fields) {
    if (!std::isfinite(v) || v <= 0.0)
      throw InputError(std::string("physical parameter ") + name + " must be positive, got " + fmt(v));
  }
}

void FdModel::validate() const {
  if (!(dt > 0.0)) throw InputError("dt must be positive");
  plant.validate();
  const std::size_t n = plant.state_dim();
  const std::size_t m = plant.input_dim();
  const std::size_t p = plant.output_dim();
  const auto& c = controller;
  const std::size_t nc = c.A.rows();
  const std::size_t nr = c.R.cols();
  const std::size_t nm = c.M.rows();
  for (const Matrix* mat : {&c.A, &c.B, &c.C, &c.D, &c.R, &c.M, &L, &fault.X})
    require_finite(*mat, "model matrix");
  require_shape(c.A, nc, nc, "controller.A");
  require_shape(c.M, nm, n, "controller.measurement");
  require_shape(c.B, nc, nm, "controller.B");
  require_shape(c.C, m, nc, "controller.C");
  require_shape(c.D, m, nm, "controller.D");
  require_shape(c.R, nc, nr, "controller.R");
  require_shape(L, n, p, "observer.L");
  require_shape(fault.X, m, m, "fault.X");
  for (std::size_t i = 0; i < m; ++i) {
    const double d = fault.X(i, i);
    if (d < 0.0 || d > 1.0) throw InputError("fault.X diagonal entries must lie in [0, 1]");
  }
  if (!(fault.sigma > 0.0) || !std::isfinite(fault.sigma)) throw InputError("fault.sigma must be positive");
  if (reference_q.dim() != nr) throw DimensionError("reference bound dimension must match controller.R columns");
  if (!reference_q.is_finite() || !cholesky_psd(reference_q, 0.0).psd)
    throw InputError("reference bound must be positive semidefinite");
  if (!(zeta > 0.0)) throw InputError("detector.zeta must be positive");
  if (!(margin >= 0.0)) throw InputError("synthesis.margin must be nonnegative");
}

void LoopModel::validate() const {
  require_finite(A, "system.A");
  require_finite(B, "system.B");
  require_shape(A, A.rows(), A.rows(), "system.A");
  require_shape(B, A.rows(), B.cols(), "system.B");
  if (input_q.dim() != B.cols()) throw DimensionError("input bound dimension must match system.B columns");
  if (!cholesky_psd(input_q, 0.0).psd) throw InputError("input bound must be positive semidefinite");
  if (!(margin >= 0.0)) throw InputError("synthesis.margin must be nonnegative");
}

LtiDiscrete discretize_zoh(const LtiContinuous& sys, double dt) {
  if (!(dt > 0.0)) throw InputError("discretize_zoh: dt must be positive");
  sys.validate();
  const std::size_t n = sys.state_dim();
  const std::size_t m = sys.input_dim();
  Matrix aug(n + m, n + m);
  aug.set_block(0, 0, sys.A * dt);
  aug.set_block(0, n, sys.B * dt);
  const Matrix e = mat_exp(aug);
  return {e.block(0, 0, n, n), e.block(0, n, n, m), sys.C, dt};
}

LtiContinuous build_plant_matrices(const PhysicalParams& p) {
  p.validate();
  Matrix a(6, 6);
  a(0, 3) = a(1, 4) = a(2, 5) = 1.0;
  a(5, 1) = (2.0 * p.m_f * p.L_a - p.m_w * p.L_m) * p.g /
            (2.0 * p.m_f * p.L_a * p.L_a + 2.0 * p.m_f * p.L_h * p.L_h + p.m_w * p.L_m * p.L_m);
  Matrix b(6, 2);
  const double elev = p.L_a * p.K_f / (p.m_w * p.L_w * p.L_w + 2.0 * p.m_f * p.L_a * p.L_a);
  const double pitch = p.K_f / (2.0 * p.m_f * p.L_f);
  b(3, 0) = b(3, 1) = elev;
  b(4, 0) = pitch;
  b(4, 1) = -pitch;
  Matrix c(3, 6);
  c(0, 0) = c(1, 1) = c(2, 2) = 1.0;
  return {a, b, c};
}

Matrix build_fault_input(const LtiDiscrete& plant, const FaultModel& fault) {
  const std::size_t m = plant.input_dim();
  if (fault.X.rows() != m || fault.X.cols() != m)
    throw DimensionError("fault.X must be square of the plant input dimension");
  return plant.B * (Matrix::identity(m) - fault.X);
}

ClosedLoop closed_loop(const FdModel& m, const Matrix& X) {
  const auto& c = m.controller;
  const std::size_t n = m.plant.state_dim();
  const std::size_t nc = c.state_dim();
  const Matrix b_act = m.plant.B * X;
  Matrix a(n + nc, n + nc);
  a.set_block(0, 0, m.plant.A + b_act * c.D * c.M);
  a.set_block(0, n, b_act * c.C);
  a.set_block(n, 0, c.B * c.M);
  a.set_block(n, n, c.A);
  Matrix b_ref(n + nc, c.reference_dim());
  b_ref.set_block(n, 0, c.R);
  return {a, b_ref, b_act};
}

DerivedSystems assemble(const FdModel& m) {
  m.validate();
  DerivedSystems d;
  const std::size_t inputs = m.plant.input_dim();
  d.nominal = closed_loop(m, Matrix::identity(inputs));
  d.faulty = closed_loop(m, m.fault.X);
  const Matrix lc = m.L * m.plant.C;
  d.observer.A_hat = m.plant.A - lc;
  d.observer.B_tilde = lc;
  d.observer.B_hat = hstack({m.plant.B, lc});
  d.E = build_fault_input(m.plant, m.fault);
  d.observer_radius = spectral_radius(d.observer.A_hat);
  if (!(d.observer_radius < 1.0)) {
    throw ValidationError("observer error dynamics A - L C are unstable: spectral radius " +
                          fmt(d.observer_radius) + " >= 1");
  }
  return d;
}

Vector observer_step_innovation(const FdModel& m, std::span<const double> xhat,
                                std::span<const double> u, std::span<const double> y) {
  Vector out = (m.plant.A - m.L * m.plant.C) * xhat;
  const Vector bu = m.plant.B * u;
  const Vector ly = m.L * y;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bu[i] + ly[i];
  return out;
}

Vector observer_step_plant_output(const FdModel& m, std::span<const double> xhat,
                                  std::span<const double> u, std::span<const double> x) {
  const Vector y = m.plant.C * x;
  Vector out = m.plant.A * xhat;
  const Vector bu = m.plant.B * u;
  const Vector yhat = m.plant.C * xhat;
  Vector innov(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) innov[i] = y[i] - yhat[i];
  const Vector li = m.L * innov;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bu[i] + li[i];
  return out;
}

Vector observer_step_error(const FdModel& m, std::span<const double> xhat,
                           std::span<const double> u, std::span<const double> x) {
  Vector e(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) e[i] = x[i] - xhat[i];
  Vector out = m.plant.A * xhat;
  const Vector bu = m.plant.B * u;
  const Vector lce = (m.L * m.plant.C) * e;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bu[i] + lce[i];
  return out;
}

// ---------------------------------------------------------------------------
// Config ingestion

namespace {

using textfmt::Table;
using textfmt::Value;

double number_or(const Table& t, std::string_view key, double fallback) {
  const Value* v = t.find(key);
  return v == nullptr ? fallback : v->as_number();
}

const Table& table(const Table& t, std::string_view key) { return t.at(key).as_table(); }

SymMatrix bound_q(const Table& t, std::size_t dim, const char* section) {
  const Value* radius = t.find("radius");
  const Value* p = t.find("P");
  const Value* q = t.find("Q");
  if ((radius != nullptr) + (p != nullptr) + (q != nullptr) != 1)
    throw ParseError(t.line(), std::string("[") + section + "] needs exactly one of radius, P, Q");
  if (radius != nullptr) {
    const double r = radius->as_number();
    if (r < 0.0) throw ParseError(radius->line(), "radius must be nonnegative");
    return SymMatrix::scaled_identity(dim, r * r);
  }
  if (p != nullptr) {
    const double level = number_or(t, "level", 1.0);
    try {
      return inverse(p->as_sym()) * level;
    } catch (const SingularityError&) {
      throw ParseError(p->line(), std::string("[") + section + "] P must be positive definite");
    }
  }
  return q->as_sym();
}

PhysicalParams parse_params(const Table& t) {
  PhysicalParams p;
  p.m_f = t.at("m_f").as_number();
  p.m_w = t.at("m_w").as_number();
  p.L_a = t.at("L_a").as_number();
  p.L_h = t.at("L_h").as_number();
  p.L_m = t.at("L_m").as_number();
  p.L_w = t.at("L_w").as_number();
  p.L_f = t.at("L_f").as_number();
  p.K_f = t.at("K_f").as_number();
  p.g = t.at("g").as_number();
  return p;
}

FdModel parse_fd(const Table& doc) {
  FdModel m;
  m.name = doc.contains("name") ? doc.at("name").as_string() : "fd_model";
  m.dt = doc.at("dt").as_number();
  if (!(m.dt > 0.0)) throw ParseError(doc.at("dt").line(), "dt must be positive");

  const Table& plant = table(doc, "plant");
  const bool discrete = plant.contains("discrete") && plant.at("discrete").as_bool();
  if (plant.contains("params")) {
    m.params = parse_params(table(plant, "params"));
    m.continuous = build_plant_matrices(*m.params);
    m.plant = discretize_zoh(*m.continuous, m.dt);
  } else if (discrete) {
    m.plant = {plant.at("A").as_matrix(), plant.at("B").as_matrix(), plant.at("C").as_matrix(), m.dt};
  } else {
    m.continuous = LtiContinuous{plant.at("A").as_matrix(), plant.at("B").as_matrix(),
                                 plant.at("C").as_matrix()};
    m.plant = discretize_zoh(*m.continuous, m.dt);
  }

  const Table& ctl = table(doc, "controller");
  m.controller.A = ctl.at("A").as_matrix();
  m.controller.B = ctl.at("B").as_matrix();
  m.controller.C = ctl.at("C").as_matrix();
  m.controller.D = ctl.at("D").as_matrix();
  m.controller.R = ctl.at("R").as_matrix();
  if (const Value* meas = ctl.find("measurement")) {
    m.controller.M = meas->is_string() && meas->as_string() == "state"
                         ? Matrix::identity(m.plant.state_dim())
                     : meas->is_string() && meas->as_string() == "output"
                         ? m.plant.C
                         : meas->as_matrix();
  } else {
    m.controller.M = m.plant.C;
  }

  m.L = table(doc, "observer").at("L").as_matrix();

  const Table& fault = table(doc, "fault");
  m.fault.X = fault.at("X").as_matrix();
  m.fault.sigma = fault.at("sigma").as_number();

  m.reference_q = bound_q(table(doc, "reference_bound"), m.controller.R.cols(), "reference_bound");
  if (const Value* det = doc.find("detector")) m.zeta = number_or(det->as_table(), "zeta", m.zeta);
  if (const Value* syn = doc.find("synthesis")) m.margin = number_or(syn->as_table(), "margin", m.margin);
  m.validate();
  return m;
}

LoopModel parse_loop(const Table& doc) {
  LoopModel m;
  m.name = doc.contains("name") ? doc.at("name").as_string() : "loop";
  const Table& sys = table(doc, "system");
  m.A = sys.at("A").as_matrix();
  m.B = sys.at("B").as_matrix();
  if (const Value* v = sys.find("state")) m.state_var = v->as_string();
  if (const Value* v = sys.find("input")) m.input_var = v->as_string();
  m.input_q = bound_q(table(doc, "input_bound"), m.B.cols(), "input_bound");
  if (const Value* syn = doc.find("synthesis")) m.margin = number_or(syn->as_table(), "margin", m.margin);
  m.validate();
  return m;
}

}  // namespace

AnyModel parse_model(const textfmt::Table& doc) {
  const std::string kind = doc.contains("kind") ? doc.at("kind").as_string() : "fault_detection";
  if (kind == "fault_detection") return parse_fd(doc);
  if (kind == "linear_loop") return parse_loop(doc);
  throw ParseError(doc.at("kind").line(), "unknown model kind '" + kind + "'");
}

AnyModel load_model(const std::string& path) { return parse_model(textfmt::parse_file(path)); }

}  // namespace fdcert
