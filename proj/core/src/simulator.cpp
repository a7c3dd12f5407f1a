#include "fdcert/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "fdcert/error.hpp"
#include "fdcert/text_format.hpp"

namespace fdcert {

void Scenario::validate() const {
  if (fault_start && *fault_start > steps) throw InputError("scenario: fault_start exceeds steps");
  if (!(reference_scale >= 0.0 && reference_scale <= 1.0))
    throw InputError("scenario: reference_scale must lie in [0, 1]");
  if (!(initial_scale >= 0.0 && initial_scale <= 1.0)) throw InputError("scenario: initial_scale must lie in [0, 1]");
  if (fault_X && !fault_X->is_finite()) throw InputError("scenario: fault_X has non-finite entries");
}

bool Trace::has(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::size_t Trace::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InputError("trace has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<std::size_t> Trace::columns_of(const std::string& base) const {
  std::vector<std::size_t> out;
  if (has(base)) return {column(base)};
  for (std::size_t i = 0;; ++i) {
    const std::string name = base + "[" + std::to_string(i) + "]";
    if (!has(name)) break;
    out.push_back(column(name));
  }
  if (out.empty()) throw InputError("trace has no column '" + base + "'");
  return out;
}

double Trace::at(std::size_t row, const std::string& name) const { return rows.at(row).at(column(name)); }

Vector Trace::vec(std::size_t row, const std::string& base) const {
  Vector v;
  for (auto c : columns_of(base)) v.push_back(rows.at(row).at(c));
  return v;
}

namespace {

/// w = K v (accumulated from 0.0 left to right) + b, as in the emitted C.
struct Kernel {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> k;
  std::vector<double> b;
  std::vector<std::size_t> in;
  std::vector<std::size_t> out;
};

struct AlarmOp {
  std::size_t residual = 0;
  std::size_t dim = 0;
  std::size_t flag = 0;
  double threshold_sq = 0.0;
};

Kernel kernel(const Matrix& t, const Vector& b) {
  Kernel k;
  k.rows = t.rows();
  k.cols = t.cols();
  k.k.resize(k.rows * k.cols);
  for (std::size_t i = 0; i < k.rows; ++i)
    for (std::size_t j = 0; j < k.cols; ++j) k.k[i * k.cols + j] = t(i, j);
  k.b = b;
  return k;
}

void apply(const Kernel& k, const double* v, double* w) {
  for (std::size_t i = 0; i < k.rows; ++i) {
    double acc = 0.0;
    const double* row = &k.k[i * k.cols];
    for (std::size_t j = 0; j < k.cols; ++j) acc += row[j] * v[j];
    if (!k.b.empty() && k.b[i] != 0.0) acc += k.b[i];
    w[i] = acc;
  }
}

/// Executes the observable part of a lowered loop body over a flat store.
/// Ghost code runs only when everything it reads is observable, which keeps
/// the error computation and drops the behavior-specific plant copies.
class Machine {
 public:
  explicit Machine(const IrProgram& ir) {
    std::size_t off = 0;
    for (const auto& v : ir.vars) {
      offset_[v.name] = off;
      dim_[v.name] = v.dim;
      off += v.dim;
    }
    store_.assign(off, 0.0);
    std::set<std::string> seen;
    for (const auto& v : ir.vars)
      if (v.storage != Storage::Ghost) seen.insert(v.name);
    for (const auto& st : ir.body) {
      if (st.kind == StmtKind::LoopHead) continue;
      for (const auto& a : st.code) {
        if (a.ghost && !std::all_of(a.in.begin(), a.in.end(), [&](const auto& n) { return seen.count(n); }))
          continue;
        Kernel k = kernel(a.T, a.b);
        for (const auto& n : a.in)
          for (std::size_t i = 0; i < dim_.at(n); ++i) k.in.push_back(offset_.at(n) + i);
        for (const auto& n : a.out) {
          for (std::size_t i = 0; i < dim_.at(n); ++i) k.out.push_back(offset_.at(n) + i);
          seen.insert(n);
        }
        if (k.in.size() != k.cols || k.out.size() != k.rows)
          throw DimensionError("simulate: statement " + st.label + " does not match its variables");
        ops_.push_back(std::move(k));
        alarms_.push_back(std::nullopt);
      }
      if (st.alarm) {
        ops_.emplace_back();
        alarms_.push_back(AlarmOp{offset_.at(st.alarm->residual), dim_.at(st.alarm->residual),
                                  offset_.at(st.alarm->flag), st.alarm->threshold_sq});
      }
    }
    std::size_t widest = 0;
    for (const auto& k : ops_) widest = std::max({widest, k.rows, k.cols});
    v_.resize(widest);
    w_.resize(widest);
  }

  void step() {
    for (std::size_t n = 0; n < ops_.size(); ++n) {
      if (alarms_[n]) {
        const AlarmOp& a = *alarms_[n];
        double acc = 0.0;
        for (std::size_t i = 0; i < a.dim; ++i) acc += store_[a.residual + i] * store_[a.residual + i];
        store_[a.flag] = acc > a.threshold_sq ? 1.0 : 0.0;
        continue;
      }
      const Kernel& k = ops_[n];
      for (std::size_t j = 0; j < k.cols; ++j) v_[j] = store_[k.in[j]];
      apply(k, v_.data(), w_.data());
      for (std::size_t i = 0; i < k.rows; ++i) store_[k.out[i]] = w_[i];
    }
  }

  Vector get(const std::string& name) const {
    const std::size_t o = offset_.at(name);
    return Vector(store_.begin() + static_cast<std::ptrdiff_t>(o),
                  store_.begin() + static_cast<std::ptrdiff_t>(o + dim_.at(name)));
  }

  void set(const std::string& name, const Vector& v) {
    if (v.size() != dim_.at(name)) throw DimensionError("simulate: wrong length for " + name);
    std::copy(v.begin(), v.end(), store_.begin() + static_cast<std::ptrdiff_t>(offset_.at(name)));
  }

 private:
  std::map<std::string, std::size_t> offset_;
  std::map<std::string, std::size_t> dim_;
  std::vector<double> store_;
  std::vector<Kernel> ops_;
  std::vector<std::optional<AlarmOp>> alarms_;
  std::vector<double> v_;
  std::vector<double> w_;
};

Vector unit_sphere(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  for (;;) {
    Vector v(n);
    double s = 0.0;
    for (auto& x : v) {
      x = d(rng);
      s += x * x;
    }
    if (s == 0.0) continue;
    s = std::sqrt(s);
    for (auto& x : v) x /= s;
    return v;
  }
}

/// Point on the boundary of scale * {x | x^T Q^-1 x <= 1}.
Vector on_q_boundary(std::mt19937_64& rng, const SymMatrix& q, double scale) {
  const Vector d = unit_sphere(rng, q.dim());
  if (scale == 0.0) return Vector(q.dim(), 0.0);
  const auto ch = cholesky_psd(q, 0.0);
  if (!ch.psd) throw InputError("simulate: input bound is not positive semidefinite");
  Vector x = (*ch.factor) * d;
  for (auto& v : x) v *= scale;
  return x;
}

/// Point on the boundary of scale * {x | x^T P x <= level}.
Vector on_p_boundary(std::mt19937_64& rng, const EllipsoidP& e, double scale) {
  Vector d = unit_sphere(rng, e.P.dim());
  if (scale == 0.0) return Vector(d.size(), 0.0);
  const double s = scale * std::sqrt(e.level / e.value(d));
  for (auto& v : d) v *= s;
  return d;
}

void add_columns(std::vector<std::string>& cols, const std::string& base, std::size_t dim) {
  if (dim == 1) {
    cols.push_back(base);
    return;
  }
  for (std::size_t i = 0; i < dim; ++i) cols.push_back(base + "[" + std::to_string(i) + "]");
}

void append(std::vector<double>& row, const Vector& v) { row.insert(row.end(), v.begin(), v.end()); }

double norm2(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

bool is_identity(const Matrix& x) {
  if (x.rows() != x.cols()) return false;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (x(i, j) != (i == j ? 1.0 : 0.0)) return false;
  return true;
}

Vector concat(std::initializer_list<const Vector*> parts) {
  Vector out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

}  // namespace

Trace simulate(const FdModel& m, const CertificateBundle& b, const Scenario& s) {
  s.validate();
  const IrProgram ir = lower(m, b);
  Machine mc(ir);
  const std::size_t n = m.plant.state_dim();
  const std::size_t k_in = m.plant.input_dim();
  const Matrix X = s.fault_X.value_or(m.fault.X);
  if (X.rows() != k_in || X.cols() != k_in) throw DimensionError("scenario: fault_X must be square of the input dimension");
  const bool degrading = !is_identity(X);
  const Matrix I = Matrix::identity(k_in);
  const Kernel nominal = kernel(hstack({m.plant.A, m.plant.B}), {});
  const Kernel faulty = kernel(hstack({m.plant.A, m.plant.B * X}), {});
  const Kernel clipped = kernel(hstack({m.plant.A, m.plant.B, m.plant.B * (I - X)}), {});
  const double sigma = b.detector.sigma;

  std::mt19937_64 rng(s.seed);
  Vector x = on_p_boundary(rng, b.detector.nominal, s.initial_scale);

  Trace t;
  t.program = ir.name;
  t.scenario = s;
  t.columns = {"step", "fault"};
  add_columns(t.columns, "yc", m.controller.R.cols());
  add_columns(t.columns, "x", n);
  add_columns(t.columns, "xc", m.controller.A.rows());
  add_columns(t.columns, "xhat", n);
  add_columns(t.columns, "u", k_in);
  add_columns(t.columns, "y", m.plant.output_dim());
  add_columns(t.columns, "r", m.plant.output_dim());
  t.columns.push_back("r_norm");
  add_columns(t.columns, "e", n);
  add_columns(t.columns, "f", k_in);
  for (const char* c : {"alarm", "v_nominal", "v_faulty", "in_nominal", "in_faulty"}) t.columns.push_back(c);
  t.rows.reserve(s.steps);

  Vector next(n);
  for (std::size_t k = 0; k < s.steps; ++k) {
    const Vector yc = on_q_boundary(rng, b.nominal.reference_q, s.reference_scale);
    const Vector xc = mc.get("xc");
    mc.set("yc", yc);
    mc.set("xp", x);
    mc.step();
    const Vector u = mc.get("u");
    const Vector r = mc.get("r");
    const Vector e = mc.get("error_states");
    const bool active = degrading && s.fault_start && k >= *s.fault_start;
    Vector f(k_in, 0.0);
    if (active) {
      for (std::size_t i = 0; i < k_in; ++i) f[i] = -u[i];
      const double fn = norm2(f);
      if (s.clip_fault && fn > sigma)
        for (auto& v : f) v *= sigma / fn;
    }
    const double vn = b.detector.nominal.value(e);
    const double vf = b.detector.faulty.value(e);

    std::vector<double> row;
    row.reserve(t.columns.size());
    row.push_back(static_cast<double>(k));
    row.push_back(active ? 1.0 : 0.0);
    append(row, yc);
    append(row, x);
    append(row, xc);
    append(row, mc.get("xhat"));
    append(row, u);
    append(row, mc.get("y"));
    append(row, r);
    row.push_back(norm2(r));
    append(row, e);
    append(row, f);
    append(row, mc.get("alarm"));
    row.push_back(vn);
    row.push_back(vf);
    row.push_back(vn <= b.detector.nominal.level * (1.0 + kMembershipTol) ? 1.0 : 0.0);
    row.push_back(vf <= b.detector.faulty.level * (1.0 + kMembershipTol) ? 1.0 : 0.0);
    t.rows.push_back(std::move(row));

    if (!active) {
      const Vector v = concat({&x, &u});
      apply(nominal, v.data(), next.data());
    } else if (s.clip_fault) {
      const Vector v = concat({&x, &u, &f});
      apply(clipped, v.data(), next.data());
    } else {
      const Vector v = concat({&x, &u});
      apply(faulty, v.data(), next.data());
    }
    x = next;
  }
  return t;
}

Trace simulate(const LoopModel& m, const LoopCertificate& c, const Scenario& s) {
  s.validate();
  if (s.fault_start) throw InputError("scenario: a plain loop has no fault to inject");
  const IrProgram ir = lower(m, c);
  Machine mc(ir);
  std::mt19937_64 rng(s.seed);
  Vector x = on_p_boundary(rng, c.invariant, s.initial_scale);

  Trace t;
  t.program = ir.name;
  t.scenario = s;
  t.columns = {"step"};
  add_columns(t.columns, m.input_var, m.B.cols());
  add_columns(t.columns, m.state_var, m.A.rows());
  t.columns.push_back("v_nominal");
  t.columns.push_back("in_nominal");
  t.rows.reserve(s.steps);
  for (std::size_t k = 0; k < s.steps; ++k) {
    const Vector in = on_q_boundary(rng, c.input_q, s.reference_scale);
    const double v = c.invariant.value(x);
    std::vector<double> row{static_cast<double>(k)};
    append(row, in);
    append(row, x);
    row.push_back(v);
    row.push_back(v <= c.invariant.level * (1.0 + kMembershipTol) ? 1.0 : 0.0);
    t.rows.push_back(std::move(row));
    mc.set(m.input_var, in);
    mc.set(m.state_var, x);
    mc.step();
    x = mc.get(m.state_var);
  }
  return t;
}

Trace simulate(const AnyModel& m, const AnyBundle& b, const Scenario& s) {
  if (const auto* fd = std::get_if<FdModel>(&m)) {
    const auto* cb = std::get_if<CertificateBundle>(&b);
    if (!cb) throw InputError("simulate: fault-detection model needs a fault-detection bundle");
    return simulate(*fd, *cb, s);
  }
  const auto* lc = std::get_if<LoopCertificate>(&b);
  if (!lc) throw InputError("simulate: loop model needs a loop certificate");
  return simulate(std::get<LoopModel>(m), *lc, s);
}

namespace {

DetectionMetrics base_metrics(const Trace& t) {
  DetectionMetrics d;
  d.steps = t.rows.size();
  d.fault_start = t.scenario.fault_start;
  const std::size_t split = d.fault_start.value_or(d.steps);
  const std::size_t vn = t.column("v_nominal");
  const std::size_t in = t.column("in_nominal");
  for (std::size_t k = 0; k < std::min(split, d.steps); ++k) {
    d.max_v_nominal = std::max(d.max_v_nominal, t.rows[k][vn]);
    if (t.rows[k][in] == 0.0) ++d.nominal_exits;
  }
  return d;
}

}  // namespace

DetectionMetrics detection_metrics(const Trace& t, const CertificateBundle& b) {
  DetectionMetrics d = base_metrics(t);
  d.nominal_level = b.detector.nominal.level;
  d.faulty_level = b.detector.faulty.level;
  d.r_th = b.detector.r_th;
  d.sigma = b.detector.sigma;
  const std::size_t split = d.fault_start.value_or(d.steps);
  const std::size_t alarm = t.column("alarm");
  const std::size_t vf = t.column("v_faulty");
  const std::size_t in = t.column("in_faulty");
  const auto fcols = t.columns_of("f");
  for (std::size_t k = 0; k < d.steps; ++k) {
    const auto& row = t.rows[k];
    if (row[alarm] != 0.0) {
      ++d.alarms;
      if (k < split) ++d.false_alarms;
      else if (!d.first_alarm) d.first_alarm = k;
    }
    if (k >= split) {
      d.max_v_faulty = std::max(d.max_v_faulty, row[vf]);
      if (row[in] == 0.0) ++d.faulty_exits;
    }
    double acc = 0.0;
    for (auto c : fcols) acc += row[c] * row[c];
    const double fn = std::sqrt(acc);
    d.max_fault_norm = std::max(d.max_fault_norm, fn);
    if (fn > d.sigma * (1.0 + kMembershipTol)) ++d.sigma_exceeded;
  }
  if (d.first_alarm && d.fault_start) d.latency = *d.first_alarm - *d.fault_start;
  return d;
}

DetectionMetrics detection_metrics(const Trace& t, const LoopCertificate& c) {
  DetectionMetrics d = base_metrics(t);
  d.nominal_level = c.invariant.level;
  return d;
}

DetectionMetrics detection_metrics(const Trace& t, const AnyBundle& b) {
  return std::visit([&](const auto& x) { return detection_metrics(t, x); }, b);
}

std::vector<DetectionMetrics> simulate_batch(const AnyModel& m, const AnyBundle& b, const Scenario& base,
                                             const std::vector<std::uint64_t>& seeds, unsigned threads) {
  std::vector<DetectionMetrics> out(seeds.size());
  std::vector<std::string> errors(seeds.size());
  auto run = [&](std::size_t i) {
    try {
      Scenario s = base;
      s.seed = seeds[i];
      out[i] = detection_metrics(simulate(m, b, s), b);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(seeds.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < seeds.size(); i += n) run(i);
    });
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (!e.empty()) throw InputError("simulate batch: " + e);
  return out;
}

std::string trace_csv(const Trace& t) {
  std::string s;
  for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
  s += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += textfmt::format_number(row[i]);
    }
    s += "\n";
  }
  return s;
}

void write_trace_csv(const Trace& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << trace_csv(t);
  if (!out) throw InputError("failed writing " + path);
}

Trace parse_trace_csv(const std::string& text) {
  Trace t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(l);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!l.empty() && l.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (t.columns.empty()) {
      t.columns = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.columns.size())
      throw ParseError(lineno, "trace row has " + std::to_string(cells.size()) + " fields, expected " +
                                   std::to_string(t.columns.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || *end != '\0')
        throw ParseError(lineno, "bad number '" + c + "' in trace");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw ParseError(lineno, "trace has no header");
  return t;
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trace_csv(ss.str());
}

namespace {

nlohmann::ordered_json opt(const std::optional<std::size_t>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string metrics_json(const DetectionMetrics& m) {
  nlohmann::ordered_json j;
  j["steps"] = m.steps;
  j["fault_start"] = opt(m.fault_start);
  j["alarms"] = m.alarms;
  j["false_alarms"] = m.false_alarms;
  j["first_alarm"] = opt(m.first_alarm);
  j["latency"] = opt(m.latency);
  j["max_v_nominal"] = m.max_v_nominal;
  j["max_v_faulty"] = m.max_v_faulty;
  j["nominal_level"] = m.nominal_level;
  j["faulty_level"] = m.faulty_level;
  j["nominal_exits"] = m.nominal_exits;
  j["faulty_exits"] = m.faulty_exits;
  j["r_th"] = m.r_th;
  j["sigma"] = m.sigma;
  j["max_fault_norm"] = m.max_fault_norm;
  j["sigma_exceeded"] = m.sigma_exceeded;
  return j.dump(2) + "\n";
}

namespace {

nlohmann::ordered_json ellipse(const std::string& name, const EllipsoidP& e, std::size_t i, std::size_t j,
                               std::size_t points) {
  const SymMatrix q = p_to_q(e).Q;
  const SymMatrix q2{{q(i, i), q(i, j)}, {q(j, i), q(j, j)}};
  const auto ch = cholesky_psd(q2, 0.0);
  if (!ch.psd) throw DegeneracyError("plot: projected set is not positive semidefinite");
  const Matrix& l = *ch.factor;
  auto pts = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k <= points; ++k) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(points);
    const double c = std::cos(th);
    const double s = std::sin(th);
    pts.push_back({l(0, 0) * c, l(1, 0) * c + l(1, 1) * s});
  }
  nlohmann::ordered_json o;
  o["name"] = name;
  o["level"] = e.level;
  o["points"] = pts;
  return o;
}

nlohmann::ordered_json series(const Trace& t, std::size_t from, std::size_t to, std::size_t cx, std::size_t cy,
                              std::size_t max_points) {
  auto pts = nlohmann::ordered_json::array();
  if (to <= from) return pts;
  const std::size_t stride = std::max<std::size_t>(1, (to - from + max_points - 1) / max_points);
  for (std::size_t k = from; k < to; k += stride) pts.push_back({t.rows[k][cx], t.rows[k][cy]});
  return pts;
}

}  // namespace

std::string plot_json(const Trace& t, const AnyBundle& b, std::size_t i, std::size_t j, std::size_t boundary_points,
                      std::size_t max_points) {
  if (boundary_points < 3 || max_points == 0) throw InputError("plot: too few points requested");
  nlohmann::ordered_json out;
  out["program"] = t.program;
  const std::size_t steps = t.rows.size();
  const std::size_t split = std::min(t.scenario.fault_start.value_or(steps), steps);
  if (const auto* cb = std::get_if<CertificateBundle>(&b)) {
    const auto cols = t.columns_of("e");
    if (i >= cols.size() || j >= cols.size() || i == j) throw InputError("plot: bad error coordinates");
    out["axes"] = {t.columns[cols[i]], t.columns[cols[j]]};
    out["sets"] = {ellipse("nominal", cb->detector.nominal, i, j, boundary_points),
                   ellipse("faulty", cb->detector.faulty, i, j, boundary_points)};
    out["trajectory"] = {{"nominal", series(t, 0, split, cols[i], cols[j], max_points)},
                         {"faulty", series(t, split, steps, cols[i], cols[j], max_points)}};
  } else {
    const auto& c = std::get<LoopCertificate>(b);
    const std::string state = c.invariant.vars.empty() ? "x" : c.invariant.vars.front();
    if (c.invariant.P.dim() == 1) {
      // One state: the set is an interval, drawn against time.
      const std::size_t cx = t.column("step");
      const std::size_t cy = t.columns_of(state.substr(0, state.find('[')))[0];
      const double half = std::sqrt(c.invariant.level / c.invariant.P(0, 0));
      out["axes"] = {"step", t.columns[cy]};
      out["sets"] = {{{"name", "invariant"}, {"level", c.invariant.level}, {"bounds", {-half, half}}}};
      out["trajectory"] = {{"nominal", series(t, 0, steps, cx, cy, max_points)}};
    } else {
      const auto cols = t.columns_of(state.substr(0, state.find('[')));
      if (i >= cols.size() || j >= cols.size() || i == j) throw InputError("plot: bad state coordinates");
      out["axes"] = {t.columns[cols[i]], t.columns[cols[j]]};
      out["sets"] = {ellipse("invariant", c.invariant, i, j, boundary_points)};
      out["trajectory"] = {{"nominal", series(t, 0, steps, cols[i], cols[j], max_points)}};
    }
  }
  return out.dump(2) + "\n";
}

}  // namespace fdcert
