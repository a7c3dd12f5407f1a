#include "fdcert/checker.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "fdcert/error.hpp"

namespace fdcert {

std::string to_string(Status s) {
  switch (s) {
    case Status::Proved: return "proved";
    case Status::Failed: return "failed";
    case Status::Error: return "error";
  }
  return "error";
}

namespace {

struct Bad : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::size_t position(const VarList& vars, const std::string& name) {
  const auto it = std::find(vars.begin(), vars.end(), name);
  if (it == vars.end()) throw Bad("variable " + name + " is not constrained by the precondition");
  return static_cast<std::size_t>(it - vars.begin());
}

void no_duplicates(const VarList& vars, const char* what) {
  VarList s = vars;
  std::sort(s.begin(), s.end());
  const auto it = std::adjacent_find(s.begin(), s.end());
  if (it != s.end()) throw Bad(std::string(what) + " lists " + *it + " twice");
}

void shape(const QForm& q, const char* what) {
  if (q.Q.dim() != q.vars.size())
    throw Bad(std::string(what) + ": " + std::to_string(q.vars.size()) + " variables for a " +
              std::to_string(q.Q.dim()) + "-dimensional matrix");
  if (!q.Q.is_finite()) throw Bad(std::string(what) + " has non-finite entries");
}

/// Q of {v_1 in E(Q_1)} x {v_2 in E(Q_2)} after the weighted S-procedure
/// relaxation: blockdiag(Q_1 / w_1, Q_2 / w_2).
QForm join(const QForm& a, double wa, const QForm& b, double wb) {
  const std::size_t na = a.vars.size();
  const std::size_t nb = b.vars.size();
  Matrix m(na + nb, na + nb);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < na; ++j) m(i, j) = a.Q(i, j) / wa;
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j) m(na + i, na + j) = b.Q(i, j) / wb;
  VarList vars = a.vars;
  vars.insert(vars.end(), b.vars.begin(), b.vars.end());
  return {vars, SymMatrix(m)};
}

/// Projection onto `keep` (a principal submatrix of Q).
SymMatrix shadow(const QForm& q, const VarList& keep) {
  std::vector<std::size_t> idx;
  for (const auto& k : keep) idx.push_back(position(q.vars, k));
  return principal(q.Q, idx);
}

/// M Q M^T.
SymMatrix image_of(const Matrix& m, const SymMatrix& q) {
  const Matrix mq = m * q.matrix();
  return SymMatrix(mq * m.transpose());
}

struct Margin {
  double abs = 0.0;
  double rel = 0.0;
};

/// lambda_min(post - image), normalized by ||image|| so that scaling the post
/// by c < 1 of an exact image reads c - 1.
Margin margin_of(const SymMatrix& image, const SymMatrix& post) {
  Margin m;
  m.abs = lambda_min(post - image);
  double scale = image.norm();
  if (!(scale > 0.0)) scale = post.norm();
  if (!(scale > 0.0)) scale = 1.0;
  m.rel = m.abs / scale;
  return m;
}

Verdict start(const Obligation& o) {
  Verdict v;
  v.id = o.id;
  v.label = o.label;
  v.behavior = o.behavior;
  v.tactic = o.tactic;
  return v;
}

/// Joint precondition and image; throws Bad on malformed obligations.
Verdict evaluate(const Obligation& o, const Multipliers& mult, double tol) {
  Verdict v = start(o);
  if (o.T.rows() != o.out_vars.size() || o.T.cols() != o.in_vars.size())
    throw Bad("T is " + std::to_string(o.T.rows()) + "x" + std::to_string(o.T.cols()) + " for " +
              std::to_string(o.in_vars.size()) + " inputs and " + std::to_string(o.out_vars.size()) + " outputs");
  if (!o.T.is_finite()) throw Bad("T has non-finite entries");
  if (o.b.size() != o.out_vars.size()) throw Bad("offset length differs from the output count");
  if (std::any_of(o.b.begin(), o.b.end(), [](double x) { return x != 0.0; }))
    throw Bad("nonzero offsets are outside the centred-ellipsoid rule");
  for (const auto& p : o.pre) shape(p.set, "precondition");
  shape(o.post, "postcondition");

  QForm joint;
  if (o.tactic == Tactic::AffineEllipsoid) {
    if (o.pre.size() != 1) throw Bad("AffineEllipsoid takes exactly one precondition");
    joint = o.pre[0].set;
  } else {
    if (o.pre.size() != 2) throw Bad("SProcedure takes exactly two preconditions");
    double w1 = 0.0;
    double w2 = 0.0;
    if (o.rule == "bounded_input") {
      if (!(mult.alpha > 0.0 && mult.alpha < 1.0)) throw Bad("bounded_input needs 0 < alpha < 1");
      w1 = 1.0 - mult.alpha;
      w2 = mult.alpha;
    } else if (o.rule == "error_split") {
      if (!(mult.alpha > 0.0 && mult.gamma > 0.0 && mult.alpha + mult.gamma < 1.0))
        throw Bad("error_split needs alpha > 0, gamma > 0 and alpha + gamma < 1");
      w1 = mult.gamma;
      w2 = 1.0 - mult.alpha - mult.gamma;
    } else {
      throw Bad("unknown combination rule '" + o.rule + "'");
    }
    joint = join(o.pre[0].set, w1, o.pre[1].set, w2);
  }
  no_duplicates(joint.vars, "precondition");

  const VarList in = rename(o.in_vars, o.assumptions);
  const VarList out = rename(o.out_vars, o.assumptions);
  Matrix sel(in.size(), joint.vars.size());
  for (std::size_t i = 0; i < in.size(); ++i) sel(i, position(joint.vars, in[i])) = 1.0;
  const Matrix t = o.T * sel;

  Matrix m = t;
  VarList vars = out;
  if (o.stacked) {
    const std::size_t n = joint.vars.size();
    m = Matrix(n + t.rows(), n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    for (std::size_t i = 0; i < t.rows(); ++i)
      for (std::size_t j = 0; j < n; ++j) m(n + i, j) = t(i, j);
    vars = joint.vars;
    vars.insert(vars.end(), out.begin(), out.end());
  }
  no_duplicates(vars, "postcondition");
  if (vars != o.post.vars) throw Bad("postcondition variables do not match the statement's image");

  const Margin mg = margin_of(image_of(m, joint.Q), o.post.Q);
  v.abs_margin = mg.abs;
  v.margin = mg.rel;
  if (mg.rel >= -tol) {
    v.status = Status::Proved;
  } else {
    v.status = Status::Failed;
    v.message = "image is not inside the postcondition";
  }
  return v;
}

Verdict guarded(const Obligation& o, const Multipliers& m, double tol) {
  try {
    return evaluate(o, m, tol);
  } catch (const std::exception& e) {
    Verdict v = start(o);
    v.status = Status::Error;
    v.margin = v.abs_margin = std::nan("");
    v.message = e.what();
    return v;
  }
}

Verdict wrong_tactic(const Obligation& o, const char* expected) {
  Verdict v = start(o);
  v.status = Status::Error;
  v.margin = v.abs_margin = std::nan("");
  v.message = std::string("tactic is ") + to_string(o.tactic) + ", expected " + expected;
  return v;
}

}  // namespace

Verdict check_affine(const Obligation& o, double tol) {
  if (o.tactic != Tactic::AffineEllipsoid) return wrong_tactic(o, "AffineEllipsoid");
  return guarded(o, {}, tol);
}

Verdict check_sproc(const Obligation& o, const Multipliers& m, double tol) {
  if (o.tactic != Tactic::SProcedure) return wrong_tactic(o, "SProcedure");
  return guarded(o, m, tol);
}

Verdict check_sproc(const Obligation& o, double tol) { return check_sproc(o, {o.alpha, o.gamma}, tol); }

Verdict check_obligation(const Obligation& o, double tol) {
  return o.tactic == Tactic::AffineEllipsoid ? check_affine(o, tol) : check_sproc(o, tol);
}

// ---------------------------------------------------------------------------

namespace {

bool behavior_fits(const std::string& source, const std::string& target) {
  return source.empty() || source == target;
}

/// Every precondition piece must follow from where it claims to come from,
/// and an invariant-valued post must lie inside the declared invariant.
std::string link(const ObligationSet& set, std::size_t index, double tol) {
  const Obligation& o = set.obligations[index];
  auto inside = [&](const QForm& from, const QForm& to, const std::string& what) -> std::string {
    SymMatrix s;
    try {
      s = shadow(from, to.vars);
    } catch (const Bad& e) {
      return what + ": " + e.what();
    }
    const Margin m = margin_of(s, to.Q);
    if (m.rel < -tol) return what + " is not implied by its source (margin " + textfmt::format_number(m.rel) + ")";
    return {};
  };
  for (std::size_t k = 0; k < o.pre.size(); ++k) {
    const auto& piece = o.pre[k];
    const std::string what = "precondition " + std::to_string(k + 1) + " (" + piece.source + ")";
    const auto pos = piece.source.find(':');
    const std::string kind = piece.source.substr(0, pos);
    const std::string name = pos == std::string::npos ? "" : piece.source.substr(pos + 1);
    if (kind == "obligation") {
      std::size_t j = 0;
      while (j < index && set.obligations[j].id != name) ++j;
      if (j == index) return what + ": no earlier obligation " + name;
      if (!behavior_fits(set.obligations[j].behavior, o.behavior)) return what + ": behavior mismatch";
      if (auto msg = inside(set.obligations[j].post, piece.set, what); !msg.empty()) return msg;
    } else if (kind == "invariant" || kind == "assume") {
      const InvariantDecl* d = set.find_invariant(name);
      const std::string want = kind == "assume" ? "assumption" : "invariant";
      if (!d || d->kind != want) return what + ": no " + want + " named " + name;
      if (!behavior_fits(d->behavior, o.behavior)) return what + ": behavior mismatch";
      if (auto msg = inside(d->set, piece.set, what); !msg.empty()) return msg;
    } else {
      return what + ": unknown source";
    }
  }
  if (!o.post_source.empty()) {
    const auto pos = o.post_source.find(':');
    const std::string name = pos == std::string::npos ? "" : o.post_source.substr(pos + 1);
    const InvariantDecl* d = set.find_invariant(name);
    if (o.post_source.rfind("invariant:", 0) != 0 || !d || d->kind != "invariant")
      return "postcondition source " + o.post_source + " is not a declared invariant";
    if (d->set.vars != o.post.vars) return "postcondition variables differ from invariant " + name;
    const Margin m = margin_of(o.post.Q, d->set.Q);
    if (m.rel < -tol) return "postcondition is larger than invariant " + name;
  }
  return {};
}

}  // namespace

Report check_set(const ObligationSet& set, const CheckOptions& opt) {
  if (!(opt.tol > 0.0)) throw InputError("check: tolerance must be positive");
  Report r;
  r.program = set.program;
  r.tol = opt.tol;
  const std::size_t n = set.obligations.size();
  r.verdicts.resize(n);
  auto work = [&](std::size_t i) {
    Verdict v = check_obligation(set.obligations[i], opt.tol);
    if (opt.link && v.status == Status::Proved) {
      const std::string msg = link(set, i, opt.tol);
      if (!msg.empty()) {
        v.status = Status::Failed;
        v.message = msg;
      }
    }
    r.verdicts[i] = std::move(v);
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += threads) work(i);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& v : r.verdicts) {
    if (v.status == Status::Proved) ++r.proved;
    else if (v.status == Status::Failed) ++r.failed;
    else ++r.errors;
  }
  std::map<std::string, bool> closed;
  for (const auto& d : set.invariants)
    if (d.kind == "invariant") closed[d.name] = false;
  for (const auto& o : set.obligations)
    if (o.post_source.rfind("invariant:", 0) == 0) closed[o.post_source.substr(10)] = true;
  for (const auto& d : set.invariants)
    if (d.kind == "invariant" && !closed[d.name]) r.problems.push_back("invariant " + d.name + " is never re-established");
  return r;
}

Report check_file(const std::string& path, const CheckOptions& opt) { return check_set(load_obligations(path), opt); }

std::string format_report(const Report& r) {
  std::ostringstream out;
  out << "program " << (r.program.empty() ? "(unnamed)" : r.program) << ", tol " << textfmt::format_number(r.tol)
      << "\n";
  for (const auto& v : r.verdicts) {
    char margin[32];
    std::snprintf(margin, sizeof margin, "%+.3e", v.margin);
    out << "  " << v.id << "  " << to_string(v.status) << "  margin " << margin << "  " << to_string(v.tactic)
        << "  " << v.label;
    if (!v.behavior.empty()) out << " [" << v.behavior << "]";
    if (!v.message.empty()) out << "  -- " << v.message;
    out << "\n";
  }
  for (const auto& p : r.problems) out << "  problem: " << p << "\n";
  out << r.verdicts.size() << " obligations: " << r.proved << " proved, " << r.failed << " failed, " << r.errors
      << " errors\n";
  return out.str();
}

std::string verdicts_json(const Report& r) {
  nlohmann::ordered_json j;
  j["program"] = r.program;
  j["tol"] = r.tol;
  j["summary"] = {{"total", r.verdicts.size()}, {"proved", r.proved}, {"failed", r.failed}, {"errors", r.errors}};
  j["problems"] = r.problems;
  auto& list = j["verdicts"] = nlohmann::ordered_json::array();
  for (const auto& v : r.verdicts) {
    nlohmann::ordered_json e;
    e["id"] = v.id;
    e["label"] = v.label;
    e["behavior"] = v.behavior;
    e["tactic"] = to_string(v.tactic);
    e["status"] = to_string(v.status);
    if (std::isfinite(v.margin)) {
      e["margin"] = v.margin;
      e["abs_margin"] = v.abs_margin;
    } else {
      e["margin"] = nullptr;
      e["abs_margin"] = nullptr;
    }
    e["message"] = v.message;
    list.push_back(e);
  }
  return j.dump(2) + "\n";
}

int exit_code(const Report& r) { return r.ok() ? 0 : 1; }

}  // namespace fdcert
