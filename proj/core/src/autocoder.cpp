#include "fdcert/autocoder.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "fdcert/error.hpp"

namespace fdcert {

const IrVar& IrProgram::var(const std::string& key) const {
  for (const auto& v : vars)
    if (v.name == key) return v;
  throw InputError("program " + name + ": undeclared variable '" + key + "'");
}

const Behavior& IrProgram::behavior(const std::string& key) const {
  for (const auto& b : behaviors)
    if (b.name == key) return b;
  throw InputError("program " + name + ": unknown behavior '" + key + "'");
}

VarList IrProgram::elements(const std::string& base) const { return vector_vars(base, var(base).dim); }

VarList IrProgram::elements(const VarList& bases) const {
  VarList out;
  for (const auto& b : bases) {
    const VarList e = elements(b);
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

std::string c_identifier(const std::string& name) {
  std::string out;
  for (char ch : name) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) out = "p_" + out;
  return out;
}

namespace {

const char* kNominal = "nominal_ellipsoid";
const char* kFaulty = "faulty_ellipsoid";

SymMatrix q_of(const EllipsoidP& e) { return p_to_q(e).Q; }

IrView view(std::string behavior, VarList in, VarList out, Matrix t, std::vector<PreRef> pre, bool stacked) {
  IrView v;
  v.behavior = std::move(behavior);
  v.in = std::move(in);
  v.out = std::move(out);
  v.T = std::move(t);
  v.b.assign(v.T.rows(), 0.0);
  v.pre = std::move(pre);
  v.stacked = stacked;
  return v;
}

IrView bounded_input(IrView v, double alpha) {
  v.tactic = Tactic::SProcedure;
  v.rule = "bounded_input";
  v.alpha = alpha;
  return v;
}

IrAssign assign(VarList out, VarList in, Matrix t, bool ghost = false) {
  IrAssign a;
  a.out = std::move(out);
  a.in = std::move(in);
  a.b.assign(t.rows(), 0.0);
  a.T = std::move(t);
  a.ghost = ghost;
  return a;
}

Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c); }
Matrix eye(std::size_t n) { return Matrix::identity(n); }

}  // namespace

IrProgram lower(const FdModel& m, const CertificateBundle& bd) {
  bd.validate();
  const DerivedSystems d = assemble(m);
  const auto& ctl = m.controller;
  const std::size_t n = m.plant.state_dim();
  const std::size_t p = m.plant.output_dim();
  const std::size_t k = m.plant.input_dim();
  const std::size_t nc = ctl.state_dim();
  const std::size_t q = ctl.reference_dim();

  IrProgram ir;
  ir.name = m.name;
  ir.vars = {
      {"yc", q, Storage::Io},
      {"xp", n, Storage::Io},
      {"u", k, Storage::Io},
      {"r", p, Storage::Io},
      {"xhat", n, Storage::Io},
      {"alarm", 1, Storage::Io, true},
      {"xc", nc, Storage::State},
      {"observer_states", n, Storage::State},
      {"y", p, Storage::Local},
      {"observer_states_next", n, Storage::Local},
      {"xc_next", nc, Storage::Local},
      {"nominal_state", n, Storage::Ghost},
      {"faulty_state", n, Storage::Ghost},
      {"nominal_state_next", n, Storage::Ghost},
      {"faulty_state_next", n, Storage::Ghost},
      {"error_states", n, Storage::Ghost},
      {"f", k, Storage::Ghost},
  };
  struct Mode {
    const char* behavior;
    const char* tag;
    const ModeCertificates* cert;
    Matrix x;
  };
  const std::vector<Mode> modes = {{kNominal, "nominal", &bd.nominal, eye(k)},
                                   {kFaulty, "faulty", &bd.faulty, m.fault.X}};
  for (const auto& md : modes)
    ir.behaviors.push_back({md.behavior, {{"xp", std::string(md.tag) + "_state"}}});

  auto decl = [&](std::string name, std::string behavior, std::string kind, const VarList& bases, SymMatrix qm) {
    ir.invariants.push_back({std::move(name), std::move(behavior), std::move(kind), {ir.elements(bases), std::move(qm)}});
  };
  for (const auto& md : modes) {
    const std::string t = md.tag;
    decl("closed_" + t, md.behavior, "invariant", {t + "_state", "xc"}, q_of(md.cert->closed));
    decl("observer_" + t, md.behavior, "invariant", {"observer_states"}, q_of(md.cert->observer));
  }
  decl("detector_nominal", kNominal, "invariant", {"error_states"}, q_of(bd.detector.nominal));
  decl("detector_faulty", kFaulty, "invariant", {"error_states"}, q_of(bd.detector.faulty));
  decl("residual_bound", kNominal, "invariant", {"r"},
       SymMatrix::scaled_identity(p, bd.detector.r_th * bd.detector.r_th));
  decl("reference", "", "assumption", {"yc"}, bd.nominal.reference_q);
  decl("fault_bound", kFaulty, "assumption", {"f"}, SymMatrix::scaled_identity(k, bd.detector.sigma * bd.detector.sigma));

  const Matrix& c = m.plant.C;
  const Matrix& a_hat = d.observer.A_hat;
  const Matrix sense = vstack({hstack({c, zeros(p, nc)}), hstack({ctl.D * ctl.M, ctl.C})});
  const Matrix err = hstack({eye(n), -eye(n)});
  const Matrix resid = hstack({eye(p), -c});
  const Matrix obs = hstack({a_hat, m.plant.B, m.L});
  const Matrix ctrl = hstack({ctl.B * ctl.M, ctl.A, ctl.R});

  auto each_mode = [&](IrStatement& s, auto&& make) {
    for (const auto& md : modes) s.views.push_back(make(md));
  };

  IrStatement s1{"sense_and_control", StmtKind::AffineAssign, {assign({"y", "u"}, {"xp", "xc"}, sense)}, {}, {}};
  each_mode(s1, [&](const Mode& md) {
    return view(md.behavior, {"xp", "xc"}, {"y", "u"}, sense,
                {{"invariant:closed_" + std::string(md.tag), {}}}, true);
  });

  IrStatement s2{"publish_estimate", StmtKind::AffineAssign, {assign({"xhat"}, {"observer_states"}, eye(n))}, {}, {}};
  each_mode(s2, [&](const Mode& md) {
    return view(md.behavior, {"observer_states"}, {"xhat"}, eye(n),
                {{"invariant:observer_" + std::string(md.tag), {}}}, true);
  });

  IrStatement s3{"error_states", StmtKind::GhostAffineAssign,
                 {assign({"error_states"}, {"xp", "observer_states"}, err, true)}, {}, {}};
  each_mode(s3, [&](const Mode& md) {
    IrView v = view(md.behavior, {"xp", "observer_states"}, {"error_states"}, err,
                    {{"stmt:sense_and_control", {"xp", "y"}},
                     {"invariant:observer_" + std::string(md.tag), {}}},
                    true);
    v.tactic = Tactic::SProcedure;
    v.rule = "error_split";
    v.alpha = md.cert->split.alpha;
    v.gamma = md.cert->split.gamma;
    return v;
  });

  IrStatement s4{"residual", StmtKind::AffineAssign, {assign({"r"}, {"y", "observer_states"}, resid)}, {}, {}};
  each_mode(s4, [&](const Mode& md) {
    return view(md.behavior, {"y", "observer_states"}, {"r"}, resid,
                {{"stmt:error_states", {"y", "observer_states"}}}, false);
  });

  IrStatement s5{"alarm", StmtKind::AffineAssign, {}, IrAlarm{"r", "alarm", bd.detector.r_th * bd.detector.r_th}, {}};
  {
    IrView v = view(kNominal, {"error_states"}, {"r"}, c, {{"invariant:detector_nominal", {}}}, false);
    v.kind = ObligationKind::Derived;
    v.closes = "residual_bound";
    s5.views.push_back(v);
  }

  IrStatement s6{"observer_update", StmtKind::AffineAssign,
                 {assign({"observer_states_next"}, {"observer_states", "u", "y"}, obs)}, {}, {}};
  each_mode(s6, [&](const Mode& md) {
    return bounded_input(view(md.behavior, {"observer_states", "u", "y"}, {"observer_states_next"}, obs,
                              {{"invariant:observer_" + std::string(md.tag), {}},
                               {"stmt:sense_and_control", {"u", "y"}}},
                              false),
                         md.cert->alpha_observer);
  });

  IrStatement s7{"controller_update", StmtKind::AffineAssign,
                 {assign({"xc_next"}, {"xp", "xc", "yc"}, ctrl)}, {}, {}};
  each_mode(s7, [&](const Mode& md) {
    return bounded_input(view(md.behavior, {"xp", "xc", "yc"}, {"xc_next"}, ctrl,
                              {{"stmt:sense_and_control", {"xp", "xc", "u"}}, {"assume:reference", {}}}, true),
                         md.cert->alpha_closed);
  });

  IrStatement s8{"plant_update", StmtKind::GhostAffineAssign, {}, {}, {}};
  for (const auto& md : modes) {
    const std::string t = md.tag;
    const Matrix plant = hstack({m.plant.A, m.plant.B * md.x});
    IrAssign a = assign({t + "_state_next"}, {t + "_state", "u"}, plant, true);
    a.function = t + "_plant";
    s8.code.push_back(a);
    s8.views.push_back(view(md.behavior, {"xp", "u"}, {t + "_state_next"}, plant,
                            {{"stmt:controller_update", {"xp", "u", "xc_next"}}}, true));
  }

  IrStatement s9{"commit_controller", StmtKind::AffineAssign, {assign({"xc"}, {"xc_next"}, eye(nc))}, {}, {}};
  for (const auto& md : modes) {
    const std::string t = md.tag;
    s9.code.push_back(assign({t + "_state"}, {t + "_state_next"}, eye(n), true));
    s9.views.push_back(view(md.behavior, {t + "_state_next", "xc_next"}, {t + "_state", "xc"}, eye(n + nc),
                            {{"stmt:plant_update", {t + "_state_next", "xc_next"}}}, false));
  }

  IrStatement s10{"commit_observer", StmtKind::AffineAssign,
                  {assign({"observer_states"}, {"observer_states_next"}, eye(n))}, {}, {}};
  each_mode(s10, [&](const Mode& md) {
    return view(md.behavior, {"observer_states_next"}, {"observer_states"}, eye(n),
                {{"stmt:observer_update", {}}}, false);
  });

  IrStatement head{"loop", StmtKind::LoopHead, {}, {}, {}};
  for (const auto& md : modes) {
    const std::string t = md.tag;
    IrView cl = view(md.behavior, {t + "_state", "xc"}, {t + "_state", "xc"}, eye(n + nc),
                     {{"stmt:commit_controller", {}}}, false);
    cl.kind = ObligationKind::Closing;
    cl.closes = "closed_" + t;
    head.views.push_back(cl);
    IrView ob = view(md.behavior, {"observer_states"}, {"observer_states"}, eye(n), {{"stmt:commit_observer", {}}}, false);
    ob.kind = ObligationKind::Closing;
    ob.closes = "observer_" + t;
    head.views.push_back(ob);
  }
  {
    IrView en = view(kNominal, {"error_states"}, {"error_states"}, a_hat, {{"invariant:detector_nominal", {}}}, false);
    en.kind = ObligationKind::Derived;
    en.closes = "detector_nominal";
    head.views.push_back(en);
    IrView ef = bounded_input(view(kFaulty, {"error_states", "f"}, {"error_states"}, hstack({a_hat, d.E}),
                                   {{"invariant:detector_faulty", {}}, {"assume:fault_bound", {}}}, false),
                              bd.detector.alpha_fault);
    ef.kind = ObligationKind::Derived;
    ef.closes = "detector_faulty";
    head.views.push_back(ef);
  }

  ir.body = {s1, s2, s3, s4, s5, s6, s7, s8, s9, s10, head};
  return ir;
}

IrProgram lower(const LoopModel& m, const LoopCertificate& cert) {
  m.validate();
  const std::size_t n = m.A.rows();
  const std::string x = m.state_var;
  const std::string in = m.input_var;
  const std::string xn = x + "_next";
  IrProgram ir;
  ir.name = m.name;
  ir.vars = {{in, m.B.cols(), Storage::Io}, {x, n, Storage::State}, {xn, n, Storage::Local}};
  ir.behaviors = {{"", {}}};
  ir.invariants.push_back({"loop", "", "invariant", {ir.elements(x), p_to_q(cert.invariant).Q}});
  ir.invariants.push_back({"input_bound", "", "assumption", {ir.elements(in), cert.input_q}});

  const Matrix t = hstack({m.A, m.B});
  IrStatement update{"update", StmtKind::AffineAssign, {assign({xn}, {x, in}, t)}, {}, {}};
  update.views.push_back(
      bounded_input(view("", {x, in}, {xn}, t, {{"invariant:loop", {}}, {"assume:input_bound", {}}}, false),
                    cert.alpha));
  IrStatement commit{"commit", StmtKind::AffineAssign, {assign({x}, {xn}, eye(n))}, {}, {}};
  commit.views.push_back(view("", {xn}, {x}, eye(n), {{"stmt:update", {}}}, false));
  IrStatement head{"loop", StmtKind::LoopHead, {}, {}, {}};
  IrView cl = view("", {x}, {x}, eye(n), {{"stmt:commit", {}}}, false);
  cl.kind = ObligationKind::Closing;
  cl.closes = "loop";
  head.views.push_back(cl);
  ir.body = {update, commit, head};
  return ir;
}

IrProgram lower(const AnyModel& m, const AnyBundle& b) {
  if (const auto* fd = std::get_if<FdModel>(&m)) {
    const auto* cb = std::get_if<CertificateBundle>(&b);
    if (!cb) throw InputError("lower: fault-detection model needs a fault-detection bundle");
    return lower(*fd, *cb);
  }
  const auto* lc = std::get_if<LoopCertificate>(&b);
  if (!lc) throw InputError("lower: loop model needs a loop certificate");
  return lower(std::get<LoopModel>(m), *lc);
}

// ---------------------------------------------------------------------------

namespace {

std::pair<std::string, std::string> split_source(const std::string& s) {
  const auto pos = s.find(':');
  if (pos == std::string::npos) throw InputError("malformed precondition source '" + s + "'");
  return {s.substr(0, pos), s.substr(pos + 1)};
}

double relative_margin(const SymMatrix& image, const SymMatrix& post) {
  const double scale = std::max({post.norm(), image.norm(), 1e-300});
  return inclusion_margin(image, post) / scale;
}

std::string where(const std::string& label, const std::string& behavior) {
  return behavior.empty() ? label : label + " (" + behavior + ")";
}

}  // namespace

ObligationSet propagate(const IrProgram& ir, double tol) {
  ObligationSet set;
  set.program = ir.name;
  set.invariants = ir.invariants;
  std::map<std::pair<std::string, std::string>, std::size_t> done;

  auto declared = [&](const std::string& name, const std::string& kind) -> const InvariantDecl& {
    for (const auto& d : ir.invariants)
      if (d.name == name && d.kind == kind) return d;
    throw InputError("program " + ir.name + ": no " + kind + " named '" + name + "'");
  };

  for (const auto& st : ir.body) {
    for (const auto& v : st.views) {
      const auto& aliases = ir.behavior(v.behavior).aliases;
      auto canon = [&](const VarList& bases) { return rename(ir.elements(bases), aliases); };

      std::vector<PrePiece> pieces;
      for (const auto& ref : v.pre) {
        const auto [kind, name] = split_source(ref.source);
        QForm src;
        std::string source = ref.source;
        if (kind == "invariant" || kind == "assume") {
          src = declared(name, kind == "assume" ? "assumption" : "invariant").set;
        } else if (kind == "stmt") {
          auto it = done.find({name, v.behavior});
          if (it == done.end()) it = done.find({name, ""});
          if (it == done.end())
            throw InputError(where(st.label, v.behavior) + ": no earlier statement '" + name + "'");
          const Obligation& o = set.obligations[it->second];
          src = o.post;
          source = "obligation:" + o.id;
        } else {
          throw InputError("unknown precondition source kind '" + kind + "'");
        }
        const VarList want = ref.vars.empty() ? src.vars : canon(ref.vars);
        const EllipsoidQ piece = project({src.Q, src.vars}, want);
        pieces.push_back({source, {piece.vars, piece.Q}});
      }

      EllipsoidQ joint;
      if (pieces.size() == 1) {
        joint = {pieces[0].set.Q, pieces[0].set.vars};
      } else if (pieces.size() == 2) {
        double w1 = 0.0;
        double w2 = 0.0;
        if (v.rule == "bounded_input") {
          w1 = 1.0 - v.alpha;
          w2 = v.alpha;
        } else if (v.rule == "error_split") {
          w1 = v.gamma;
          w2 = 1.0 - v.alpha - v.gamma;
        } else {
          throw InputError(where(st.label, v.behavior) + ": two precondition pieces need a combination rule");
        }
        joint = weighted_join({pieces[0].set.Q, pieces[0].set.vars}, w1, {pieces[1].set.Q, pieces[1].set.vars}, w2);
      } else {
        throw InputError(where(st.label, v.behavior) + ": expected one or two precondition pieces");
      }

      const Matrix map = v.T * selector(joint.vars, canon(v.in));
      const VarList out = canon(v.out);
      const EllipsoidQ image = v.stacked ? stacked_image(joint, map, out) : affine_image(joint, map, out);

      Obligation o;
      o.id = "O" + std::to_string(set.obligations.size() + 1);
      o.behavior = v.behavior;
      o.tactic = v.tactic;
      o.kind = v.kind;
      o.label = st.label;
      o.in_vars = ir.elements(v.in);
      o.out_vars = ir.elements(v.out);
      o.T = v.T;
      o.b = v.b;
      o.stacked = v.stacked;
      o.pre = pieces;
      o.rule = v.rule;
      o.alpha = v.alpha;
      o.gamma = v.gamma;
      o.assumptions = aliases;
      if (!v.closes.empty()) {
        const InvariantDecl& target = declared(v.closes, "invariant");
        if (target.set.vars != image.vars)
          throw InputError(where(st.label, v.behavior) + ": image variables do not match invariant " + v.closes);
        const double margin = relative_margin(image.Q, target.set.Q);
        if (margin < -tol)
          throw AutocodeError(where(st.label, v.behavior) + ": invariant " + v.closes +
                              " is not inductive (relative margin " + textfmt::format_number(margin) + ")");
        o.post = target.set;
        o.post_source = "invariant:" + v.closes;
      } else {
        o.post = {image.vars, image.Q};
      }
      done[{st.label, v.behavior}] = set.obligations.size();
      set.obligations.push_back(std::move(o));
    }
  }
  return set;
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double v) { return textfmt::format_number(v); }

std::string c_type(const IrVar& v) { return v.integer ? "int" : "double"; }

std::string c_base(const IrVar& v) {
  switch (v.storage) {
    case Storage::Io: return "_io_->" + v.name;
    case Storage::State: return "_state_->" + v.name;
    default: return v.name;
  }
}

/// C lvalue of an element name such as "xc[1]" or "input".
std::string c_element(const IrProgram& ir, const std::string& element) {
  const auto br = element.find('[');
  const IrVar& v = ir.var(element.substr(0, br));
  return c_base(v) + (br == std::string::npos ? "" : element.substr(br));
}

std::string c_matrix_literal(const Matrix& t, const std::string& indent) {
  std::string s;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    s += indent + "{";
    for (std::size_t j = 0; j < t.cols(); ++j) s += (j ? ", " : "") + num(t(i, j));
    s += "},\n";
  }
  return s;
}

class Emitter {
 public:
  Emitter(const IrProgram& ir, const ObligationSet& set) : ir_(ir), set_(set), id_(c_identifier(ir.name)) {}

  AnnotatedSource run() {
    std::string step;
    std::string loop;
    std::size_t next = 0;
    for (const auto& st : ir_.body) {
      std::string blocks;
      for (const auto& v : st.views) {
        if (next >= set_.obligations.size()) throw InputError("emit: fewer obligations than contracts");
        const Obligation& o = set_.obligations[next++];
        if (o.label != st.label || o.behavior != v.behavior)
          throw InputError("emit: obligation " + o.id + " does not belong to " + st.label);
        blocks += contract(o, st);
        refs_.push_back(o.id);
      }
      if (st.kind == StmtKind::LoopHead) {
        loop += blocks;
        continue;
      }
      step += blocks;
      step += statement(st);
    }
    if (next != set_.obligations.size()) throw InputError("emit: obligations without a contract");

    std::ostringstream out;
    out << "/* " << ir_.name << ": step function with ellipsoid contracts */\n\n";
    out << structs();
    for (const auto& q : qmats_) out << q;
    out << ghosts();
    out << "void " << id_ << "_step(" << id_ << "_io *_io_, " << id_ << "_state *_state_)\n{\n";
    for (const auto& v : ir_.vars)
      if (v.storage == Storage::Local) out << "  " << c_type(v) << " " << decl(v) << ";\n";
    if (step.size() >= 2 && step.compare(step.size() - 2, 2, "\n\n") == 0) step.pop_back();
    out << "\n" << step << "}\n\n";
    out << "void " << id_ << "_run(" << id_ << "_io *_io_, " << id_ << "_state *_state_, void (*sync)(" << id_
        << "_io *))\n{\n"
        << loop << "  for (;;) {\n    sync(_io_);\n    " << id_ << "_step(_io_, _state_);\n  }\n}\n";
    return {out.str(), refs_};
  }

 private:
  static std::string decl(const IrVar& v) {
    return v.dim == 1 && v.storage != Storage::Ghost ? v.name : v.name + "[" + std::to_string(v.dim) + "]";
  }

  std::string structs() const {
    std::string s;
    for (const auto& [storage, suffix] : {std::pair{Storage::Io, "_io"}, std::pair{Storage::State, "_state"}}) {
      s += "typedef struct {\n";
      for (const auto& v : ir_.vars)
        if (v.storage == storage) s += "  " + c_type(v) + " " + decl(v) + ";\n";
      s += "} " + id_ + suffix + ";\n\n";
    }
    return s;
  }

  std::string ghosts() const {
    std::string s = "/*@\n";
    bool any = false;
    for (const auto& v : ir_.vars)
      if (v.storage == Storage::Ghost) {
        s += "  ghost double " + decl(v) + ";\n";
        any = true;
      }
    s += "*/\n\n";
    if (!any) s.clear();
    for (const auto& st : ir_.body)
      for (const auto& a : st.code)
        if (!a.function.empty()) s += ghost_function(a);
    return s;
  }

  std::string ghost_function(const IrAssign& a) const {
    std::string sig = "void " + a.function + "(";
    bool first = true;
    for (const auto& n : a.in) {
      sig += (first ? "" : ", ") + std::string("const double *") + n;
      first = false;
    }
    for (const auto& n : a.out) sig += ", double *" + n;
    sig += ")";
    auto param = [](const IrVar& v) { return v.name; };
    return "/*@ ghost\n  " + sig + "\n  {\n" + body(a, "    ", param, true) + "  }\n*/\n\n";
  }

  /// Gather, multiply, scatter.
  template <class Name>
  std::string body(const IrAssign& a, const std::string& ind, Name&& name, bool pointers) const {
    const std::size_t ni = a.T.cols();
    const std::size_t no = a.T.rows();
    std::string s = ind + "static const double K[" + std::to_string(no) + "][" + std::to_string(ni) + "] = {\n";
    s += c_matrix_literal(a.T, ind + "  ");
    s += ind + "};\n";
    s += ind + "double v[" + std::to_string(ni) + "], w[" + std::to_string(no) + "];\n";
    s += ind + "int i1, i2;\n";
    std::size_t off = 0;
    for (const auto& n : a.in) {
      const IrVar& v = ir_.var(n);
      const std::string base = name(v);
      if (v.dim == 1 && !pointers && v.storage != Storage::Ghost) {
        s += ind + "v[" + std::to_string(off) + "] = " + base + ";\n";
      } else {
        s += ind + "for (i1 = 0; i1 < " + std::to_string(v.dim) + "; i1++) v[" + std::to_string(off) +
             " + i1] = " + base + "[i1];\n";
      }
      off += v.dim;
    }
    const bool offset = std::any_of(a.b.begin(), a.b.end(), [](double x) { return x != 0.0; });
    s += ind + "for (i1 = 0; i1 < " + std::to_string(no) + "; i1++) {\n";
    s += ind + "  w[i1] = 0.0;\n";
    s += ind + "  for (i2 = 0; i2 < " + std::to_string(ni) + "; i2++) w[i1] += K[i1][i2] * v[i2];\n";
    s += ind + "}\n";
    if (offset) {
      for (std::size_t i = 0; i < no; ++i)
        if (a.b[i] != 0.0) s += ind + "w[" + std::to_string(i) + "] += " + num(a.b[i]) + ";\n";
    }
    off = 0;
    for (const auto& n : a.out) {
      const IrVar& v = ir_.var(n);
      const std::string base = name(v);
      if (v.dim == 1 && !pointers && v.storage != Storage::Ghost) {
        s += ind + base + " = w[" + std::to_string(off) + "];\n";
      } else {
        s += ind + "for (i1 = 0; i1 < " + std::to_string(v.dim) + "; i1++) " + base + "[i1] = w[" +
             std::to_string(off) + " + i1];\n";
      }
      off += v.dim;
    }
    return s;
  }

  std::string statement(const IrStatement& st) const {
    std::string s;
    auto lvalue = [](const IrVar& v) { return c_base(v); };
    for (const auto& a : st.code) {
      if (!a.function.empty()) {
        std::string call = a.function + "(";
        bool first = true;
        for (const auto& n : a.in) {
          call += (first ? "" : ", ") + c_base(ir_.var(n));
          first = false;
        }
        for (const auto& n : a.out) call += ", " + c_base(ir_.var(n));
        s += "  /*@ ghost " + call + "); */\n";
      } else if (a.ghost) {
        s += "  /*@ ghost\n  {\n" + body(a, "    ", lvalue, false) + "  }\n  */\n";
      } else {
        s += "  {\n" + body(a, "    ", lvalue, false) + "  }\n";
      }
    }
    if (st.alarm) {
      const IrVar& r = ir_.var(st.alarm->residual);
      const std::string rv = c_base(r);
      s += "  {\n    double acc = 0.0;\n    int i1;\n";
      s += "    for (i1 = 0; i1 < " + std::to_string(r.dim) + "; i1++) acc += " + rv + "[i1] * " + rv + "[i1];\n";
      s += "    " + c_base(ir_.var(st.alarm->flag)) + " = acc > " + num(st.alarm->threshold_sq) + ";\n  }\n";
    }
    return s + "\n";
  }

  std::string qmat(const SymMatrix& q) {
    const std::size_t n = q.dim();
    std::string body;
    for (std::size_t i = 0; i < n; ++i) {
      body += "    ";
      for (std::size_t j = 0; j < n; ++j) body += num(q(i, j)) + (j + 1 == n ? "" : ", ");
      body += i + 1 == n ? "\n" : ",\n";
    }
    auto it = index_.find(body);
    if (it != index_.end()) return it->second;
    const std::string name = "QMat_" + std::to_string(qmats_.size() + 1);
    const std::string dim = std::to_string(n);
    qmats_.push_back("/*@\n  logic matrix " + name + " = mat_of_" + dim + "x" + dim + "_scalar(\n" + body +
                     "  );\n*/\n");
    index_.emplace(body, name);
    return name;
  }

  std::string vect(const VarList& vars) const {
    std::string s = "vect_of_" + std::to_string(vars.size()) + "_scalar(";
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (i > 0) s += i % 4 == 0 ? ",\n      " : ", ";
      s += c_element(ir_, vars[i]);
    }
    return s + ")";
  }

  std::string contract(const Obligation& o, const IrStatement& st) {
    std::string s = "  /*@\n";
    if (!o.behavior.empty()) s += "    behavior " + o.behavior + ":\n";
    for (const auto& a : o.assumptions)
      s += "    assumes " + c_element(ir_, a.from) + " == " + a.to + ";\n";
    for (const auto& p : o.pre) {
      const bool assumed = p.source.rfind("assume:", 0) == 0;
      s += std::string("    ") + (assumed ? "assumes" : "requires") + " in_ellipsoidQ(" + qmat(p.set.Q) + ", " +
           vect(p.set.vars) + ");\n";
    }
    s += "    ensures in_ellipsoidQ(" + qmat(o.post.Q) + ", " + vect(o.post.vars) + ");\n";
    if (st.alarm && o.kind == ObligationKind::Derived)
      s += "    ensures " + c_base(ir_.var(st.alarm->flag)) + " == 0;\n";
    s += "    @ PROOF_TACTIC (use_strategy (" + to_string(o.tactic) + "));\n  */\n";
    return s;
  }

  const IrProgram& ir_;
  const ObligationSet& set_;
  std::string id_;
  std::vector<std::string> qmats_;
  std::map<std::string, std::string> index_;
  std::vector<std::string> refs_;
};

}  // namespace

AnnotatedSource emit_c_acsl(const IrProgram& ir, const ObligationSet& obligations) {
  return Emitter(ir, obligations).run();
}

}  // namespace fdcert
