#include "fdcert/obligations.hpp"

#include <fstream>

#include "fdcert/error.hpp"

namespace fdcert {

using textfmt::Table;
using textfmt::Value;

std::string to_string(Tactic t) { return t == Tactic::AffineEllipsoid ? "AffineEllipsoid" : "SProcedure"; }

std::string to_string(ObligationKind k) {
  switch (k) {
    case ObligationKind::Step: return "step";
    case ObligationKind::Closing: return "closing";
    case ObligationKind::Derived: return "derived";
  }
  return "step";
}

Tactic parse_tactic(const std::string& s) {
  if (s == "AffineEllipsoid") return Tactic::AffineEllipsoid;
  if (s == "SProcedure") return Tactic::SProcedure;
  throw InputError("unknown tactic '" + s + "'");
}

ObligationKind parse_kind(const std::string& s) {
  if (s == "step") return ObligationKind::Step;
  if (s == "closing") return ObligationKind::Closing;
  if (s == "derived") return ObligationKind::Derived;
  throw InputError("unknown obligation kind '" + s + "'");
}

const Obligation* ObligationSet::find(const std::string& id) const {
  for (const auto& o : obligations)
    if (o.id == id) return &o;
  return nullptr;
}

const InvariantDecl* ObligationSet::find_invariant(const std::string& name) const {
  for (const auto& i : invariants)
    if (i.name == name) return &i;
  return nullptr;
}

std::string format_alias(const Alias& a) { return a.from + " == " + a.to; }

Alias parse_alias(const std::string& s) {
  const auto pos = s.find("==");
  if (pos == std::string::npos) throw InputError("assumption '" + s + "' is not an equality");
  auto trim = [](std::string x) {
    const auto b = x.find_first_not_of(' ');
    const auto e = x.find_last_not_of(' ');
    return b == std::string::npos ? std::string() : x.substr(b, e - b + 1);
  };
  Alias a{trim(s.substr(0, pos)), trim(s.substr(pos + 2))};
  if (a.from.empty() || a.to.empty()) throw InputError("assumption '" + s + "' has an empty side");
  return a;
}

std::string rename(const std::string& var, const std::vector<Alias>& aliases) {
  const auto br = var.find('[');
  const std::string base = var.substr(0, br);
  for (const auto& a : aliases)
    if (a.from == base) return a.to + (br == std::string::npos ? "" : var.substr(br));
  return var;
}

VarList rename(const VarList& vars, const std::vector<Alias>& aliases) {
  VarList out;
  out.reserve(vars.size());
  for (const auto& v : vars) out.push_back(rename(v, aliases));
  return out;
}

namespace {

Table qform_table(const std::string& source, const QForm& q, bool with_source) {
  Table t;
  if (with_source) t.set("source", source);
  t.set("vars", textfmt::strings_value(q.vars));
  t.set("Q", textfmt::matrix_value(q.Q.matrix()));
  return t;
}

QForm qform_from(const Table& t) {
  QForm q;
  q.vars = t.at("vars").as_strings();
  q.Q = q.vars.empty() ? SymMatrix(0) : t.at("Q").as_sym();
  if (q.Q.dim() != q.vars.size())
    throw ParseError(t.line(), std::to_string(q.vars.size()) + " vars for a " + std::to_string(q.Q.dim()) +
                                   "x" + std::to_string(q.Q.dim()) + " Q");
  return q;
}

std::string str_or(const Table& t, const char* key, std::string dflt) {
  const Value* v = t.find(key);
  return v ? v->as_string() : dflt;
}

double num_or(const Table& t, const char* key, double dflt) {
  const Value* v = t.find(key);
  return v ? v->as_number() : dflt;
}

template <class F>
auto with_line(const Table& t, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(t.line(), e.what());
  }
}

}  // namespace

Table obligations_to_table(const ObligationSet& set) {
  Table root;
  root.set("program", set.program);
  textfmt::Array invs;
  for (const auto& inv : set.invariants) {
    Table t;
    t.set("name", inv.name);
    t.set("behavior", inv.behavior);
    t.set("kind", inv.kind);
    t.set("vars", textfmt::strings_value(inv.set.vars));
    t.set("Q", textfmt::matrix_value(inv.set.Q.matrix()));
    invs.emplace_back(std::move(t));
  }
  if (!invs.empty()) root.set("invariant", std::move(invs));
  textfmt::Array obs;
  for (const auto& o : set.obligations) {
    Table t;
    t.set("id", o.id);
    t.set("behavior", o.behavior);
    t.set("tactic", to_string(o.tactic));
    t.set("kind", to_string(o.kind));
    t.set("label", o.label);
    t.set("in_vars", textfmt::strings_value(o.in_vars));
    t.set("out_vars", textfmt::strings_value(o.out_vars));
    t.set("T", textfmt::matrix_value(o.T));
    t.set("b", textfmt::vector_value(o.b));
    t.set("stacked", o.stacked);
    t.set("rule", o.rule);
    t.set("alpha", o.alpha);
    t.set("gamma", o.gamma);
    std::vector<std::string> as;
    for (const auto& a : o.assumptions) as.push_back(format_alias(a));
    t.set("assumptions", textfmt::strings_value(as));
    textfmt::Array pre;
    for (const auto& p : o.pre) pre.emplace_back(qform_table(p.source, p.set, true));
    t.set("pre", std::move(pre));
    t.set("post", qform_table(o.post_source, o.post, true));
    obs.emplace_back(std::move(t));
  }
  if (!obs.empty()) root.set("obligation", std::move(obs));
  return root;
}

ObligationSet obligations_from_table(const Table& root) {
  ObligationSet set;
  set.program = str_or(root, "program", "");
  if (const Value* v = root.find("invariant")) {
    for (const auto& e : v->as_array()) {
      const Table& t = e.as_table();
      with_line(t, [&] {
        InvariantDecl d;
        d.name = t.at("name").as_string();
        d.behavior = str_or(t, "behavior", "");
        d.kind = str_or(t, "kind", "invariant");
        if (d.kind != "invariant" && d.kind != "assumption")
          throw ParseError(t.line(), "invariant kind must be 'invariant' or 'assumption'");
        d.set = qform_from(t);
        set.invariants.push_back(std::move(d));
        return 0;
      });
    }
  }
  if (const Value* v = root.find("obligation")) {
    for (const auto& e : v->as_array()) {
      const Table& t = e.as_table();
      with_line(t, [&] {
        Obligation o;
        o.id = t.at("id").as_string();
        o.behavior = str_or(t, "behavior", "");
        o.tactic = parse_tactic(t.at("tactic").as_string());
        o.kind = parse_kind(str_or(t, "kind", "step"));
        o.label = str_or(t, "label", "");
        o.in_vars = t.at("in_vars").as_strings();
        o.out_vars = t.at("out_vars").as_strings();
        o.T = o.out_vars.empty() || o.in_vars.empty() ? Matrix(o.out_vars.size(), o.in_vars.size())
                                                       : t.at("T").as_matrix();
        if (const Value* b = t.find("b")) o.b = b->as_array().empty() ? Vector{} : b->as_vector();
        if (o.b.empty()) o.b.assign(o.out_vars.size(), 0.0);
        if (o.T.rows() != o.out_vars.size() || o.T.cols() != o.in_vars.size())
          throw ParseError(t.line(), "obligation " + o.id + ": T is " + std::to_string(o.T.rows()) + "x" +
                                         std::to_string(o.T.cols()) + " for " + std::to_string(o.in_vars.size()) +
                                         " inputs and " + std::to_string(o.out_vars.size()) + " outputs");
        if (o.b.size() != o.out_vars.size())
          throw ParseError(t.line(), "obligation " + o.id + ": offset length mismatch");
        if (const Value* s = t.find("stacked")) o.stacked = s->as_bool();
        o.rule = str_or(t, "rule", "");
        o.alpha = num_or(t, "alpha", 0.0);
        o.gamma = num_or(t, "gamma", 0.0);
        if (const Value* a = t.find("assumptions"))
          for (const auto& s : a->as_strings()) o.assumptions.push_back(parse_alias(s));
        if (const Value* pre = t.find("pre")) {
          for (const auto& pe : pre->as_array()) {
            const Table& pt = pe.as_table();
            o.pre.push_back({pt.at("source").as_string(), with_line(pt, [&] { return qform_from(pt); })});
          }
        }
        const Table& post = t.at("post").as_table();
        o.post_source = str_or(post, "source", "");
        o.post = with_line(post, [&] { return qform_from(post); });
        set.obligations.push_back(std::move(o));
        return 0;
      });
    }
  }
  return set;
}

std::string emit_obligations(const ObligationSet& set) { return textfmt::emit(obligations_to_table(set)); }

ObligationSet parse_obligations(std::string_view text) { return obligations_from_table(textfmt::parse(text)); }

void save_obligations(const ObligationSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << emit_obligations(set);
  if (!out) throw InputError("failed writing " + path);
}

ObligationSet load_obligations(const std::string& path) {
  return obligations_from_table(textfmt::parse_file(path));
}

}  // namespace fdcert
