#pragma once

// Proof obligations (Hoare triples over affine statements) and the sidecar
// file that carries them from the autocoder to the checker.
//
// Sidecar layout:
//
//   program = "heli3dof"
//   [[invariant]]                 # loop-head invariants and input assumptions
//   name, behavior, kind ("invariant" | "assumption"), vars, Q
//   [[obligation]]
//   id, behavior, tactic, kind ("step" | "closing" | "derived"), label,
//   in_vars, out_vars, T, b, stacked, rule, alpha, gamma, assumptions
//   [[obligation.pre]]            # one piece, or two joined by `rule`
//   source ("invariant:<name>" | "assume:<name>" | "obligation:<id>"), vars, Q
//   [obligation.post]
//   source ("" | "invariant:<name>"), vars, Q
//
// Ellipsoid variable names are canonical; in_vars/out_vars are program names
// and `assumptions` ("xp == nominal_state") rename one into the other.

#include <string>
#include <utility>
#include <vector>

#include "fdcert/numerics.hpp"
#include "fdcert/text_format.hpp"

namespace fdcert {

using VarList = std::vector<std::string>;

enum class Tactic { AffineEllipsoid, SProcedure };
enum class ObligationKind { Step, Closing, Derived };

std::string to_string(Tactic t);
std::string to_string(ObligationKind k);
Tactic parse_tactic(const std::string& s);
ObligationKind parse_kind(const std::string& s);

/// Q-form set {v | [[1, v^T], [v, Q]] PSD} over named variables.
struct QForm {
  VarList vars;
  SymMatrix Q;
};

struct PrePiece {
  std::string source;
  QForm set;
};

struct Alias {
  std::string from;  // program name
  std::string to;    // canonical name
};

struct Obligation {
  std::string id;
  std::string behavior;  // empty for single-behavior programs
  Tactic tactic = Tactic::AffineEllipsoid;
  ObligationKind kind = ObligationKind::Step;
  std::string label;
  VarList in_vars;
  VarList out_vars;
  Matrix T;
  Vector b;
  bool stacked = false;  // post over [in_vars; out_vars]
  std::vector<PrePiece> pre;
  std::string rule;  // "" | "bounded_input" | "error_split"
  double alpha = 0.0;
  double gamma = 0.0;
  QForm post;
  std::string post_source;
  std::vector<Alias> assumptions;
};

struct InvariantDecl {
  std::string name;
  std::string behavior;
  std::string kind = "invariant";  // or "assumption"
  QForm set;
};

struct ObligationSet {
  std::string program;
  std::vector<InvariantDecl> invariants;
  std::vector<Obligation> obligations;

  const Obligation* find(const std::string& id) const;
  const InvariantDecl* find_invariant(const std::string& name) const;
};

/// "xp == nominal_state" <-> {xp, nominal_state}.
std::string format_alias(const Alias& a);
Alias parse_alias(const std::string& s);

/// Applies aliases to a variable name: "xp[3]" with xp -> s becomes "s[3]".
std::string rename(const std::string& var, const std::vector<Alias>& aliases);
VarList rename(const VarList& vars, const std::vector<Alias>& aliases);

textfmt::Table obligations_to_table(const ObligationSet& set);
/// Throws ParseError with the offending line on malformed input.
ObligationSet obligations_from_table(const textfmt::Table& t);
std::string emit_obligations(const ObligationSet& set);
ObligationSet parse_obligations(std::string_view text);
void save_obligations(const ObligationSet& set, const std::string& path);
ObligationSet load_obligations(const std::string& path);

}  // namespace fdcert
