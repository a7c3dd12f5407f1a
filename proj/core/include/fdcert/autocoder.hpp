#pragma once

// Lowering of a model to a straight-line loop body, forward propagation of
// ellipsoid invariants through it, and emission of annotated C plus the
// obligation sidecar.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fdcert/ellipsoid.hpp"
#include "fdcert/obligations.hpp"
#include "fdcert/synthesis.hpp"

namespace fdcert {

enum class Storage { Io, State, Local, Ghost };

struct IrVar {
  std::string name;
  std::size_t dim = 1;
  Storage storage = Storage::Local;
  bool integer = false;
};

/// out := T in + b over whole variables (base names).
struct IrAssign {
  VarList out;
  VarList in;
  Matrix T;
  Vector b;
  bool ghost = false;
  std::string function;  // ghost function wrapping the update, if any
};

/// alarm := sum(residual^2) > threshold_sq
struct IrAlarm {
  std::string residual;
  std::string flag;
  double threshold_sq = 0.0;
};

/// A precondition piece: a declared set, or the post of an earlier statement,
/// restricted to `vars` (program base names; empty means all).
struct PreRef {
  std::string source;  // "invariant:<name>" | "assume:<name>" | "stmt:<label>"
  VarList vars;
};

/// One behavior's contract for a statement.
struct IrView {
  std::string behavior;
  ObligationKind kind = ObligationKind::Step;
  Tactic tactic = Tactic::AffineEllipsoid;
  VarList in;   // program base names
  VarList out;
  Matrix T;
  Vector b;
  bool stacked = false;
  std::vector<PreRef> pre;
  std::string rule;
  double alpha = 0.0;
  double gamma = 0.0;
  std::string closes;  // invariant the image must land in
};

enum class StmtKind { AffineAssign, GhostAffineAssign, LoopHead };

struct IrStatement {
  std::string label;
  StmtKind kind = StmtKind::AffineAssign;
  std::vector<IrAssign> code;
  std::optional<IrAlarm> alarm;
  std::vector<IrView> views;
};

struct Behavior {
  std::string name;  // "" for behavior-free programs
  std::vector<Alias> aliases;
};

struct IrProgram {
  std::string name;
  std::vector<IrVar> vars;
  std::vector<Behavior> behaviors;
  std::vector<InvariantDecl> invariants;  // element names already canonical
  std::vector<IrStatement> body;          // loop body; LoopHead last

  const IrVar& var(const std::string& name) const;
  const Behavior& behavior(const std::string& name) const;
  /// Element names of a base variable: "x" or "x[0]", "x[1]", ...
  VarList elements(const std::string& base) const;
  VarList elements(const VarList& bases) const;
};

IrProgram lower(const FdModel& m, const CertificateBundle& b);
IrProgram lower(const LoopModel& m, const LoopCertificate& c);
IrProgram lower(const AnyModel& m, const AnyBundle& b);

/// Throws AutocodeError when a back-edge image is not inside its invariant.
ObligationSet propagate(const IrProgram& ir, double tol = 1e-9);

struct AnnotatedSource {
  std::string c_text;
  /// Contract blocks in order of appearance, each naming its obligation.
  std::vector<std::string> obligation_refs;
};

AnnotatedSource emit_c_acsl(const IrProgram& ir, const ObligationSet& obligations);

/// C identifier derived from the program name.
std::string c_identifier(const std::string& name);

}  // namespace fdcert
