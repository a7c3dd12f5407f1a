#pragma once

// Independent verifier of obligation sidecars. Recomputes every image from
// the stored matrices and checks it against the claimed post-condition; the
// only shared code with the generator is the sidecar reader and numerics.

#include <string>
#include <vector>

#include "fdcert/obligations.hpp"

namespace fdcert {

enum class Status { Proved, Failed, Error };

std::string to_string(Status s);

struct Verdict {
  std::string id;
  std::string label;
  std::string behavior;
  Tactic tactic = Tactic::AffineEllipsoid;
  Status status = Status::Error;
  /// lambda_min(Q_post - image) / ||image||; proved iff >= -tol.
  double margin = 0.0;
  double abs_margin = 0.0;  // unnormalized lambda_min
  std::string message;
};

struct CheckOptions {
  double tol = 1e-8;
  bool link = true;  // also check that every precondition follows from its source
  unsigned threads = 1;
};

/// Multipliers of the two-piece combination rules.
struct Multipliers {
  double alpha = 0.0;
  double gamma = 0.0;
};

/// Single-obligation checks; no linking against other obligations.
Verdict check_affine(const Obligation& o, double tol);
Verdict check_sproc(const Obligation& o, const Multipliers& m, double tol);
Verdict check_sproc(const Obligation& o, double tol);
Verdict check_obligation(const Obligation& o, double tol);

struct Report {
  std::string program;
  double tol = 0.0;
  std::vector<Verdict> verdicts;  // sidecar order
  std::vector<std::string> problems;  // set-level: unclosed invariants
  std::size_t proved = 0;
  std::size_t failed = 0;
  std::size_t errors = 0;

  bool ok() const { return failed == 0 && errors == 0 && problems.empty(); }
};

Report check_set(const ObligationSet& set, const CheckOptions& opt = {});
/// Throws ParseError (with line) on a malformed sidecar.
Report check_file(const std::string& path, const CheckOptions& opt = {});

std::string format_report(const Report& r);
std::string verdicts_json(const Report& r);
/// 0 iff every obligation is proved and no set-level problem remains.
int exit_code(const Report& r);

}  // namespace fdcert
