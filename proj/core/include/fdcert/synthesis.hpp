#pragma once

// Certificate synthesis: bounded-input invariant ellipsoids, the faulty level
// set, error-state ellipsoids and the residual threshold.

#include <optional>
#include <string>

#include "fdcert/ellipsoid.hpp"
#include "fdcert/model.hpp"
#include "fdcert/text_format.hpp"

namespace fdcert {

struct SynthOptions {
  double margin = 1e-8;  // required lambda_max <= -margin
  int projection_iterations = 10000;
};

/// (P, alpha) such that {x | x^T P x <= 1} is invariant under
/// x+ = A x + B u whenever u^T P1 u <= 1.
struct BoundedInputInvariant {
  SymMatrix P;
  SymMatrix Q;  // P^-1
  double alpha = 0.0;
  double lambda_max = 0.0;  // of the certifying block
  SymMatrix input_q;        // Q-form bound on the input
  std::string method;       // "lyapunov" or "projection"
};

/// [A^T P A - (1 - alpha) P, A^T P B; B^T P A, B^T P B - alpha P1].
SymMatrix bounded_input_block(const Matrix& a, const Matrix& b, const SymMatrix& p, double alpha,
                              const SymMatrix& p1);

/// Largest eigenvalue of the block above with the input bound given in Q-form
/// (possibly singular: the block is restricted to the bound's range).
double bounded_input_lambda_max(const Matrix& a, const Matrix& b, const SymMatrix& p, double alpha,
                                const SymMatrix& input_q);

BoundedInputInvariant synth_invariant_bounded_input(const Matrix& a, const Matrix& b, const SymMatrix& p1,
                                                    const SynthOptions& opt = {});
/// Same, with the input bound in Q-form.
BoundedInputInvariant synth_invariant_q(const Matrix& a, const Matrix& b, const SymMatrix& input_q,
                                        const SynthOptions& opt = {});

/// Fixed-alpha search alternating between the negative semidefinite cone and
/// the affine family of blocks. Returns nothing when no certificate emerges.
std::optional<BoundedInputInvariant> alternating_projections(const Matrix& a, const Matrix& b,
                                                             const SymMatrix& input_q, double alpha,
                                                             const SynthOptions& opt = {});

struct LevelSet {
  double level = 0.0;
  double alpha = 0.0;
};

/// Smallest c (bisection) such that {e | e^T P e <= c} is invariant under
/// e+ = A e + E f for all ||f|| <= sigma.
LevelSet faulty_level_set(const Matrix& a, const Matrix& e, const SymMatrix& p, double sigma);

/// [A^T P A - (1 - alpha) P, A^T P E; E^T P A, E^T P E - (alpha c / sigma^2) I].
SymMatrix level_set_block(const Matrix& a, const Matrix& e, const SymMatrix& p, double alpha, double c,
                          double sigma);

/// Continuous-time certificate (Q, rho) with weighting P.
struct ContinuousBoundCertificate {
  SymMatrix Q;
  double rho = 0.0;
  SymMatrix P;
};

SymMatrix continuous_bound_block(const Matrix& a, const Matrix& e, const ContinuousBoundCertificate& cert);
/// True iff lambda_max(block) < -tol and Q is positive definite. Throws
/// CertificateError when Q or P is not positive semidefinite.
bool check_continuous_bound(const Matrix& a, const Matrix& e, const ContinuousBoundCertificate& cert, double tol);

/// Largest ||C e|| over e^T P e <= level.
double residual_threshold(const EllipsoidP& err, const Matrix& c);

/// Lyapunov shape of A normalized so that lambda_max(C P^-1 C^T) = 1.
SymMatrix detector_shape(const Matrix& a_hat, const Matrix& c);

/// gamma in (0, 1 - alpha) maximizing det P_e.
double best_split(const SymMatrix& qx, const SymMatrix& qxh, double alpha);

struct ModeCertificates {
  EllipsoidP closed;  // over state, xc
  double alpha_closed = 0.0;
  double lmi_closed = 0.0;
  SymMatrix reference_q;
  EllipsoidP observer;  // over observer_states
  double alpha_observer = 0.0;
  double lmi_observer = 0.0;
  SymMatrix observer_input_q;  // bound on (u, y)
  SProcCertificate split;      // (alpha_observer, gamma)
  EllipsoidP error;            // over error_states
};

struct DetectorCertificates {
  EllipsoidP nominal;  // level zeta
  EllipsoidP faulty;   // level zeta_bar
  double alpha_fault = 0.0;
  double sigma = 0.0;
  double r_th = 0.0;
};

struct CertificateBundle {
  std::string model;
  ModeCertificates nominal;
  ModeCertificates faulty;
  DetectorCertificates detector;

  const ModeCertificates& mode(bool faulty_mode) const { return faulty_mode ? faulty : nominal; }
  void validate() const;
};

struct LoopCertificate {
  std::string model;
  EllipsoidP invariant;
  double alpha = 0.0;
  double lmi = 0.0;
  SymMatrix input_q;
};

using AnyBundle = std::variant<CertificateBundle, LoopCertificate>;

namespace names {
inline constexpr const char* kState = "state";
inline constexpr const char* kController = "xc";
inline constexpr const char* kObserver = "observer_states";
inline constexpr const char* kError = "error_states";
}  // namespace names

/// Closed-loop invariant for the nominal (X = I) or faulty plant.
BoundedInputInvariant closed_loop_invariant(const FdModel& m, bool faulty, const SynthOptions& opt = {});
/// Shadow of the closed-loop ellipsoid on (u, y).
SymMatrix observer_input_bound(const FdModel& m, const SymMatrix& closed_q);
/// Fills error ellipsoids and split multipliers of both modes.
void derive_error_invariants(CertificateBundle& b);

CertificateBundle synthesize(const FdModel& m);
LoopCertificate synthesize(const LoopModel& m);
AnyBundle synthesize(const AnyModel& m);

textfmt::Table bundle_to_table(const AnyBundle& b);
AnyBundle bundle_from_table(const textfmt::Table& t);
void save_bundle(const AnyBundle& b, const std::string& path);
AnyBundle load_bundle(const std::string& path);

}  // namespace fdcert
