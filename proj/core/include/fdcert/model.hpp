#pragma once

#include <optional>
#include <string>
#include <variant>

#include "fdcert/numerics.hpp"
#include "fdcert/text_format.hpp"

namespace fdcert {

struct LtiContinuous {
  Matrix A;  // 1/s
  Matrix B;
  Matrix C;

  std::size_t state_dim() const { return A.rows(); }
  std::size_t input_dim() const { return B.cols(); }
  std::size_t output_dim() const { return C.rows(); }
  void validate() const;
};

struct LtiDiscrete {
  Matrix A;
  Matrix B;
  Matrix C;
  double dt = 0.0;  // s

  std::size_t state_dim() const { return A.rows(); }
  std::size_t input_dim() const { return B.cols(); }
  std::size_t output_dim() const { return C.rows(); }
  void validate() const;
};

/// Three-degree-of-freedom helicopter parameters (kg, m, N/V, m/s^2).
struct PhysicalParams {
  double m_f = 0.0;
  double m_w = 0.0;
  double L_a = 0.0;
  double L_h = 0.0;
  double L_m = 0.0;
  double L_w = 0.0;
  double L_f = 0.0;
  double K_f = 0.0;
  double g = 0.0;

  void validate() const;
};

struct FaultModel {
  Matrix X;            // actuator effectiveness, input_dim x input_dim
  double sigma = 0.0;  // bound on ||f||
};

/// x_c+ = A x_c + B (M x) + R y_c,   u = C x_c + D (M x).
/// M is the controller's measurement of the plant state (the plant C when
/// the controller sees outputs only).
struct Controller {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
  Matrix R;
  Matrix M;

  std::size_t state_dim() const { return A.rows(); }
  std::size_t reference_dim() const { return R.cols(); }
};

struct FdModel {
  std::string name;
  double dt = 0.0;
  LtiDiscrete plant;
  std::optional<LtiContinuous> continuous;
  std::optional<PhysicalParams> params;
  Controller controller;
  Matrix L;
  FaultModel fault;
  SymMatrix reference_q;  // Q-form bound on y_c (radius^2 I, or P^-1)
  double zeta = 1e-6;     // nominal error level set
  double margin = 1e-8;   // LMI margin requested from synthesis

  /// Structural checks only (dimensions, signs, finiteness).
  void validate() const;
};

/// x+ = A x + B input with input in E(input_q).
struct LoopModel {
  std::string name;
  Matrix A;
  Matrix B;
  SymMatrix input_q;
  std::string state_var = "x";
  std::string input_var = "input";
  double margin = 1e-8;

  void validate() const;
};

using AnyModel = std::variant<FdModel, LoopModel>;

struct ClosedLoop {
  Matrix A;      // dynamics of [x; x_c]
  Matrix B_ref;  // reference input
  Matrix B_act;  // B or B X, the actuated input channel
};

struct ObserverForm {
  Matrix A_hat;    // A - L C
  Matrix B_hat;    // [B  L C], drives [u; x]
  Matrix B_tilde;  // L C
};

struct DerivedSystems {
  ClosedLoop nominal;
  ClosedLoop faulty;
  ObserverForm observer;
  Matrix E;  // B (I - X)
  double observer_radius = 0.0;
};

LtiDiscrete discretize_zoh(const LtiContinuous& sys, double dt);
LtiContinuous build_plant_matrices(const PhysicalParams& p);
Matrix build_fault_input(const LtiDiscrete& plant, const FaultModel& fault);
ClosedLoop closed_loop(const FdModel& m, const Matrix& X);
/// Throws ValidationError naming the spectral radius when A - L C is unstable.
DerivedSystems assemble(const FdModel& m);

/// The three equivalent observer updates.
Vector observer_step_innovation(const FdModel& m, std::span<const double> xhat,
                                std::span<const double> u, std::span<const double> y);
Vector observer_step_plant_output(const FdModel& m, std::span<const double> xhat,
                                  std::span<const double> u, std::span<const double> x);
Vector observer_step_error(const FdModel& m, std::span<const double> xhat,
                           std::span<const double> u, std::span<const double> x);

AnyModel parse_model(const textfmt::Table& doc);
AnyModel load_model(const std::string& path);

}  // namespace fdcert
