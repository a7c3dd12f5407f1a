#pragma once

// Closed-loop simulation of a lowered program against its plant, with
// actuator-degradation faults, ellipsoid membership tracking and trace export.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fdcert/autocoder.hpp"

namespace fdcert {

struct Scenario {
  std::size_t steps = 1000;
  std::optional<std::size_t> fault_start;
  std::optional<Matrix> fault_X;  // model's X when absent
  std::uint64_t seed = 1;
  /// Exogenous input drawn on the boundary of this fraction of its bound.
  double reference_scale = 1.0;
  /// Initial error (loop state) on the boundary of this fraction of the
  /// nominal detector set (loop invariant). The observer starts at zero.
  double initial_scale = 1.0;
  /// Saturate ||f|| at sigma instead of letting f = -u through unchanged.
  bool clip_fault = false;

  void validate() const;
};

/// Relative slack on set membership tests.
inline constexpr double kMembershipTol = 1e-9;

/// One row per step. Columns for a fault-detection program:
///   step, fault, yc[], x[], xc[], xhat[], u[], y[], r[], r_norm, e[], f[],
///   alarm, v_nominal, v_faulty, in_nominal, in_faulty
/// x and xc are taken before the step, everything else is what the step
/// produced. For a plain loop: step, <input>, <state>, v_nominal, in_nominal
/// (the nominal set being the loop invariant).
struct Trace {
  std::string program;
  Scenario scenario;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  bool has(const std::string& name) const;
  std::size_t column(const std::string& name) const;
  /// Columns "base[0]", "base[1]", ... or the single column "base".
  std::vector<std::size_t> columns_of(const std::string& base) const;
  double at(std::size_t row, const std::string& name) const;
  Vector vec(std::size_t row, const std::string& base) const;
};

Trace simulate(const FdModel& m, const CertificateBundle& b, const Scenario& s);
Trace simulate(const LoopModel& m, const LoopCertificate& c, const Scenario& s);
Trace simulate(const AnyModel& m, const AnyBundle& b, const Scenario& s);

struct DetectionMetrics {
  std::size_t steps = 0;
  std::optional<std::size_t> fault_start;
  std::size_t alarms = 0;
  std::size_t false_alarms = 0;  // before fault_start
  std::optional<std::size_t> first_alarm;  // at or after fault_start
  std::optional<std::size_t> latency;
  double max_v_nominal = 0.0;  // e^T P_n e over the nominal segment
  double max_v_faulty = 0.0;   // e^T P_f e over the faulty segment
  std::size_t nominal_exits = 0;
  std::size_t faulty_exits = 0;
  double max_fault_norm = 0.0;
  std::size_t sigma_exceeded = 0;
  double nominal_level = 0.0;
  double faulty_level = 0.0;
  double r_th = 0.0;
  double sigma = 0.0;
};

DetectionMetrics detection_metrics(const Trace& t, const AnyBundle& b);
DetectionMetrics detection_metrics(const Trace& t, const CertificateBundle& b);
DetectionMetrics detection_metrics(const Trace& t, const LoopCertificate& c);

/// Independent seeds run on separate threads; result i belongs to seeds[i].
std::vector<DetectionMetrics> simulate_batch(const AnyModel& m, const AnyBundle& b, const Scenario& base,
                                             const std::vector<std::uint64_t>& seeds, unsigned threads);

std::string trace_csv(const Trace& t);
void write_trace_csv(const Trace& t, const std::string& path);
/// Columns and rows only; scenario fields are not recorded in the file.
Trace read_trace_csv(const std::string& path);
Trace parse_trace_csv(const std::string& text);

std::string metrics_json(const DetectionMetrics& m);

/// Boundary polylines of the certified sets projected on two error (state)
/// coordinates and the trajectory in the same plane, one series per mode.
std::string plot_json(const Trace& t, const AnyBundle& b, std::size_t i = 0, std::size_t j = 1,
                      std::size_t boundary_points = 128, std::size_t max_points = 5000);

}  // namespace fdcert
