#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <random>

#include "fdcert/error.hpp"
#include "fdcert/simulator.hpp"
#include "fdcert/text_format.hpp"

namespace fdcert {
namespace {

const std::string kRoot = FDCERT_SOURCE_ROOT;

struct Heli {
  FdModel model;
  CertificateBundle bundle;
  DerivedSystems derived;
};

const Heli& heli() {
  static const Heli h = [] {
    FdModel m = std::get<FdModel>(load_model(kRoot + "/models/heli3dof.toml"));
    CertificateBundle b = synthesize(m);
    DerivedSystems d = assemble(m);
    return Heli{std::move(m), std::move(b), std::move(d)};
  }();
  return h;
}

struct Loop {
  LoopModel model;
  LoopCertificate cert;
};

const Loop& loop() {
  static const Loop l = [] {
    LoopModel m = std::get<LoopModel>(load_model(kRoot + "/models/scalar_loop.toml"));
    LoopCertificate c = synthesize(m);
    return Loop{std::move(m), std::move(c)};
  }();
  return l;
}

Scenario scenario(std::size_t steps, std::optional<std::size_t> fault = std::nullopt, std::uint64_t seed = 1) {
  Scenario s;
  s.steps = steps;
  s.fault_start = fault;
  s.seed = seed;
  return s;
}

TEST(Simulate, ZeroInputsStayZero) {
  Scenario s = scenario(300);
  s.reference_scale = 0.0;
  s.initial_scale = 0.0;
  const Trace t = simulate(heli().model, heli().bundle, s);
  ASSERT_EQ(t.rows.size(), 300u);
  for (const auto& row : t.rows)
    for (std::size_t c = 1; c < t.columns.size(); ++c) {
      if (t.columns[c] == "in_nominal" || t.columns[c] == "in_faulty") {
        EXPECT_EQ(row[c], 1.0);
      } else {
        EXPECT_EQ(row[c], 0.0) << t.columns[c];
      }
    }
}

TEST(Simulate, IdentityFaultIsNoFault) {
  Scenario s = scenario(2000, 500);
  s.fault_X = Matrix::identity(2);
  const Trace with = simulate(heli().model, heli().bundle, s);
  const Trace without = simulate(heli().model, heli().bundle, scenario(2000));
  EXPECT_EQ(trace_csv(with), trace_csv(without));
}

TEST(Simulate, TraceIdentitiesAreExact) {
  const Trace t = simulate(heli().model, heli().bundle, scenario(3000, 1000));
  const Matrix& c = heli().model.plant.C;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const Vector x = t.vec(k, "x");
    const Vector xh = t.vec(k, "xhat");
    const Vector e = t.vec(k, "e");
    const Vector y = t.vec(k, "y");
    const Vector r = t.vec(k, "r");
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_EQ(e[i], x[i] - xh[i]) << k;
    for (std::size_t i = 0; i < y.size(); ++i) {
      double yi = 0.0;
      double ri = y[i];
      for (std::size_t j = 0; j < x.size(); ++j) {
        yi += c(i, j) * x[j];
        ri -= c(i, j) * xh[j];
      }
      ASSERT_EQ(y[i], yi) << k;
      ASSERT_EQ(r[i], ri) << k;
    }
  }
}

TEST(Simulate, AlarmIffResidualAboveThreshold) {
  const Trace t = simulate(heli().model, heli().bundle, scenario(3000, 1000));
  const double r_th = heli().bundle.detector.r_th;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const double rn = t.at(k, "r_norm");
    if (std::abs(rn - r_th) <= 1e-14 * r_th) continue;
    EXPECT_EQ(t.at(k, "alarm") != 0.0, rn > r_th) << k;
  }
}

TEST(Simulate, NominalRunNeverLeavesDetectorSet) {
  const Trace t = simulate(heli().model, heli().bundle, scenario(100000));
  const DetectionMetrics m = detection_metrics(t, heli().bundle);
  EXPECT_EQ(m.nominal_exits, 0u);
  EXPECT_EQ(m.alarms, 0u);
  EXPECT_EQ(m.false_alarms, 0u);
  EXPECT_FALSE(m.latency.has_value());
  EXPECT_LE(m.max_v_nominal, m.nominal_level * (1.0 + kMembershipTol));
  // Started on the boundary.
  EXPECT_NEAR(t.at(0, "v_nominal"), m.nominal_level, 1e-12 * m.nominal_level);
}

TEST(Simulate, BoundedFaultStaysInFaultySet) {
  Scenario s = scenario(20000, 1000);
  s.clip_fault = true;
  const Trace t = simulate(heli().model, heli().bundle, s);
  const DetectionMetrics m = detection_metrics(t, heli().bundle);
  EXPECT_EQ(m.sigma_exceeded, 0u);
  EXPECT_LE(m.max_fault_norm, heli().bundle.detector.sigma * (1.0 + 1e-12));
  EXPECT_EQ(m.faulty_exits, 0u);
  EXPECT_EQ(m.nominal_exits, 0u);
  EXPECT_LE(m.max_v_faulty, m.faulty_level);
}

TEST(Simulate, ClippingSaturatesLargeFaults) {
  Scenario s = scenario(3000, 1000);
  s.clip_fault = true;
  // Full actuator loss against a tight sigma forces the clip.
  s.fault_X = Matrix(2, 2);
  CertificateBundle b = heli().bundle;
  b.detector.sigma = 0.01;
  const Trace t = simulate(heli().model, b, s);
  const DetectionMetrics d = detection_metrics(t, b);
  EXPECT_GT(d.max_fault_norm, 0.0);
  EXPECT_EQ(d.sigma_exceeded, 0u);
  EXPECT_LE(d.max_fault_norm, 0.01 * (1.0 + 1e-12));
}

TEST(Simulate, DetectorLevelSurvivesGreedyAdversary) {
  // Each step picks the fault of norm sigma that pushes e^T P e highest among
  // the gradient direction and random candidates.
  const auto& d = heli().bundle.detector;
  const Matrix& ahat = heli().derived.observer.A_hat;
  const Matrix& e_in = heli().derived.E;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector e(ahat.rows(), 0.0);
  double worst = 0.0;
  for (int k = 0; k < 3000; ++k) {
    const Vector ae = ahat * e;
    std::vector<Vector> candidates;
    Vector grad = e_in.transpose() * (d.faulty.P.matrix() * ae);
    candidates.push_back(grad);
    for (int c = 0; c < 16; ++c) candidates.push_back({g(rng), g(rng)});
    Vector best = ae;
    double best_v = -1.0;
    for (auto f : candidates) {
      double n = std::hypot(f[0], f[1]);
      if (n == 0.0) continue;
      for (auto& v : f) v *= d.sigma / n;
      Vector next = ae;
      const Vector ef = e_in * f;
      for (std::size_t i = 0; i < next.size(); ++i) next[i] += ef[i];
      const double v = d.faulty.value(next);
      if (v > best_v) {
        best_v = v;
        best = next;
      }
    }
    e = best;
    worst = std::max(worst, best_v);
    ASSERT_LE(best_v, d.faulty.level * (1.0 + kMembershipTol)) << k;
  }
  // The level is conservative; a myopic adversary reaches about a fifth of it.
  EXPECT_GT(worst, 0.1 * d.faulty.level);
}

TEST(Simulate, DetectionLatencyMatchesFixture) {
  const auto fx = textfmt::parse_file(kRoot + "/tests/fixtures/heli3dof_detection.toml");
  const Scenario s = scenario(fx.at("steps").as_count(), fx.at("fault_start").as_count(),
                              static_cast<std::uint64_t>(fx.at("seed").as_count()));
  const DetectionMetrics m = detection_metrics(simulate(heli().model, heli().bundle, s), heli().bundle);
  EXPECT_EQ(m.false_alarms, 0u);
  ASSERT_TRUE(m.latency.has_value());
  EXPECT_EQ(*m.first_alarm, fx.at("first_alarm").as_count());
  EXPECT_EQ(*m.latency, fx.at("latency").as_count());
  EXPECT_GT(*m.first_alarm, *s.fault_start);
}

TEST(Simulate, NoFaultNoLatency) {
  const DetectionMetrics m = detection_metrics(simulate(heli().model, heli().bundle, scenario(2000)), heli().bundle);
  EXPECT_FALSE(m.first_alarm.has_value());
  EXPECT_FALSE(m.latency.has_value());
  EXPECT_EQ(m.false_alarms, 0u);
}

TEST(Simulate, SameSeedSameBytes) {
  const std::string a = trace_csv(simulate(heli().model, heli().bundle, scenario(1500, 700, 42)));
  const std::string b = trace_csv(simulate(heli().model, heli().bundle, scenario(1500, 700, 42)));
  const std::string c = trace_csv(simulate(heli().model, heli().bundle, scenario(1500, 700, 43)));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Simulate, ReferenceOnBoundary) {
  Scenario s = scenario(500);
  s.reference_scale = 0.5;
  const Trace t = simulate(heli().model, heli().bundle, s);
  const SymMatrix qinv = inverse(heli().bundle.nominal.reference_q);
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const Vector yc = t.vec(k, "yc");
    const Vector w = qinv.matrix() * yc;
    EXPECT_NEAR(yc[0] * w[0] + yc[1] * w[1], 0.25, 1e-12);
  }
}

TEST(Simulate, ScenarioValidation) {
  EXPECT_THROW(simulate(heli().model, heli().bundle, scenario(10, 11)), InputError);
  Scenario s = scenario(10);
  s.reference_scale = 1.5;
  EXPECT_THROW(simulate(heli().model, heli().bundle, s), InputError);
  s = scenario(10, 5);
  s.fault_X = Matrix::identity(3);
  EXPECT_THROW(simulate(heli().model, heli().bundle, s), DimensionError);
  EXPECT_THROW(simulate(loop().model, loop().cert, scenario(10, 5)), InputError);
}

TEST(Simulate, ScalarLoopStaysInInvariant) {
  const Trace t = simulate(loop().model, loop().cert, scenario(10000));
  EXPECT_EQ(t.columns, (std::vector<std::string>{"step", "input", "x", "v_nominal", "in_nominal"}));
  const DetectionMetrics m = detection_metrics(t, AnyBundle{loop().cert});
  EXPECT_EQ(m.nominal_exits, 0u);
  for (std::size_t k = 0; k + 1 < t.rows.size(); ++k) {
    EXPECT_EQ(std::abs(t.at(k, "input")), 1.0);
    // x+ = 0.98 x + 0.02 input, evaluated as in the generated code.
    double next = 0.0;
    next += 0.98 * t.at(k, "x");
    next += 0.02 * t.at(k, "input");
    EXPECT_EQ(t.at(k + 1, "x"), next);
  }
}

TEST(Trace, CsvRoundTripIsExact) {
  const Trace t = simulate(heli().model, heli().bundle, scenario(400, 100));
  const Trace back = parse_trace_csv(trace_csv(t));
  EXPECT_EQ(back.columns, t.columns);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t k = 0; k < t.rows.size(); ++k) EXPECT_EQ(back.rows[k], t.rows[k]);
}

TEST(Trace, MalformedCsvNamesLine) {
  try {
    parse_trace_csv("step,x\n0,1\n1,abc\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_trace_csv("step,x\n0\n"), ParseError);
  EXPECT_THROW(parse_trace_csv(""), ParseError);
}

TEST(Trace, ColumnLookup) {
  const Trace t = simulate(heli().model, heli().bundle, scenario(5));
  EXPECT_EQ(t.columns_of("x").size(), 6u);
  EXPECT_EQ(t.columns_of("alarm").size(), 1u);
  EXPECT_THROW(t.column("nope"), InputError);
}

TEST(Metrics, JsonFields) {
  const Trace t = simulate(heli().model, heli().bundle, scenario(2000, 1000));
  const auto j = nlohmann::json::parse(metrics_json(detection_metrics(t, heli().bundle)));
  EXPECT_EQ(j["steps"], 2000);
  EXPECT_EQ(j["fault_start"], 1000);
  EXPECT_EQ(j["false_alarms"], 0);
  EXPECT_TRUE(j["latency"].is_number());
  const auto none = nlohmann::json::parse(metrics_json(detection_metrics(simulate(heli().model, heli().bundle, scenario(10)), heli().bundle)));
  EXPECT_TRUE(none["latency"].is_null());
}

TEST(Metrics, FalseAlarmsCountedBeforeFault) {
  const CertificateBundle& b = heli().bundle;
  Trace t = simulate(heli().model, b, scenario(500));
  t.scenario.fault_start = 400;
  const std::size_t alarm = t.column("alarm");
  t.rows[10][alarm] = 1.0;
  t.rows[450][alarm] = 1.0;
  const DetectionMetrics m = detection_metrics(t, b);
  EXPECT_EQ(m.false_alarms, 1u);
  EXPECT_EQ(*m.first_alarm, 450u);
  EXPECT_EQ(*m.latency, 50u);
}

TEST(Plot, BoundariesLieOnProjectedSets) {
  const Trace t = simulate(heli().model, heli().bundle, scenario(3000, 1000));
  const AnyBundle b{heli().bundle};
  const auto j = nlohmann::json::parse(plot_json(t, b, 0, 2, 64, 500));
  EXPECT_EQ(j["axes"][0], "e[0]");
  EXPECT_EQ(j["axes"][1], "e[2]");
  ASSERT_EQ(j["sets"].size(), 2u);
  const EllipsoidP* sets[] = {&heli().bundle.detector.nominal, &heli().bundle.detector.faulty};
  for (int s = 0; s < 2; ++s) {
    const SymMatrix q = p_to_q(*sets[s]).Q;
    const SymMatrix q2{{q(0, 0), q(0, 2)}, {q(2, 0), q(2, 2)}};
    const SymMatrix inv = inverse(q2);
    EXPECT_EQ(j["sets"][s]["points"].size(), 65u);
    for (const auto& p : j["sets"][s]["points"]) {
      const double a = p[0];
      const double c = p[1];
      const double v = inv(0, 0) * a * a + 2 * inv(0, 1) * a * c + inv(1, 1) * c * c;
      EXPECT_NEAR(v, 1.0, 1e-9);
    }
  }
  EXPECT_LE(j["trajectory"]["nominal"].size(), 500u);
  EXPECT_LE(j["trajectory"]["faulty"].size(), 500u);
  EXPECT_GT(j["trajectory"]["faulty"].size(), 0u);
  EXPECT_THROW(plot_json(t, b, 1, 1), InputError);
}

TEST(Plot, ScalarInterval) {
  const Trace t = simulate(loop().model, loop().cert, scenario(100));
  const auto j = nlohmann::json::parse(plot_json(t, AnyBundle{loop().cert}));
  EXPECT_EQ(j["axes"][1], "x");
  EXPECT_NEAR(j["sets"][0]["bounds"][1].get<double>(), 1.0, 1e-6);
  EXPECT_EQ(j["trajectory"]["nominal"].size(), 100u);
}

TEST(Batch, ParallelMatchesSerial) {
  const AnyModel m{heli().model};
  const AnyBundle b{heli().bundle};
  const Scenario s = scenario(1500, 1000);
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6};
  const auto par = simulate_batch(m, b, s, seeds, 4);
  const auto ser = simulate_batch(m, b, s, seeds, 1);
  ASSERT_EQ(par.size(), seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    EXPECT_EQ(metrics_json(par[i]), metrics_json(ser[i]));
    EXPECT_EQ(par[i].false_alarms, 0u);
    EXPECT_TRUE(par[i].latency.has_value());
  }
}

}  // namespace
}  // namespace fdcert
