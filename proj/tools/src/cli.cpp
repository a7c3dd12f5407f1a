#include "cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fdcert/autocoder.hpp"
#include "fdcert/checker.hpp"
#include "fdcert/error.hpp"
#include "fdcert/simulator.hpp"

namespace fdcert::cli {
namespace {

namespace fs = std::filesystem;

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what) : std::runtime_error(stage + ": " + what) {}
};

void setup_logging() {
  auto log = spdlog::get("fdcert");
  if (!log) {
    log = spdlog::stderr_logger_mt("fdcert");
    log->set_pattern("[%l] %v");
  }
  spdlog::set_default_logger(log);
  const char* env = std::getenv("FDCERT_LOG");
  auto level = spdlog::level::warn;
  if (env && *env) {
    level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      level = spdlog::level::warn;
      spdlog::warn("FDCERT_LOG={} is not a level; using warn", env);
    }
  }
  log->set_level(level);
}

/// Runs one stage, tagging any failure with its name.
template <class F>
auto stage(const std::string& name, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto r = f();
    spdlog::info("{} done in {:.3f} s", name,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return r;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string program_name(const AnyModel& m) {
  return c_identifier(std::visit([](const auto& x) { return x.name; }, m));
}

fs::path output_dir(const PipelineConfig& c) {
  const fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw StageError("output", "cannot create directory " + c.out);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write " + p.string());
  spdlog::info("wrote {}", p.string());
}

AnyModel load(const PipelineConfig& c) {
  return stage("model", [&] { return load_model(c.model); });
}

AnyBundle bundle_for(const PipelineConfig& c, const AnyModel& m, const fs::path& dir, bool save) {
  if (!c.bundle.empty()) return stage("bundle", [&] { return load_bundle(c.bundle); });
  return stage("synth", [&] {
    AnyBundle b = synthesize(m);
    if (save) {
      const fs::path p = dir / (program_name(m) + ".bundle.toml");
      save_bundle(b, p.string());
      spdlog::info("wrote {}", p.string());
    }
    return b;
  });
}

void print_bundle_summary(const AnyBundle& b) {
  if (const auto* cb = std::get_if<CertificateBundle>(&b)) {
    std::cout << "certificates for " << cb->model << "\n";
    for (const bool faulty : {false, true}) {
      const auto& md = cb->mode(faulty);
      std::cout << "  " << (faulty ? "faulty " : "nominal") << "  closed alpha " << md.alpha_closed << " lmi "
                << md.lmi_closed << "  observer alpha " << md.alpha_observer << " lmi " << md.lmi_observer << "\n";
    }
    std::cout << "  detector zeta " << cb->detector.nominal.level << " zeta_bar " << cb->detector.faulty.level
              << " r_th " << cb->detector.r_th << "\n";
  } else {
    const auto& lc = std::get<LoopCertificate>(b);
    std::cout << "certificate for " << lc.model << "\n  alpha " << lc.alpha << " lmi " << lc.lmi << "\n";
  }
}

std::string codegen(const PipelineConfig& c, const AnyModel& m, const AnyBundle& b, const fs::path& dir) {
  return stage("codegen", [&] {
    const IrProgram ir = lower(m, b);
    const ObligationSet set = propagate(ir);
    const AnnotatedSource src = emit_c_acsl(ir, set);
    const fs::path source = dir / (program_name(m) + ".c");
    write_file(source, src.c_text);
    write_file(source.string() + ".obl", emit_obligations(set));
    std::cout << "generated " << source.string() << " with " << set.obligations.size() << " obligations\n";
    (void)c;
    return source.string() + ".obl";
  });
}

int check(const PipelineConfig& c, const std::string& sidecar, const fs::path& json_out) {
  CheckOptions opt;
  opt.tol = c.tol;
  opt.threads = c.threads;
  const Report r = stage("check", [&] { return check_file(sidecar, opt); });
  std::cout << format_report(r);
  if (!json_out.empty()) stage("check", [&] {
      write_file(json_out, verdicts_json(r));
      return 0;
    });
  return exit_code(r) == 0 ? kOk : kFailed;
}

void simulate_stage(const PipelineConfig& c, const AnyModel& m, const AnyBundle& b, const fs::path& dir) {
  stage("simulate", [&] {
    Scenario s;
    s.steps = c.steps;
    s.seed = c.seed;
    s.fault_start = c.fault_start;
    s.reference_scale = c.reference_scale;
    s.initial_scale = c.initial_scale;
    s.clip_fault = c.clip_fault;
    const Trace t = simulate(m, b, s);
    const DetectionMetrics d = detection_metrics(t, b);
    const std::string base = program_name(m);
    write_trace_csv(t, (dir / (base + ".trace.csv")).string());
    write_file(dir / (base + ".metrics.json"), metrics_json(d));
    write_file(dir / (base + ".plot.json"), plot_json(t, b));
    std::cout << "simulated " << d.steps << " steps: " << d.alarms << " alarms, " << d.false_alarms
              << " false, latency " << (d.latency ? std::to_string(*d.latency) : "none") << ", exits "
              << d.nominal_exits << " nominal / " << d.faulty_exits << " faulty\n";
    return 0;
  });
}

void add_model(CLI::App* app, PipelineConfig& c) {
  app->add_option("--model", c.model, "model file")->required()->check(CLI::ExistingFile);
}

void add_out(CLI::App* app, PipelineConfig& c) { app->add_option("--out", c.out, "output directory"); }

void add_scenario(CLI::App* app, PipelineConfig& c) {
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--steps", c.steps, "simulation steps");
  app->add_option("--fault-start", c.fault_start, "step at which the actuator degrades");
  app->add_option("--reference-scale", c.reference_scale, "fraction of the reference bound")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--initial-scale", c.initial_scale, "fraction of the certified set for the initial error")
      ->check(CLI::Range(0.0, 1.0));
  app->add_flag("--clip-fault", c.clip_fault, "saturate the fault signal at sigma");
}

void add_tol(CLI::App* app, PipelineConfig& c) {
  app->add_option("--tol", c.tol, "checker tolerance");
  app->add_option("--threads", c.threads, "checker threads")->check(CLI::PositiveNumber);
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(tol > 0.0)) throw InputError("--tol must be positive");
  if (fault_start && *fault_start > steps) throw InputError("--fault-start exceeds --steps");
  if (threads == 0) throw InputError("--threads must be positive");
}

int run(const std::vector<std::string>& args) {
  setup_logging();
  PipelineConfig c;
  CLI::App app{"Certified autocoding for observer-based fault detection", "fdcert"};
  app.require_subcommand(1);
  auto* synth = app.add_subcommand("synth", "synthesize the certificate bundle of a model");
  add_model(synth, c);
  add_out(synth, c);
  auto* gen = app.add_subcommand("codegen", "emit annotated C and its obligation sidecar");
  add_model(gen, c);
  add_out(gen, c);
  gen->add_option("--bundle", c.bundle, "existing certificate bundle")->check(CLI::ExistingFile);
  auto* chk = app.add_subcommand("check", "verify an obligation sidecar");
  chk->add_option("obligations", c.obligations, "sidecar file")->required()->check(CLI::ExistingFile);
  chk->add_option("--json", c.json, "write verdicts as JSON");
  add_tol(chk, c);
  auto* sim = app.add_subcommand("simulate", "run the closed loop and export trace, metrics and plot data");
  add_model(sim, c);
  add_out(sim, c);
  sim->add_option("--bundle", c.bundle, "existing certificate bundle")->check(CLI::ExistingFile);
  add_scenario(sim, c);
  auto* pipe = app.add_subcommand("pipeline", "synth, codegen, check and simulate in one go");
  add_model(pipe, c);
  add_out(pipe, c);
  add_tol(pipe, c);
  add_scenario(pipe, c);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kError;
  }

  try {
    c.validate();
    if (*chk) return check(c, c.obligations, c.json);
    const fs::path dir = output_dir(c);
    const AnyModel m = load(c);
    if (*synth) {
      print_bundle_summary(bundle_for(c, m, dir, true));
      return kOk;
    }
    if (*gen) {
      codegen(c, m, bundle_for(c, m, dir, c.bundle.empty()), dir);
      return kOk;
    }
    if (*sim) {
      simulate_stage(c, m, bundle_for(c, m, dir, false), dir);
      return kOk;
    }
    const AnyBundle b = bundle_for(c, m, dir, true);
    print_bundle_summary(b);
    const std::string sidecar = codegen(c, m, b, dir);
    const int verdict = check(c, sidecar, dir / (program_name(m) + ".verdicts.json"));
    simulate_stage(c, m, b, dir);
    if (verdict != kOk) std::cerr << "error: check: not every obligation was proved\n";
    return verdict;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace fdcert::cli
