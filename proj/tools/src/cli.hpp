#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fdcert::cli {

/// Exit statuses of the tool.
enum Exit : int {
  kOk = 0,
  kFailed = 1,  // verification found an unproved obligation
  kError = 2,   // a stage could not run (bad input, synthesis failure, I/O)
};

struct PipelineConfig {
  std::string model;
  std::string bundle;  // codegen/simulate: reuse instead of synthesizing
  std::string out = ".";
  std::string obligations;  // check
  std::string json;         // check: verdicts file
  double tol = 1e-8;
  unsigned threads = 1;
  std::uint64_t seed = 1;
  std::size_t steps = 10000;
  std::optional<std::size_t> fault_start;
  double reference_scale = 1.0;
  double initial_scale = 1.0;
  bool clip_fault = false;

  void validate() const;
};

/// Parses and runs one subcommand; never throws.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace fdcert::cli
