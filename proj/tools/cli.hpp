#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "anderson/experiments.hpp"

namespace anderson::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kBadConfig = 2;
inline constexpr int kSolverFailed = 3;

// "key=value" (spaces around either side are trimmed).
std::pair<std::string, std::string> split_assignment(const std::string& text);

// Flat `key = value` lines; '#' starts a comment. Errors read "<source>:<line>: ...".
void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& source);
void apply_config_file(ExperimentConfig& cfg, const std::string& path);
std::string format_config(const ExperimentConfig& cfg);

// Fixed-width float text used in every CSV (17 significant digits).
std::string csv_number(double v);

struct CheckResult {
  std::string name;
  bool passed;
  std::string detail;
};

// Fast invariant suite behind the `selftest` subcommand.
std::vector<CheckResult> selftest(int workers);

// Full command line without the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace anderson::cli
