#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "naklab/engine.hpp"
#include "naklab/serialize.hpp"
#include "naklab/sweep.hpp"

namespace naklab::cli {

enum class Subcommand { Bounds, Simulate, Verify, Sweep };
enum class Format { Json, Csv, Text };

struct RunConfig {
  Subcommand subcommand = Subcommand::Bounds;
  SimParams params;
  std::string strategy = "passive";
  StrategyOptions strategy_options;
  DelayPolicy delay = DelayPolicy::WorstCase;
  TieBreak tiebreak = TieBreak::FirstSeen;
  bool engine_overridden = false;
  std::string out;  // empty: stdout
  Format format = Format::Text;
  int verbosity = 0;
  int jobs = 0;
  std::string experiment;  // verify; "all" runs every verifier
  std::string verifier;    // sweep
  std::int64_t trials = 1000;
  std::int64_t m = 100;
  std::vector<std::int64_t> k_list = {1, 2, 4, 6, 8};
  std::vector<std::int64_t> taus;  // bounds: optional tau-limit table
  SweepGrid grid;
  bool print_config = false;
};

// Bad flags, unreadable config files, or invalid parameters. Exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `args` includes the program name. Flag values override the config file
// (--config / --params, JSON keyed by long flag names); NAKLAB_SEED is the
// seed fallback when neither sets one.
RunConfig parse_config(std::span<const std::string> args);

// Effective configuration, keyed like the config file.
Json config_to_json(const RunConfig& cfg);

const char* to_string(Subcommand s);
const char* to_string(Format f);

// 0: success (verify: every verdict PASS or INCONCLUSIVE); 1: FAIL verdict or
// I/O error.
int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// parse_config + dispatch with the documented exit codes; 2 on usage errors.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

std::string usage();

}  // namespace naklab::cli
