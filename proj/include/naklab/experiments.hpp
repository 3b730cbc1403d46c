#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "naklab/engine.hpp"
#include "naklab/params.hpp"

namespace naklab {

enum class Verdict { Pass, Fail, Inconclusive };

const char* to_string(Verdict v);

struct ExperimentResult {
  std::string name;
  SimParams params;
  std::int64_t m = 0;
  std::int64_t trials = 0;  // Bernoulli observations behind the estimate
  std::int64_t events = 0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<double> analytic_bound;
  Verdict verdict = Verdict::Inconclusive;
  double runtime_seconds = 0.0;
  std::uint64_t master_seed = 0;
  std::string detail;
};

// Knobs shared by all verifiers. The tail margin delta is params.margin and
// the master seed is params.seed.
struct VerifierSpec {
  std::int64_t trials = 1000;
  std::int64_t m = 100;
  std::vector<std::int64_t> k_list = {1, 2, 4, 6, 8};
  std::string strategy;  // empty: verifier default
  StrategyOptions strategy_options;
  EngineOptions engine;
  bool engine_overridden = false;  // otherwise each verifier picks its own policies
  int jobs = 0;
};

// Rates over stationary rounds; `trials` independent sequences of
// params.horizon rounds each. PASS when the exact probability lies in the
// 95% Wilson interval.
ExperimentResult verify_er_rate(const SimParams& p, const VerifierSpec& spec);
ExperimentResult verify_uer_rate(const SimParams& p, const VerifierSpec& spec);

// Lower-tail frequency of the ER (UER) count over independent windows of
// tau*m ((2tau-1)*m) rounds. PASS when the upper Wilson limit is at most the
// explicit tail bound.
ExperimentResult verify_chernoff_er(const SimParams& p, const VerifierSpec& spec);
ExperimentResult verify_chernoff_uer(const SimParams& p, const VerifierSpec& spec);

// Frequency of UERs failing to outnumber adversarial blocks over
// (2tau-1)*m-round windows. INCONCLUSIVE outside the safe region.
ExperimentResult verify_race(const SimParams& p, const VerifierSpec& spec);

// Full-engine theorem checks.
ExperimentResult verify_chain_growth(const SimParams& p, const VerifierSpec& spec);
ExperimentResult verify_chain_quality(const SimParams& p, const VerifierSpec& spec);

// One result per k. Trial i uses the same seed for every k. Each result
// carries the suite verdict.
std::vector<ExperimentResult> verify_safety(const SimParams& p, const VerifierSpec& spec);

std::vector<std::string> verifier_names();

// Dispatch by name; throws std::invalid_argument for unknown names.
std::vector<ExperimentResult> run_verifier(std::string_view name, const SimParams& p,
                                           const VerifierSpec& spec);

}  // namespace naklab
