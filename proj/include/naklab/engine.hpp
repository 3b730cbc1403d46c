#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "naklab/adversary.hpp"
#include "naklab/block_tree.hpp"
#include "naklab/indicators.hpp"
#include "naklab/params.hpp"
#include "naklab/rng.hpp"

namespace naklab {

// How long honest blocks take to reach every honest node.
enum class DelayPolicy {
  WorstCase,      // tau-1 rounds
  BestCase,       // same round
  UniformRandom,  // uniform on {0..tau-1}
};

const char* to_string(DelayPolicy d);

#ifdef NAKLAB_NO_INVARIANT_CHECKS
inline constexpr bool kInvariantChecksCompiled = false;
#else
inline constexpr bool kInvariantChecksCompiled = true;
#endif

// check_invariants is forced off when the checks are compiled out.
struct EngineOptions {
  DelayPolicy delay = DelayPolicy::WorstCase;
  TieBreak tiebreak = TieBreak::FirstSeen;
  bool check_invariants = true;
  bool stop_on_violation = false;
};

struct ViolationCertificate {
  BlockId block_b = kNoBlock;        // confirmed later, at r_confirm
  BlockId block_b_prime = kNoBlock;  // confirmed first
  Round r_confirm = 0;
  Round r_prime_confirm = 0;
  BlockId tip_b = kNoBlock;
  BlockId tip_b_prime = kNoBlock;
  BlockId b1 = kNoBlock;  // most recent common ancestor
  BlockId b0 = kNoBlock;  // most recent honest common ancestor
  Round r0 = 0;           // round b0 was mined
  bool e1_holds = false;
  bool e2_holds = false;
  bool length_bound_ok = false;
  bool operator==(const ViolationCertificate&) const = default;
};

struct Trace {
  SimParams params;
  EngineOptions options;
  std::string strategy;
  Round rounds_run = 0;
  RoundTallies tallies;
  IndicatorSeries indicators;
  std::vector<Block> blocks;
  std::vector<Height> longest;                // L at the end of each round
  std::vector<std::uint64_t> confirmed_count; // blocks ever confirmed, per round
  std::vector<ConfirmationRecord> confirmations;
  std::optional<ViolationCertificate> violation;
  std::vector<std::string> invariant_failures;
  std::int64_t strategy_violations = 0;
};

// A decision that references unknown blocks, releases a block the adversary
// does not hold, or picks an out-of-range delay.
class StrategyViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Draws the independent Poisson honest/adversarial counts for one round.
class TallySampler {
 public:
  explicit TallySampler(const SimParams& p);
  std::pair<std::uint32_t, std::uint32_t> operator()(Rng& rng);
  std::uint32_t honest(Rng& rng);
  std::uint32_t adversarial(Rng& rng);

 private:
  std::optional<std::poisson_distribution<std::uint32_t>> honest_;
  std::optional<std::poisson_distribution<std::uint32_t>> adversarial_;
};

RoundTallies sample_tallies(const SimParams& p, Round rounds, Rng& rng);

struct RoundReport {
  Round round = 0;
  std::uint32_t honest = 0;
  std::uint32_t adversarial = 0;
  Height longest = 0;
  std::size_t newly_confirmed = 0;
  bool violation = false;
};

// One trial. Each step runs, in order: sample tallies, honest mining against
// the previous round's view, the adversary's move, deliveries, confirmation,
// the safety check, and the structural invariant checks.
class Simulation {
 public:
  Simulation(const SimParams& params, Strategy& strategy, EngineOptions options,
             const RoundTallies* script = nullptr);

  RoundReport step();
  bool done() const;
  Trace finish();

  Round round() const { return round_; }
  const BlockTree& tree() const { return tree_; }
  const HonestView& view() const { return view_; }
  const RoundTallies& tallies() const { return tallies_; }
  const ConfirmedLedger& confirmed() const { return confirmed_; }
  const std::set<BlockId>& withheld() const { return withheld_; }
  const std::optional<ViolationCertificate>& violation() const { return violation_; }
  const std::vector<std::string>& invariant_failures() const { return invariant_failures_; }
  const std::vector<Height>& longest() const { return longest_; }
  const TieBreakPolicy& policy() const { return policy_; }

 private:
  void honest_mine(std::uint32_t h);
  void adversary_move(std::uint32_t z);
  void release_chain(BlockId id, Round visible_at);
  void schedule(BlockId id, Round visible_at);
  void deliver();
  std::size_t confirm();
  void record_violation(const ConfirmationRecord& later, const ConfirmationRecord& earlier);
  void track_honest_block(BlockId id);
  void check_round_invariants();
  void invariant_failure(std::string what);
  Height projected_public_height() const;

  SimParams params_;
  Strategy& strategy_;
  EngineOptions options_;
  TieBreakPolicy policy_;
  const RoundTallies* script_;
  Rng rng_;
  TallySampler sampler_;

  Round round_ = 0;
  BlockTree tree_;
  HonestView view_;
  RoundTallies tallies_;
  std::vector<std::vector<BlockId>> deliveries_;  // by visible round
  std::set<BlockId> withheld_;
  std::vector<BlockId> new_honest_;

  ConfirmedLedger confirmed_;
  std::vector<std::uint8_t> is_confirmed_;
  std::vector<ConfirmationRecord> confirmations_;
  std::vector<Height> longest_;
  std::vector<std::uint64_t> confirmed_count_;
  std::optional<ViolationCertificate> violation_;

  // Invariant bookkeeping.
  Round last_honest_round_ = -1;
  std::vector<Height> reach_due_;             // by round: height L must reach
  std::vector<Round> er_round_at_height_;      // ER round that produced an honest block at h
  std::vector<std::uint32_t> honest_at_height_;
  std::vector<std::uint8_t> uer_height_;
  std::vector<BlockId> first_honest_of_round_;
  std::vector<std::string> invariant_failures_;
};

Trace run(const SimParams& params, Strategy& strategy, const EngineOptions& options);
Trace run_scripted(const SimParams& params, const RoundTallies& script, Strategy& strategy,
                   const EngineOptions& options);

struct ContainmentCheck {
  bool fields_consistent = false;  // certificate ancestors match a fresh walk
  bool e1 = false;
  bool e2 = false;
  bool length_bound_ok = false;
};

// Recomputes the fork events for a certificate from the trace's raw block
// list and tallies, without the engine's tree index.
ContainmentCheck check_event_containment(const Trace& trace, const ViolationCertificate& cert);

}  // namespace naklab
