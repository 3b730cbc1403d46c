#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "naklab/block_tree.hpp"
#include "naklab/params.hpp"

namespace naklab {

// Names either an existing block or the j-th block the adversary mines in the
// current decision, so a decision can chain fresh blocks and release them.
struct BlockRef {
  enum class Kind : std::uint8_t { Existing, Fresh };
  Kind kind = Kind::Existing;
  std::uint32_t value = 0;

  static BlockRef existing(BlockId id) { return {Kind::Existing, id}; }
  static BlockRef fresh(std::uint32_t j) { return {Kind::Fresh, j}; }
  bool operator==(const BlockRef&) const = default;
};

struct Release {
  BlockRef block;
  Round delay = 0;  // rounds until every honest node has it, in [0, tau-1]
};

struct StrategyDecision {
  std::vector<BlockRef> new_block_parents;  // one entry per adversarial block this round
  std::vector<Release> releases;
};

struct ConfirmationRecord {
  BlockId block = kNoBlock;
  Height height = 0;
  Round round = 0;
  BlockId tip = kNoBlock;  // tip of the adopted chain that confirmed it
  bool operator==(const ConfirmationRecord&) const = default;
};

// confirmed[h] lists every block at height h ever confirmed, in order.
using ConfirmedLedger = std::vector<std::vector<ConfirmationRecord>>;

// What the adversary sees when it moves, after this round's honest blocks are
// mined and before deliveries. The adversary sees every block immediately.
struct AdversarySnapshot {
  Round round = 0;
  const SimParams& params;
  TieBreakPolicy tiebreak;
  const BlockTree& tree;
  const HonestView& view;  // as of the end of the previous round
  std::span<const BlockId> new_honest;
  const std::set<BlockId>& withheld;
  const ConfirmedLedger& confirmed;
  Height public_height = 0;  // honest view height at the end of this round if nothing is released
};

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::string name() const = 0;
  virtual StrategyDecision decide(const AdversarySnapshot& snap, std::uint32_t z) = 0;
  // Ids the engine assigned to this round's fresh blocks, in decision order.
  virtual void created(std::span<const BlockId> ids) { (void)ids; }
};

using StrategyOptions = std::map<std::string, std::string>;

// Mines on genesis and never releases.
class PassiveStrategy final : public Strategy {
 public:
  std::string name() const override { return "passive"; }
  StrategyDecision decide(const AdversarySnapshot& snap, std::uint32_t z) override;
};

// Extends the longest known chain and publishes at once.
class HonestMimicStrategy final : public Strategy {
 public:
  std::string name() const override { return "honest-mimic"; }
  StrategyDecision decide(const AdversarySnapshot& snap, std::uint32_t z) override;
};

// Builds a private chain on the longest known tip and answers every new honest
// block with a withheld block of the same height.
class TieRusherStrategy final : public Strategy {
 public:
  std::string name() const override { return "tie-rusher"; }
  StrategyDecision decide(const AdversarySnapshot& snap, std::uint32_t z) override;
};

// Forks at the public tip, mines a private branch, and publishes it once a
// conflicting public block at the fork height is k-deep and the branch both
// buries its own block k-deep and outruns the public chain. Re-forks after
// trailing the public chain for more than `patience` consecutive rounds.
class DoubleSpendStrategy final : public Strategy {
 public:
  explicit DoubleSpendStrategy(Round patience) : patience_(patience) {}
  std::string name() const override { return "double-spend"; }
  StrategyDecision decide(const AdversarySnapshot& snap, std::uint32_t z) override;
  void created(std::span<const BlockId> ids) override;

  Round patience() const { return patience_; }
  std::int64_t releases() const { return releases_; }
  std::int64_t forks() const { return forks_; }

 private:
  Round patience_;
  bool active_ = false;
  BlockId fork_ = kGenesis;
  BlockId private_tip_ = kGenesis;
  Round behind_ = 0;
  std::int64_t releases_ = 0;
  std::int64_t forks_ = 0;
};

Round default_patience(const SimParams& p);

// Accepts passive, honest-mimic, tie-rusher, double-spend (underscores also
// accepted). Throws std::invalid_argument on unknown names or options.
std::unique_ptr<Strategy> make_strategy(std::string_view name, const StrategyOptions& options,
                                        const SimParams& p);

std::vector<std::string> strategy_names();

// Highest block known to the adversary; adversarial blocks win ties, then
// lower ids.
BlockId adversary_tip(const BlockTree& tree);

}  // namespace naklab
