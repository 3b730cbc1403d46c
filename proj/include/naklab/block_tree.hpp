#pragma once

#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <vector>

#include "naklab/params.hpp"

namespace naklab {

using BlockId = std::uint32_t;
using Height = std::int64_t;

inline constexpr BlockId kNoBlock = std::numeric_limits<BlockId>::max();
inline constexpr BlockId kGenesis = 0;
inline constexpr Round kPending = -1;

enum class Miner : std::uint8_t { Honest, Adversary };

struct Block {
  BlockId id = kGenesis;
  BlockId parent = kNoBlock;
  Height height = 0;
  Miner miner = Miner::Honest;
  Round mined_round = 0;
  Round released_round = kPending;
  Round visible_round = kPending;

  bool honest() const { return miner == Miner::Honest; }
  bool pending() const { return released_round == kPending; }
  bool operator==(const Block&) const = default;
};

// Append-only block DAG rooted at genesis. Ids are dense and assigned in
// creation order.
class BlockTree {
 public:
  BlockTree();

  BlockId add(BlockId parent, Miner miner, Round mined_round);
  void set_delivery(BlockId id, Round released_round, Round visible_round);

  const Block& operator[](BlockId id) const { return blocks_[id]; }
  std::size_t size() const { return blocks_.size(); }
  bool contains(BlockId id) const { return id < blocks_.size(); }
  std::span<const Block> blocks() const { return blocks_; }
  std::span<const BlockId> children(BlockId id) const { return children_[id]; }
  const std::set<BlockId>& tips() const { return tips_; }
  Height max_height() const { return static_cast<Height>(by_height_.size()) - 1; }
  std::span<const BlockId> at_height(Height h) const;

  // True if `ancestor` is `descendant` or lies on its path to genesis.
  bool is_ancestor(BlockId ancestor, BlockId descendant) const;
  BlockId ancestor_at_height(BlockId id, Height h) const;
  BlockId common_ancestor(BlockId a, BlockId b) const;
  // Genesis first, `tip` last.
  std::vector<BlockId> chain_to(BlockId tip) const;

  // Throws std::logic_error naming the first broken structural invariant.
  void check_invariants() const;

 private:
  std::vector<Block> blocks_;
  std::vector<std::vector<BlockId>> children_;
  std::vector<std::vector<BlockId>> by_height_;
  std::set<BlockId> tips_;
};

// The single shared view of all honest nodes at the end of `round()`.
// Grows monotonically; tracks the blocks at maximum height so the
// longest-chain rule is O(ties).
class HonestView {
 public:
  HonestView();

  void reveal(const BlockTree& tree, BlockId id);
  void set_round(Round r) { round_ = r; }

  Round round() const { return round_; }
  bool contains(BlockId id) const { return id < seen_.size() && seen_[id] != 0; }
  std::span<const BlockId> visible() const { return visible_; }
  Height max_height() const { return max_height_; }
  std::span<const BlockId> top() const { return top_; }

 private:
  Round round_ = -1;
  std::vector<std::uint8_t> seen_;
  std::vector<BlockId> visible_;
  std::vector<BlockId> top_;
  Height max_height_ = 0;
};

enum class TieBreak { FirstSeen, AdversaryPrefer, Random };

struct TieBreakPolicy {
  TieBreak kind = TieBreak::FirstSeen;
  std::uint64_t seed = 0;  // Random only
};

// Longest-chain rule over the view. `salt` lets several miners in one round
// draw independently under TieBreak::Random; other policies ignore it.
BlockId longest_tip(const HonestView& view, const BlockTree& tree, const TieBreakPolicy& policy,
                    std::uint64_t salt = 0);

// Blocks on the adopted chain with at least k blocks above them, ascending id.
std::vector<BlockId> confirmed_blocks(const HonestView& view, const BlockTree& tree,
                                      std::int64_t k, const TieBreakPolicy& policy);

const char* to_string(TieBreak t);
const char* to_string(Miner m);

}  // namespace naklab
