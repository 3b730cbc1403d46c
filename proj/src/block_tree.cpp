#include "naklab/block_tree.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "naklab/rng.hpp"

namespace naklab {

BlockTree::BlockTree() {
  Block genesis;
  genesis.released_round = 0;
  genesis.visible_round = 0;
  blocks_.push_back(genesis);
  children_.emplace_back();
  by_height_.push_back({kGenesis});
  tips_.insert(kGenesis);
}

BlockId BlockTree::add(BlockId parent, Miner miner, Round mined_round) {
  if (!contains(parent)) throw std::out_of_range("BlockTree::add: unknown parent");
  Block b;
  b.id = static_cast<BlockId>(blocks_.size());
  b.parent = parent;
  b.height = blocks_[parent].height + 1;
  b.miner = miner;
  b.mined_round = mined_round;
  blocks_.push_back(b);
  children_.emplace_back();
  children_[parent].push_back(b.id);
  if (b.height > max_height()) by_height_.emplace_back();
  by_height_[b.height].push_back(b.id);
  tips_.erase(parent);
  tips_.insert(b.id);
  return b.id;
}

void BlockTree::set_delivery(BlockId id, Round released_round, Round visible_round) {
  Block& b = blocks_.at(id);
  b.released_round = released_round;
  b.visible_round = visible_round;
}

std::span<const BlockId> BlockTree::at_height(Height h) const {
  if (h < 0 || h > max_height()) return {};
  return by_height_[h];
}

bool BlockTree::is_ancestor(BlockId ancestor, BlockId descendant) const {
  const Height h = blocks_[ancestor].height;
  if (blocks_[descendant].height < h) return false;
  return ancestor_at_height(descendant, h) == ancestor;
}

BlockId BlockTree::ancestor_at_height(BlockId id, Height h) const {
  if (h < 0 || h > blocks_[id].height) return kNoBlock;
  while (blocks_[id].height > h) id = blocks_[id].parent;
  return id;
}

BlockId BlockTree::common_ancestor(BlockId a, BlockId b) const {
  const Height h = std::min(blocks_[a].height, blocks_[b].height);
  a = ancestor_at_height(a, h);
  b = ancestor_at_height(b, h);
  while (a != b) {
    a = blocks_[a].parent;
    b = blocks_[b].parent;
  }
  return a;
}

std::vector<BlockId> BlockTree::chain_to(BlockId tip) const {
  std::vector<BlockId> chain(blocks_[tip].height + 1);
  for (BlockId id = tip; id != kNoBlock; id = blocks_[id].parent) chain[blocks_[id].height] = id;
  return chain;
}

void BlockTree::check_invariants() const {
  auto broken = [](BlockId id, const char* what) {
    std::ostringstream os;
    os << "block tree invariant broken at block " << id << ": " << what;
    throw std::logic_error(os.str());
  };
  const Block& g = blocks_.front();
  if (g.parent != kNoBlock || g.height != 0 || g.mined_round != 0) broken(kGenesis, "genesis shape");
  for (const Block& b : blocks_) {
    if (b.id == kGenesis) continue;
    // Parents precede children in id order, so this also rules out cycles.
    if (b.parent >= b.id) broken(b.id, "parent created after child");
    if (b.height != blocks_[b.parent].height + 1) broken(b.id, "height recurrence");
    const auto& siblings = children_[b.parent];
    if (std::find(siblings.begin(), siblings.end(), b.id) == siblings.end())
      broken(b.id, "missing from parent's children");
    if (b.honest() && b.released_round != b.mined_round) broken(b.id, "honest block withheld");
    if (!b.pending() && b.released_round < b.mined_round) broken(b.id, "released before mined");
    if (b.visible_round != kPending && b.visible_round < b.released_round)
      broken(b.id, "visible before release");
  }
  for (BlockId id = 0; id < blocks_.size(); ++id) {
    if (children_[id].empty() != (tips_.count(id) == 1)) broken(id, "tip set mismatch");
  }
}

HonestView::HonestView() : seen_(1, 1), visible_{kGenesis}, top_{kGenesis} {}

void HonestView::reveal(const BlockTree& tree, BlockId id) {
  if (contains(id)) return;
  const Block& b = tree[id];
  if (!contains(b.parent)) throw std::logic_error("HonestView::reveal: parent not visible");
  if (seen_.size() <= id) seen_.resize(tree.size(), 0);
  seen_[id] = 1;
  visible_.push_back(id);
  if (b.height > max_height_) {
    max_height_ = b.height;
    top_.clear();
  }
  if (b.height == max_height_) top_.push_back(id);
}

namespace {

bool seen_earlier(const Block& a, const Block& b) {
  if (a.visible_round != b.visible_round) return a.visible_round < b.visible_round;
  return a.id < b.id;
}

}  // namespace

BlockId longest_tip(const HonestView& view, const BlockTree& tree, const TieBreakPolicy& policy,
                    std::uint64_t salt) {
  const auto top = view.top();
  if (top.size() == 1) return top.front();
  switch (policy.kind) {
    case TieBreak::FirstSeen:
    case TieBreak::AdversaryPrefer: {
      const bool prefer_adv = policy.kind == TieBreak::AdversaryPrefer;
      BlockId best = top.front();
      for (BlockId id : top.subspan(1)) {
        const Block& c = tree[id];
        const Block& b = tree[best];
        if (prefer_adv && c.honest() != b.honest()) {
          if (!c.honest()) best = id;
        } else if (seen_earlier(c, b)) {
          best = id;
        }
      }
      return best;
    }
    case TieBreak::Random: {
      std::vector<BlockId> sorted(top.begin(), top.end());
      std::sort(sorted.begin(), sorted.end());
      const std::uint64_t draw =
          splitmix64(policy.seed ^ splitmix64(static_cast<std::uint64_t>(view.round()) * 0x9e37ULL + salt));
      return sorted[draw % sorted.size()];
    }
  }
  return top.front();
}

std::vector<BlockId> confirmed_blocks(const HonestView& view, const BlockTree& tree,
                                      std::int64_t k, const TieBreakPolicy& policy) {
  const BlockId tip = longest_tip(view, tree, policy);
  const Height deepest = tree[tip].height - k;
  std::vector<BlockId> out;
  if (deepest < 0) return out;
  for (BlockId id = tree.ancestor_at_height(tip, deepest); id != kNoBlock; id = tree[id].parent)
    out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

const char* to_string(TieBreak t) {
  switch (t) {
    case TieBreak::FirstSeen: return "first-seen";
    case TieBreak::AdversaryPrefer: return "adversary-prefer";
    case TieBreak::Random: return "random";
  }
  return "?";
}

const char* to_string(Miner m) { return m == Miner::Honest ? "honest" : "adversary"; }

}  // namespace naklab
