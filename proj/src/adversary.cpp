#include "naklab/adversary.hpp"

#include <algorithm>
#include <stdexcept>

namespace naklab {

namespace {

std::vector<BlockRef> chain_on(BlockId base, std::uint32_t z) {
  std::vector<BlockRef> parents;
  parents.reserve(z);
  for (std::uint32_t j = 0; j < z; ++j)
    parents.push_back(j == 0 ? BlockRef::existing(base) : BlockRef::fresh(j - 1));
  return parents;
}

std::string canonical(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

}  // namespace

BlockId adversary_tip(const BlockTree& tree) {
  const auto top = tree.at_height(tree.max_height());
  BlockId best = top.front();
  for (BlockId id : top) {
    if (!tree[id].honest() && tree[best].honest()) best = id;
  }
  return best;
}

StrategyDecision PassiveStrategy::decide(const AdversarySnapshot&, std::uint32_t z) {
  StrategyDecision d;
  d.new_block_parents.assign(z, BlockRef::existing(kGenesis));
  return d;
}

StrategyDecision HonestMimicStrategy::decide(const AdversarySnapshot& snap, std::uint32_t z) {
  StrategyDecision d;
  d.new_block_parents = chain_on(adversary_tip(snap.tree), z);
  if (z > 0) d.releases.push_back({BlockRef::fresh(z - 1), 0});
  return d;
}

StrategyDecision TieRusherStrategy::decide(const AdversarySnapshot& snap, std::uint32_t z) {
  StrategyDecision d;
  const BlockId base = adversary_tip(snap.tree);
  d.new_block_parents = chain_on(base, z);

  // Withheld blocks on the branch ending at the new private tip, by height.
  std::map<Height, BlockRef> branch;
  const Height base_height = snap.tree[base].height;
  for (std::uint32_t j = 0; j < z; ++j)
    branch.emplace(base_height + 1 + j, BlockRef::fresh(j));
  for (BlockId id = base; id != kNoBlock && snap.withheld.count(id) != 0; id = snap.tree[id].parent)
    branch.emplace(snap.tree[id].height, BlockRef::existing(id));

  for (BlockId id : snap.new_honest) {
    auto it = branch.find(snap.tree[id].height);
    if (it == branch.end()) continue;
    d.releases.push_back({it->second, 0});
    // Releasing a block publishes everything under it as well.
    branch.erase(branch.begin(), std::next(it));
  }
  return d;
}

StrategyDecision DoubleSpendStrategy::decide(const AdversarySnapshot& snap, std::uint32_t z) {
  if (!active_) {
    fork_ = longest_tip(snap.view, snap.tree, snap.tiebreak);
    private_tip_ = fork_;
    behind_ = 0;
    active_ = true;
    ++forks_;
  }
  StrategyDecision d;
  d.new_block_parents = chain_on(private_tip_, z);

  const Height private_height = snap.tree[private_tip_].height + z;
  const Height target = snap.tree[fork_].height + 1;
  const Height k = snap.params.confirm_depth;
  const bool public_confirmed =
      static_cast<Height>(snap.confirmed.size()) > target && !snap.confirmed[target].empty();
  const bool outruns =
      private_height > snap.public_height ||
      (private_height == snap.public_height && snap.tiebreak.kind == TieBreak::AdversaryPrefer);

  if (public_confirmed && private_height >= target + k && outruns) {
    d.releases.push_back({z > 0 ? BlockRef::fresh(z - 1) : BlockRef::existing(private_tip_), 0});
    active_ = false;
    ++releases_;
    return d;
  }
  behind_ = private_height < snap.public_height ? behind_ + 1 : 0;
  if (behind_ > patience_) active_ = false;
  return d;
}

void DoubleSpendStrategy::created(std::span<const BlockId> ids) {
  if (active_ && !ids.empty()) private_tip_ = ids.back();
}

Round default_patience(const SimParams& p) { return 10 * p.tau * (p.confirm_depth + 1); }

std::unique_ptr<Strategy> make_strategy(std::string_view name, const StrategyOptions& options,
                                        const SimParams& p) {
  const std::string key = canonical(name);
  auto reject_options = [&] {
    if (!options.empty())
      throw std::invalid_argument("strategy '" + key + "' takes no options");
  };
  if (key == "passive") {
    reject_options();
    return std::make_unique<PassiveStrategy>();
  }
  if (key == "honest-mimic") {
    reject_options();
    return std::make_unique<HonestMimicStrategy>();
  }
  if (key == "tie-rusher") {
    reject_options();
    return std::make_unique<TieRusherStrategy>();
  }
  if (key == "double-spend" || key == "private-double-spend") {
    Round patience = default_patience(p);
    for (const auto& [opt, value] : options) {
      if (opt != "patience") throw std::invalid_argument("double-spend: unknown option '" + opt + "'");
      std::size_t used = 0;
      patience = std::stoll(value, &used);
      if (used != value.size() || patience < 0)
        throw std::invalid_argument("double-spend: patience must be a non-negative integer");
    }
    return std::make_unique<DoubleSpendStrategy>(patience);
  }
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

std::vector<std::string> strategy_names() {
  return {"passive", "honest-mimic", "tie-rusher", "double-spend"};
}

}  // namespace naklab
