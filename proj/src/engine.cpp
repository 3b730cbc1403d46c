#include "naklab/engine.hpp"

#include <algorithm>
#include <sstream>

namespace naklab {

const char* to_string(DelayPolicy d) {
  switch (d) {
    case DelayPolicy::WorstCase: return "worst-case";
    case DelayPolicy::BestCase: return "best-case";
    case DelayPolicy::UniformRandom: return "uniform-random";
  }
  return "?";
}

TallySampler::TallySampler(const SimParams& p) {
  // std::poisson_distribution requires a strictly positive mean.
  if (p.lambda_h() > 0.0) honest_.emplace(p.lambda_h());
  if (p.lambda_z() > 0.0) adversarial_.emplace(p.lambda_z());
}

std::uint32_t TallySampler::honest(Rng& rng) { return honest_ ? (*honest_)(rng) : 0; }
std::uint32_t TallySampler::adversarial(Rng& rng) { return adversarial_ ? (*adversarial_)(rng) : 0; }

std::pair<std::uint32_t, std::uint32_t> TallySampler::operator()(Rng& rng) {
  const std::uint32_t h = honest(rng);
  const std::uint32_t z = adversarial(rng);
  return {h, z};
}

RoundTallies sample_tallies(const SimParams& p, Round rounds, Rng& rng) {
  TallySampler sample(p);
  RoundTallies t;
  t.honest.reserve(rounds);
  t.adversarial.reserve(rounds);
  for (Round r = 0; r < rounds; ++r) {
    const auto [h, z] = sample(rng);
    t.honest.push_back(h);
    t.adversarial.push_back(z);
  }
  return t;
}

Simulation::Simulation(const SimParams& params, Strategy& strategy, EngineOptions options,
                       const RoundTallies* script)
    : params_(validate_params(params, HorizonCheck::AllowShort)),
      strategy_(strategy),
      options_(options),
      policy_{options.tiebreak, params.seed},
      script_(script),
      rng_(params.seed),
      sampler_(params) {
  if (!kInvariantChecksCompiled) options_.check_invariants = false;
  if (script_ != nullptr && static_cast<Round>(script_->size()) < params_.horizon)
    throw std::invalid_argument("scripted tallies shorter than the horizon");
  deliveries_.resize(params_.horizon);
  reach_due_.assign(params_.horizon, 0);
  is_confirmed_.push_back(0);
  honest_at_height_.push_back(1);  // genesis counts as honest
  er_round_at_height_.push_back(-1);
  uer_height_.push_back(0);
}

bool Simulation::done() const {
  return round_ >= params_.horizon || (options_.stop_on_violation && violation_.has_value());
}

RoundReport Simulation::step() {
  if (round_ >= params_.horizon) throw std::logic_error("Simulation::step past the horizon");
  const Round t = round_;
  std::uint32_t h = 0;
  std::uint32_t z = 0;
  if (script_ != nullptr) {
    h = script_->honest[t];
    z = script_->adversarial[t];
  } else {
    std::tie(h, z) = sampler_(rng_);
  }
  tallies_.honest.push_back(h);
  tallies_.adversarial.push_back(z);

  honest_mine(h);
  adversary_move(z);
  deliver();
  view_.set_round(t);
  const bool had_violation = violation_.has_value();
  const std::size_t fresh = confirm();
  if (options_.check_invariants) check_round_invariants();

  RoundReport report;
  report.round = t;
  report.honest = h;
  report.adversarial = z;
  report.longest = longest_.back();
  report.newly_confirmed = fresh;
  report.violation = !had_violation && violation_.has_value();
  ++round_;
  return report;
}

void Simulation::schedule(BlockId id, Round visible_at) {
  if (visible_at < params_.horizon) deliveries_[visible_at].push_back(id);
}

void Simulation::honest_mine(std::uint32_t h) {
  const Round t = round_;
  new_honest_.clear();
  first_honest_of_round_.push_back(kNoBlock);
  const bool effective = h > 0 && last_honest_round_ <= t - params_.tau;
  for (std::uint32_t i = 0; i < h; ++i) {
    // Every miner in round t extends the view frozen at the end of round t-1.
    const BlockId parent = longest_tip(view_, tree_, policy_, i);
    const BlockId id = tree_.add(parent, Miner::Honest, t);
    Round delay = 0;
    switch (options_.delay) {
      case DelayPolicy::WorstCase: delay = params_.tau - 1; break;
      case DelayPolicy::BestCase: delay = 0; break;
      case DelayPolicy::UniformRandom:
        delay = std::uniform_int_distribution<Round>(0, params_.tau - 1)(rng_);
        break;
    }
    tree_.set_delivery(id, t, t + delay);
    schedule(id, t + delay);
    new_honest_.push_back(id);
    if (i == 0) first_honest_of_round_.back() = id;

    track_honest_block(id);
    if (options_.check_invariants && effective) {
      const Height ht = tree_[id].height;
      Round& owner = er_round_at_height_[ht];
      if (owner >= 0 && owner != t) {
        std::ostringstream os;
        os << "er-height: ER rounds " << owner << " and " << t << " both mined honest height " << ht;
        invariant_failure(os.str());
      }
      owner = t;
    }
  }
  if (h > 0) last_honest_round_ = t;
}

void Simulation::track_honest_block(BlockId id) {
  const Height ht = tree_[id].height;
  if (static_cast<Height>(honest_at_height_.size()) <= ht) {
    honest_at_height_.resize(ht + 1, 0);
    er_round_at_height_.resize(ht + 1, -1);
    uer_height_.resize(ht + 1, 0);
  }
  ++honest_at_height_[ht];
  if (!options_.check_invariants) return;
  if (uer_height_[ht] != 0) {
    std::ostringstream os;
    os << "uer-unique: honest block " << id << " shares height " << ht << " with a UER block";
    invariant_failure(os.str());
  }
  const Round due = tree_[id].mined_round + params_.tau - 1;
  if (due < params_.horizon) reach_due_[due] = std::max(reach_due_[due], ht);
}

Height Simulation::projected_public_height() const {
  Height h = view_.max_height();
  for (BlockId id : deliveries_[round_]) h = std::max(h, tree_[id].height);
  return h;
}

void Simulation::adversary_move(std::uint32_t z) {
  const Round t = round_;
  const AdversarySnapshot snap{t,         params_,    policy_,    tree_,
                               view_,     new_honest_, withheld_, confirmed_,
                               projected_public_height()};
  StrategyDecision d = strategy_.decide(snap, z);

  if (d.new_block_parents.size() != z) {
    std::ostringstream os;
    os << strategy_.name() << " supplied " << d.new_block_parents.size() << " parents for " << z
       << " blocks in round " << t;
    throw StrategyViolation(os.str());
  }
  std::vector<BlockId> fresh;
  fresh.reserve(z);
  auto resolve = [&](const BlockRef& ref) -> BlockId {
    if (ref.kind == BlockRef::Kind::Fresh) {
      if (ref.value >= fresh.size())
        throw StrategyViolation(strategy_.name() + " referenced a fresh block not yet mined");
      return fresh[ref.value];
    }
    if (!tree_.contains(ref.value))
      throw StrategyViolation(strategy_.name() + " referenced an unknown block");
    return ref.value;
  };
  for (const BlockRef& parent : d.new_block_parents) {
    const BlockId id = tree_.add(resolve(parent), Miner::Adversary, t);
    withheld_.insert(id);
    fresh.push_back(id);
  }
  strategy_.created(fresh);

  for (const Release& rel : d.releases) {
    const BlockId id = resolve(rel.block);
    if (withheld_.count(id) == 0)
      throw StrategyViolation(strategy_.name() + " released a block it does not hold");
    if (rel.delay < 0 || rel.delay > params_.tau - 1)
      throw StrategyViolation(strategy_.name() + " chose a delay outside [0, tau-1]");
    release_chain(id, t + rel.delay);
  }
}

// Publishing a block publishes its withheld ancestors too; nothing becomes
// visible before its parent.
void Simulation::release_chain(BlockId id, Round visible_at) {
  std::vector<BlockId> chain;
  for (BlockId b = id; withheld_.count(b) != 0; b = tree_[b].parent) chain.push_back(b);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const Round parent_visible = tree_[tree_[*it].parent].visible_round;
    const Round at = std::max(visible_at, parent_visible);
    tree_.set_delivery(*it, round_, at);
    withheld_.erase(*it);
    schedule(*it, at);
  }
}

void Simulation::deliver() {
  auto& due = deliveries_[round_];
  std::sort(due.begin(), due.end());  // parents carry smaller ids
  for (BlockId id : due) view_.reveal(tree_, id);
  due.clear();
  due.shrink_to_fit();
}

std::size_t Simulation::confirm() {
  const BlockId tip = longest_tip(view_, tree_, policy_);
  const Height tip_height = tree_[tip].height;
  longest_.push_back(tip_height);
  if (is_confirmed_.size() < tree_.size()) is_confirmed_.resize(tree_.size(), 0);

  std::vector<ConfirmationRecord> fresh;
  const Height deepest = tip_height - params_.confirm_depth;
  if (deepest >= 0) {
    // Confirmation covers a whole prefix, so stop at the first block already covered.
    for (BlockId id = tree_.ancestor_at_height(tip, deepest); id != kNoBlock && !is_confirmed_[id];
         id = tree_[id].parent) {
      is_confirmed_[id] = 1;
      fresh.push_back({id, tree_[id].height, round_, tip});
    }
  }
  for (auto it = fresh.rbegin(); it != fresh.rend(); ++it) {
    if (static_cast<Height>(confirmed_.size()) <= it->height) confirmed_.resize(it->height + 1);
    auto& slot = confirmed_[it->height];
    if (!slot.empty() && !violation_) record_violation(*it, slot.front());
    slot.push_back(*it);
    confirmations_.push_back(*it);
  }
  confirmed_count_.push_back(confirmations_.size());
  return fresh.size();
}

void Simulation::record_violation(const ConfirmationRecord& later, const ConfirmationRecord& earlier) {
  ViolationCertificate c;
  c.block_b = later.block;
  c.block_b_prime = earlier.block;
  c.r_confirm = later.round;
  c.r_prime_confirm = earlier.round;
  c.tip_b = later.tip;
  c.tip_b_prime = earlier.tip;
  c.b1 = tree_.common_ancestor(later.block, earlier.block);
  c.b0 = c.b1;
  while (!tree_[c.b0].honest()) c.b0 = tree_[c.b0].parent;
  c.r0 = tree_[c.b0].mined_round;
  violation_ = c;
}

void Simulation::check_round_invariants() {
  const Round t = round_;
  if (longest_.back() < reach_due_[t]) {
    std::ostringstream os;
    os << "reach: end of round " << t << " longest chain " << longest_.back() << " < "
       << reach_due_[t];
    invariant_failure(os.str());
  }
  if (longest_.size() >= 2 && longest_.back() < longest_[longest_.size() - 2])
    invariant_failure("longest chain shrank at round " + std::to_string(t));

  // Round u's UER status is settled once its forward window has closed.
  const Round u = t - params_.tau + 1;
  if (u < 0 || tallies_.honest[u] != 1) return;
  for (Round r = std::max<Round>(0, u - params_.tau + 1); r <= t; ++r) {
    if (r != u && tallies_.honest[r] != 0) return;
  }
  const BlockId b = first_honest_of_round_[u];
  const Height ht = tree_[b].height;
  uer_height_[ht] = 1;
  if (honest_at_height_[ht] != 1) {
    std::ostringstream os;
    os << "uer-unique: UER block " << b << " at height " << ht << " is one of "
       << honest_at_height_[ht] << " honest blocks";
    invariant_failure(os.str());
  }
}

void Simulation::invariant_failure(std::string what) {
  if (invariant_failures_.size() < 64) invariant_failures_.push_back(std::move(what));
}

Trace Simulation::finish() {
  Trace tr;
  tr.params = params_;
  tr.options = options_;
  tr.strategy = strategy_.name();
  tr.rounds_run = round_;
  tr.tallies = tallies_;
  tr.indicators = detect_indicators(tallies_, params_.tau);
  tr.blocks.assign(tree_.blocks().begin(), tree_.blocks().end());
  tr.longest = longest_;
  tr.confirmed_count = confirmed_count_;
  tr.confirmations = confirmations_;
  tr.invariant_failures = invariant_failures_;
  if (options_.check_invariants) {
    try {
      tree_.check_invariants();
    } catch (const std::logic_error& e) {
      tr.invariant_failures.emplace_back(e.what());
    }
  }
  if (violation_) {
    ViolationCertificate c = *violation_;
    const ContainmentCheck check = check_event_containment(tr, c);
    c.e1_holds = check.e1;
    c.e2_holds = check.e2;
    c.length_bound_ok = check.length_bound_ok;
    tr.violation = c;
  }
  return tr;
}

Trace run(const SimParams& params, Strategy& strategy, const EngineOptions& options) {
  Simulation sim(params, strategy, options);
  while (!sim.done()) sim.step();
  return sim.finish();
}

Trace run_scripted(const SimParams& params, const RoundTallies& script, Strategy& strategy,
                   const EngineOptions& options) {
  Simulation sim(params, strategy, options, &script);
  while (!sim.done()) sim.step();
  return sim.finish();
}

ContainmentCheck check_event_containment(const Trace& trace, const ViolationCertificate& cert) {
  const auto& blocks = trace.blocks;
  const SimParams& p = trace.params;
  auto parent = [&](BlockId id) { return blocks[id].parent; };
  auto path_up = [&](BlockId id) {
    std::vector<BlockId> path;
    for (; id != kNoBlock; id = parent(id)) path.push_back(id);
    return path;
  };

  ContainmentCheck out;
  // Independent ancestor walk: first block on b's path that is also on b''s.
  const auto up_b = path_up(cert.block_b);
  const auto up_bp = path_up(cert.block_b_prime);
  std::set<BlockId> on_bp(up_bp.begin(), up_bp.end());
  BlockId b1 = kNoBlock;
  for (BlockId id : up_b) {
    if (on_bp.count(id) != 0) {
      b1 = id;
      break;
    }
  }
  BlockId b0 = b1;
  while (b0 != kNoBlock && blocks[b0].miner != Miner::Honest) b0 = parent(b0);
  if (b0 == kNoBlock) return out;
  const Round r0 = blocks[b0].mined_round;
  const Round r = std::max(cert.r_confirm, cert.r_prime_confirm);
  out.fields_consistent = b1 == cert.b1 && b0 == cert.b0 && r0 == cert.r0 &&
                          blocks[cert.block_b].height == blocks[cert.block_b_prime].height &&
                          cert.block_b != cert.block_b_prime;

  // E1: above b1, each confirming chain holds its block k-deep and at least
  // k+1 blocks mined in [r0, r]; the two subchains leave b1 through
  // different children.
  const std::int64_t k = p.confirm_depth;
  auto subchain = [&](BlockId confirmed, BlockId tip, BlockId& first_child) {
    std::int64_t in_window = 0;
    bool holds_block = false;
    first_child = kNoBlock;
    for (BlockId id = tip; id != kNoBlock && id != b1; id = parent(id)) {
      if (id == confirmed) holds_block = true;
      if (blocks[id].mined_round >= r0 && blocks[id].mined_round <= r) ++in_window;
      first_child = id;
    }
    const bool deep = blocks[tip].height - blocks[confirmed].height >= k;
    return holds_block && deep && in_window >= k + 1;
  };
  BlockId child_b = kNoBlock;
  BlockId child_bp = kNoBlock;
  const bool side_b = subchain(cert.block_b, cert.tip_b, child_b);
  const bool side_bp = subchain(cert.block_b_prime, cert.tip_b_prime, child_bp);
  out.e1 = side_b && side_bp && child_b != child_bp;

  // E2: Y[r0+tau, r-tau] <= Z[r0, r].
  const std::int64_t uers = count_uer(trace.indicators.uer, r0 + p.tau, r - p.tau);
  const std::int64_t adversarial = sum_rounds(trace.tallies.adversarial, r0, r);
  out.e2 = uers <= adversarial;

  const double span = static_cast<double>(r - r0 + 1);
  const double per_round = (1.0 + p.margin) * p.f_delta() / static_cast<double>(p.tau);
  out.length_bound_ok = span > static_cast<double>(2 * k + 2) / per_round;
  return out;
}

}  // namespace naklab
