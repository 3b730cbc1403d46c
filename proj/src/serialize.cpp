#include "naklab/serialize.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace naklab {

namespace {

Json nullable_round(Round r) { return r == kPending ? Json(nullptr) : Json(r); }
Round round_or_pending(const Json& j) { return j.is_null() ? kPending : j.get<Round>(); }
Json nullable_id(BlockId id) { return id == kNoBlock ? Json(nullptr) : Json(id); }
BlockId id_or_none(const Json& j) { return j.is_null() ? kNoBlock : j.get<BlockId>(); }

DelayPolicy delay_from(const std::string& s) {
  for (auto d : {DelayPolicy::WorstCase, DelayPolicy::BestCase, DelayPolicy::UniformRandom})
    if (s == to_string(d)) return d;
  throw std::invalid_argument("unknown delay policy '" + s + "'");
}

TieBreak tiebreak_from(const std::string& s) {
  for (auto t : {TieBreak::FirstSeen, TieBreak::AdversaryPrefer, TieBreak::Random})
    if (s == to_string(t)) return t;
  throw std::invalid_argument("unknown tiebreak policy '" + s + "'");
}

std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

// CSV fields here never contain newlines; quote on commas and quotes.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_csv_preamble(std::ostream& os, const OutputMetadata& meta, const char* schema) {
  os << "# schema: " << schema << "\n";
  os << "# version: " << kVersion << "\n";
  os << "# seed: " << meta.seed << "\n";
  os << "# config: " << meta.config.dump() << "\n";
}

Json double_json(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

Json metadata_json(const OutputMetadata& meta, const char* schema) {
  return Json{{"schema", schema}, {"version", kVersion}, {"seed", meta.seed}, {"config", meta.config}};
}

Json params_to_json(const SimParams& p) {
  return Json{{"delta", p.delta},         {"mining_rate", p.mining_rate},
              {"beta", p.beta},           {"tau", p.tau},
              {"confirm_depth", p.confirm_depth}, {"margin", p.margin},
              {"horizon", p.horizon},     {"seed", p.seed}};
}

SimParams params_from_json(const Json& j) {
  SimParams p;
  p.delta = j.at("delta").get<double>();
  p.mining_rate = j.at("mining_rate").get<double>();
  p.beta = j.at("beta").get<double>();
  p.tau = j.at("tau").get<std::int64_t>();
  p.confirm_depth = j.at("confirm_depth").get<std::int64_t>();
  p.margin = j.at("margin").get<double>();
  p.horizon = j.at("horizon").get<Round>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

Json trace_to_json(const Trace& tr, const OutputMetadata& meta) {
  Json j;
  j["metadata"] = metadata_json(meta, kTraceSchema);
  j["params"] = params_to_json(tr.params);
  j["options"] = Json{{"delay", to_string(tr.options.delay)},
                      {"tiebreak", to_string(tr.options.tiebreak)},
                      {"check_invariants", tr.options.check_invariants},
                      {"stop_on_violation", tr.options.stop_on_violation}};
  j["strategy"] = tr.strategy;
  j["rounds_run"] = tr.rounds_run;
  j["tallies"] = Json{{"honest", tr.tallies.honest}, {"adversarial", tr.tallies.adversarial}};

  Json uer = Json::array();
  for (Uer y : tr.indicators.uer)
    uer.push_back(y == Uer::Indeterminate ? Json(nullptr) : Json(static_cast<int>(y)));
  j["indicators"] = Json{{"er", tr.indicators.er}, {"uer", uer},
                         {"valid_uer_upto", tr.indicators.valid_uer_upto}};

  Json blocks = Json::array();
  for (const Block& b : tr.blocks) {
    blocks.push_back(Json{{"id", b.id},
                          {"parent", nullable_id(b.parent)},
                          {"height", b.height},
                          {"miner", to_string(b.miner)},
                          {"mined_round", b.mined_round},
                          {"released_round", nullable_round(b.released_round)},
                          {"visible_round", nullable_round(b.visible_round)}});
  }
  j["blocks"] = std::move(blocks);
  j["longest_chain"] = tr.longest;
  j["confirmed_count"] = tr.confirmed_count;

  Json conf = Json::array();
  for (const auto& c : tr.confirmations)
    conf.push_back(Json{{"block", c.block}, {"height", c.height}, {"round", c.round}, {"tip", c.tip}});
  j["confirmations"] = std::move(conf);

  if (tr.violation) {
    const auto& v = *tr.violation;
    j["violation"] = Json{{"block_b", v.block_b},
                          {"block_b_prime", v.block_b_prime},
                          {"r_confirm", v.r_confirm},
                          {"r_prime_confirm", v.r_prime_confirm},
                          {"tip_b", v.tip_b},
                          {"tip_b_prime", v.tip_b_prime},
                          {"b1", v.b1},
                          {"b0", v.b0},
                          {"r0", v.r0},
                          {"e1_holds", v.e1_holds},
                          {"e2_holds", v.e2_holds},
                          {"length_bound_ok", v.length_bound_ok}};
  } else {
    j["violation"] = nullptr;
  }
  j["invariant_failures"] = tr.invariant_failures;
  j["strategy_violations"] = tr.strategy_violations;
  return j;
}

Trace trace_from_json(const Json& j) {
  Trace tr;
  tr.params = params_from_json(j.at("params"));
  const Json& o = j.at("options");
  tr.options.delay = delay_from(o.at("delay").get<std::string>());
  tr.options.tiebreak = tiebreak_from(o.at("tiebreak").get<std::string>());
  tr.options.check_invariants = o.at("check_invariants").get<bool>();
  tr.options.stop_on_violation = o.at("stop_on_violation").get<bool>();
  tr.strategy = j.at("strategy").get<std::string>();
  tr.rounds_run = j.at("rounds_run").get<Round>();
  tr.tallies.honest = j.at("tallies").at("honest").get<std::vector<std::uint32_t>>();
  tr.tallies.adversarial = j.at("tallies").at("adversarial").get<std::vector<std::uint32_t>>();

  const Json& ind = j.at("indicators");
  tr.indicators.er = ind.at("er").get<std::vector<std::uint8_t>>();
  for (const Json& y : ind.at("uer"))
    tr.indicators.uer.push_back(y.is_null() ? Uer::Indeterminate : static_cast<Uer>(y.get<int>()));
  tr.indicators.valid_uer_upto = ind.at("valid_uer_upto").get<Round>();

  for (const Json& b : j.at("blocks")) {
    Block blk;
    blk.id = b.at("id").get<BlockId>();
    blk.parent = id_or_none(b.at("parent"));
    blk.height = b.at("height").get<Height>();
    blk.miner = b.at("miner").get<std::string>() == "honest" ? Miner::Honest : Miner::Adversary;
    blk.mined_round = b.at("mined_round").get<Round>();
    blk.released_round = round_or_pending(b.at("released_round"));
    blk.visible_round = round_or_pending(b.at("visible_round"));
    tr.blocks.push_back(blk);
  }
  tr.longest = j.at("longest_chain").get<std::vector<Height>>();
  tr.confirmed_count = j.at("confirmed_count").get<std::vector<std::uint64_t>>();
  for (const Json& c : j.at("confirmations")) {
    tr.confirmations.push_back({c.at("block").get<BlockId>(), c.at("height").get<Height>(),
                                c.at("round").get<Round>(), c.at("tip").get<BlockId>()});
  }
  if (!j.at("violation").is_null()) {
    const Json& v = j.at("violation");
    ViolationCertificate c;
    c.block_b = v.at("block_b").get<BlockId>();
    c.block_b_prime = v.at("block_b_prime").get<BlockId>();
    c.r_confirm = v.at("r_confirm").get<Round>();
    c.r_prime_confirm = v.at("r_prime_confirm").get<Round>();
    c.tip_b = v.at("tip_b").get<BlockId>();
    c.tip_b_prime = v.at("tip_b_prime").get<BlockId>();
    c.b1 = v.at("b1").get<BlockId>();
    c.b0 = v.at("b0").get<BlockId>();
    c.r0 = v.at("r0").get<Round>();
    c.e1_holds = v.at("e1_holds").get<bool>();
    c.e2_holds = v.at("e2_holds").get<bool>();
    c.length_bound_ok = v.at("length_bound_ok").get<bool>();
    tr.violation = c;
  }
  tr.invariant_failures = j.at("invariant_failures").get<std::vector<std::string>>();
  tr.strategy_violations = j.at("strategy_violations").get<std::int64_t>();
  return tr;
}

void write_round_csv(std::ostream& os, const Trace& tr, const OutputMetadata& meta) {
  write_csv_preamble(os, meta, kRoundCsvSchema);
  os << "r,H,Z,X,Y,L,confirmed,violation\n";
  const Round violated_at = tr.violation ? tr.violation->r_confirm : -1;
  for (Round r = 0; r < tr.rounds_run; ++r) {
    os << r << ',' << tr.tallies.honest[r] << ',' << tr.tallies.adversarial[r] << ','
       << static_cast<int>(tr.indicators.er[r]) << ',';
    if (tr.indicators.uer[r] != Uer::Indeterminate) os << static_cast<int>(tr.indicators.uer[r]);
    os << ',' << tr.longest[r] << ',' << tr.confirmed_count[r] << ','
       << (violated_at >= 0 && r >= violated_at ? 1 : 0) << '\n';
  }
}

std::string result_csv_header() {
  return "name,beta,f_delta,tau,k,delta,rounds,m,trials,events,estimate,ci_low,ci_high,"
         "analytic_bound,verdict,master_seed,detail";
}

std::string result_csv_row(const ExperimentResult& r) {
  std::ostringstream os;
  const SimParams& p = r.params;
  os << r.name << ',' << fmt(p.beta) << ',' << fmt(p.f_delta()) << ',' << p.tau << ','
     << p.confirm_depth << ',' << fmt(p.margin) << ',' << p.horizon << ',' << r.m << ','
     << r.trials << ',' << r.events << ',' << fmt(r.estimate) << ',' << fmt(r.ci_low) << ','
     << fmt(r.ci_high) << ',' << (r.analytic_bound ? fmt(*r.analytic_bound) : "") << ','
     << to_string(r.verdict) << ',' << r.master_seed << ',' << csv_field(r.detail);
  return os.str();
}

void write_results_csv(std::ostream& os, std::span<const ExperimentResult> results,
                       const OutputMetadata& meta, bool header) {
  if (header) {
    write_csv_preamble(os, meta, kResultCsvSchema);
    os << result_csv_header() << '\n';
  }
  for (const auto& r : results) os << result_csv_row(r) << '\n';
}

Json results_to_json(std::span<const ExperimentResult> results, const OutputMetadata& meta) {
  Json rows = Json::array();
  for (const auto& r : results) {
    rows.push_back(Json{{"name", r.name},
                        {"params", params_to_json(r.params)},
                        {"m", r.m},
                        {"trials", r.trials},
                        {"events", r.events},
                        {"estimate", r.estimate},
                        {"ci_low", r.ci_low},
                        {"ci_high", r.ci_high},
                        {"analytic_bound", r.analytic_bound ? double_json(*r.analytic_bound) : Json(nullptr)},
                        {"verdict", to_string(r.verdict)},
                        {"master_seed", r.master_seed},
                        {"detail", r.detail}});
  }
  return Json{{"metadata", metadata_json(meta, kResultCsvSchema)}, {"results", rows}};
}

Json bounds_to_json(const SimParams& p, const BoundValues& b, const TauLimitTable* taus,
                    const OutputMetadata& meta) {
  Json j;
  j["metadata"] = metadata_json(meta, "naklab-bounds-v1");
  j["params"] = params_to_json(p);
  j["bounds"] = Json{{"gamma", b.gamma},
                     {"eta", b.eta},
                     {"lambda_h", b.lambda_h},
                     {"lambda_z", b.lambda_z},
                     {"safety_ok", b.safety_ok},
                     {"safety_threshold", double_json(b.safety_threshold)},
                     {"quality_floor", b.quality_floor ? Json(*b.quality_floor) : Json(nullptr)}};
  if (taus != nullptr) {
    Json rows = Json::array();
    for (const auto& r : taus->rows) {
      rows.push_back(Json{{"tau", r.tau},
                          {"tau_gamma", r.tau_gamma},
                          {"tau_eta", r.tau_eta},
                          {"f_delta_threshold", double_json(r.f_delta_threshold)}});
    }
    j["tau_limit"] = Json{{"rows", rows},
                          {"limit_tau_gamma", taus->limit_tau_gamma},
                          {"limit_tau_eta", taus->limit_tau_eta},
                          {"limit_threshold", double_json(taus->limit_threshold)}};
  }
  return j;
}

void write_bounds_text(std::ostream& os, const SimParams& p, const BoundValues& b,
                       const TauLimitTable* taus) {
  auto line = [&](const char* key, const std::string& value) {
    os << std::left << std::setw(18) << key << value << '\n';
  };
  line("beta", fmt(p.beta));
  line("f_delta", fmt(p.f_delta()));
  line("tau", std::to_string(p.tau));
  line("delta_margin", fmt(p.margin));
  line("lambda_h", fmt(b.lambda_h));
  line("lambda_z", fmt(b.lambda_z));
  line("gamma", fmt(b.gamma));
  line("eta", fmt(b.eta));
  line("safety_ok", b.safety_ok ? "true" : "false");
  line("safety_threshold", fmt(b.safety_threshold));
  line("quality_floor", b.quality_floor ? fmt(*b.quality_floor) : "undefined");
  if (taus != nullptr) {
    os << '\n'
       << std::setw(8) << "tau" << std::setw(18) << "tau*gamma" << std::setw(18) << "tau*eta"
       << "f_delta_threshold\n";
    for (const auto& r : taus->rows) {
      os << std::setw(8) << r.tau << std::setw(18) << fmt(r.tau_gamma) << std::setw(18)
         << fmt(r.tau_eta) << fmt(r.f_delta_threshold) << '\n';
    }
    os << std::setw(8) << "limit" << std::setw(18) << fmt(taus->limit_tau_gamma) << std::setw(18)
       << fmt(taus->limit_tau_eta) << fmt(taus->limit_threshold) << '\n';
  }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot rename onto '" + path.string() + "'");
  }
}

}  // namespace naklab
