#include "naklab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "naklab/bounds.hpp"
#include "naklab/experiments.hpp"

namespace naklab::cli {

namespace {

enum Mask : unsigned {
  kBounds = 1u << 0,
  kSimulate = 1u << 1,
  kVerify = 1u << 2,
  kSweep = 1u << 3,
  kAll = kBounds | kSimulate | kVerify | kSweep,
};

enum class Kind { Value, Multi, Flag };

struct Key {
  const char* name;
  const char* help;
  unsigned where;
  Kind kind = Kind::Value;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"config", "JSON config file; flags override its values", kAll},
      {"params", "alias of --config", kAll},
      {"beta", "adversarial fraction of mining power, [0,1)", kAll},
      {"f-delta", "expected blocks per delay bound (f times Delta)", kAll},
      {"tau", "rounds per delay bound", kAll},
      {"k", "confirmation depth", kAll},
      {"delta-margin", "slack delta in (0,1) used by the bounds", kAll},
      {"rounds", "horizon in rounds", kAll},
      {"seed", "master seed, or 'random'", kAll},
      {"out", "output path (default stdout)", kAll},
      {"format", "json | csv | text", kAll},
      {"jobs", "worker threads for trials (0: OpenMP default)", kAll},
      {"verbose", "verbosity level", kAll},
      {"print-config", "print the effective configuration as JSON and exit", kAll, Kind::Flag},
      {"taus", "comma list of tau values for the tau-limit table", kBounds},
      {"strategy", "passive | honest-mimic | tie-rusher | double-spend", kSimulate | kVerify | kSweep},
      {"strategy-opt", "strategy option key=value (repeatable)", kSimulate | kVerify | kSweep,
       Kind::Multi},
      {"delay-policy", "worst-case | best-case | uniform-random", kSimulate | kVerify | kSweep},
      {"tiebreak", "first-seen | adversary-prefer | random", kSimulate | kVerify | kSweep},
      {"experiment", "verifier name, or 'all'", kVerify},
      {"verifier", "verifier run on every grid cell", kSweep},
      {"trials", "independent trials (windows, sequences, or runs)", kVerify | kSweep},
      {"m", "window multiplier for tail and engine verifiers", kVerify | kSweep},
      {"k-list", "comma list of confirmation depths for the safety verifier", kVerify | kSweep},
      {"grid-beta", "comma list of beta values", kSweep},
      {"grid-f-delta", "comma list of f*Delta values", kSweep},
      {"grid-tau", "comma list of tau values", kSweep},
      {"grid-k", "comma list of k values", kSweep},
      {"grid-delta", "comma list of delta-margin values", kSweep},
  };
  return table;
}

struct Raw {
  std::map<std::string, std::string> values;
  std::map<std::string, std::vector<std::string>> multi;
  bool print_config = false;
};

std::string json_scalar(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + json_scalar(x);
    return s;
  }
  return v.dump();
}

Raw load_file(const std::string& path, unsigned where) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw UsageError("malformed config file '" + path + "'");
  Raw raw;
  for (const auto& [name, value] : j.items()) {
    if (name == "subcommand") continue;
    auto it = std::find_if(keys().begin(), keys().end(),
                           [&](const Key& k) { return name == k.name; });
    if (it == keys().end() || (it->where & where) == 0)
      throw UsageError("config file '" + path + "': unknown key '" + name + "'");
    if (it->kind == Kind::Multi) {
      if (!value.is_array()) throw UsageError("config key '" + name + "' must be an array");
      for (const auto& x : value) raw.multi[name].push_back(json_scalar(x));
    } else if (it->kind == Kind::Flag) {
      raw.print_config = value.get<bool>();
    } else {
      raw.values[name] = json_scalar(value);
    }
  }
  return raw;
}

class Resolver {
 public:
  explicit Resolver(Raw merged) : raw_(std::move(merged)) {}

  bool has(const std::string& k) const { return raw_.values.count(k) != 0; }
  const std::string& str(const std::string& k) const { return raw_.values.at(k); }

  template <typename T>
  T get(const std::string& k, T fallback) const {
    if (!has(k)) return fallback;
    return parse<T>(k, str(k));
  }

  template <typename T>
  std::vector<T> list(const std::string& k, std::vector<T> fallback) const {
    if (!has(k)) return fallback;
    std::vector<T> out;
    std::stringstream ss(str(k));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(parse<T>(k, item));
    }
    if (out.empty()) throw UsageError("--" + k + " needs at least one value");
    return out;
  }

  std::vector<std::string> multi(const std::string& k) const {
    auto it = raw_.multi.find(k);
    return it == raw_.multi.end() ? std::vector<std::string>{} : it->second;
  }

 private:
  template <typename T>
  static T parse(const std::string& k, const std::string& s) {
    std::istringstream is(s);
    T value{};
    is >> value;
    if (!is || !is.eof()) throw UsageError("invalid value '" + s + "' for --" + k);
    return value;
  }

  Raw raw_;
};

template <>
std::string Resolver::parse<std::string>(const std::string&, const std::string& s) {
  return s;
}

DelayPolicy parse_delay(const std::string& s) {
  for (auto d : {DelayPolicy::WorstCase, DelayPolicy::BestCase, DelayPolicy::UniformRandom})
    if (s == naklab::to_string(d)) return d;
  throw UsageError("unknown delay policy '" + s + "'");
}

TieBreak parse_tiebreak(const std::string& s) {
  for (auto t : {TieBreak::FirstSeen, TieBreak::AdversaryPrefer, TieBreak::Random})
    if (s == naklab::to_string(t)) return t;
  throw UsageError("unknown tiebreak policy '" + s + "'");
}

Format parse_format(const std::string& s) {
  if (s == "json") return Format::Json;
  if (s == "csv") return Format::Csv;
  if (s == "text") return Format::Text;
  throw UsageError("unknown format '" + s + "'");
}

std::uint64_t resolve_seed(const Resolver& r) {
  std::string text;
  if (r.has("seed")) {
    text = r.str("seed");
  } else if (const char* env = std::getenv("NAKLAB_SEED"); env != nullptr && *env != '\0') {
    text = env;
  } else {
    return SimParams{}.seed;
  }
  if (text == "random") {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used, 0);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("invalid seed '" + text + "'");
}

Subcommand subcommand_from(const std::string& name) {
  if (name == "bounds") return Subcommand::Bounds;
  if (name == "simulate") return Subcommand::Simulate;
  if (name == "verify") return Subcommand::Verify;
  return Subcommand::Sweep;
}

unsigned mask_of(Subcommand s) {
  switch (s) {
    case Subcommand::Bounds: return kBounds;
    case Subcommand::Simulate: return kSimulate;
    case Subcommand::Verify: return kVerify;
    case Subcommand::Sweep: return kSweep;
  }
  return 0;
}

const char* subcommand_help(const std::string& name) {
  if (name == "bounds") return "evaluate the closed-form bounds for one parameter set";
  if (name == "simulate") return "run one trial and write its trace";
  if (name == "verify") return "run Monte Carlo verifiers against the analytic bounds";
  return "run a verifier over a parameter grid (resumable)";
}

std::unique_ptr<CLI::App> build_app(std::map<std::string, Raw>& raw) {
  auto app = std::make_unique<CLI::App>("naklab: longest-chain consensus lab");
  app->require_subcommand(1, 1);
  for (const char* name : {"bounds", "simulate", "verify", "sweep"}) {
    CLI::App* sc = app->add_subcommand(name, subcommand_help(name));
    const unsigned where = mask_of(subcommand_from(name));
    Raw& r = raw[name];
    for (const Key& k : keys()) {
      if ((k.where & where) == 0) continue;
      const std::string flag = std::string("--") + k.name;
      switch (k.kind) {
        case Kind::Flag: sc->add_flag(flag, r.print_config, k.help); break;
        case Kind::Multi: sc->add_option(flag, r.multi[k.name], k.help); break;
        case Kind::Value: sc->add_option(flag, r.values[k.name], k.help); break;
      }
    }
  }
  return app;
}

}  // namespace

const char* to_string(Subcommand s) {
  switch (s) {
    case Subcommand::Bounds: return "bounds";
    case Subcommand::Simulate: return "simulate";
    case Subcommand::Verify: return "verify";
    case Subcommand::Sweep: return "sweep";
  }
  return "?";
}

const char* to_string(Format f) {
  switch (f) {
    case Format::Json: return "json";
    case Format::Csv: return "csv";
    case Format::Text: return "text";
  }
  return "?";
}

std::string usage() {
  std::map<std::string, Raw> raw;
  return build_app(raw)->help();
}

RunConfig parse_config(std::span<const std::string> args) {
  std::map<std::string, Raw> raw;
  auto app = build_app(raw);
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app->parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  const std::string name = app->get_subcommands().front()->get_name();
  const CLI::App* sc = app->get_subcommands().front();
  RunConfig cfg;
  cfg.subcommand = subcommand_from(name);
  const unsigned where = mask_of(cfg.subcommand);

  // Only flags that were actually given override the file.
  Raw given;
  for (const Key& k : keys()) {
    if ((k.where & where) == 0 || k.kind == Kind::Flag) continue;
    if (sc->count(std::string("--") + k.name) == 0) continue;
    if (k.kind == Kind::Multi) given.multi[k.name] = raw[name].multi[k.name];
    else given.values[k.name] = raw[name].values[k.name];
  }
  Raw merged;
  std::string file;
  if (given.values.count("config")) file = given.values["config"];
  if (given.values.count("params")) file = given.values["params"];
  if (!file.empty()) merged = load_file(file, where);
  for (auto& [k, v] : given.values) merged.values[k] = v;
  for (auto& [k, v] : given.multi) merged.multi[k] = v;
  merged.print_config = merged.print_config || raw[name].print_config;
  cfg.print_config = merged.print_config;

  const Resolver r(std::move(merged));
  SimParams& p = cfg.params;
  p.beta = r.get<double>("beta", p.beta);
  if (r.has("f-delta")) {
    p.delta = 1.0;
    p.mining_rate = r.get<double>("f-delta", p.f_delta());
  }
  p.tau = r.get<std::int64_t>("tau", p.tau);
  p.confirm_depth = r.get<std::int64_t>("k", p.confirm_depth);
  p.margin = r.get<double>("delta-margin", p.margin);
  p.horizon = r.get<Round>("rounds", p.horizon);
  p.seed = resolve_seed(r);

  cfg.out = r.get<std::string>("out", "");
  cfg.jobs = r.get<int>("jobs", 0);
  cfg.verbosity = r.get<int>("verbose", 0);
  switch (cfg.subcommand) {
    case Subcommand::Bounds: cfg.format = Format::Text; break;
    case Subcommand::Simulate: cfg.format = Format::Json; break;
    case Subcommand::Verify:
    case Subcommand::Sweep: cfg.format = Format::Csv; break;
  }
  if (r.has("format")) cfg.format = parse_format(r.str("format"));
  const bool format_ok =
      (cfg.subcommand == Subcommand::Bounds && cfg.format != Format::Csv) ||
      (cfg.subcommand == Subcommand::Simulate && cfg.format != Format::Text) ||
      (cfg.subcommand == Subcommand::Verify && cfg.format != Format::Text) ||
      (cfg.subcommand == Subcommand::Sweep && cfg.format == Format::Csv);
  if (!format_ok)
    throw UsageError(std::string("format '") + to_string(cfg.format) + "' is not available for " +
                     to_string(cfg.subcommand));

  cfg.taus = r.list<std::int64_t>("taus", {});
  if (cfg.subcommand == Subcommand::Simulate) cfg.strategy = "passive";
  if (cfg.subcommand == Subcommand::Verify || cfg.subcommand == Subcommand::Sweep) cfg.strategy.clear();
  cfg.strategy = r.get<std::string>("strategy", cfg.strategy);
  for (const std::string& kv : r.multi("strategy-opt")) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--strategy-opt expects key=value, got '" + kv + "'");
    cfg.strategy_options[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  cfg.engine_overridden = r.has("delay-policy") || r.has("tiebreak");
  if (r.has("delay-policy")) cfg.delay = parse_delay(r.str("delay-policy"));
  if (r.has("tiebreak")) cfg.tiebreak = parse_tiebreak(r.str("tiebreak"));

  cfg.experiment = r.get<std::string>("experiment", "");
  cfg.verifier = r.get<std::string>("verifier", "");
  cfg.trials = r.get<std::int64_t>("trials", cfg.trials);
  cfg.m = r.get<std::int64_t>("m", cfg.m);
  cfg.k_list = r.list<std::int64_t>("k-list", cfg.k_list);
  cfg.grid.betas = r.list<double>("grid-beta", {});
  cfg.grid.f_deltas = r.list<double>("grid-f-delta", {});
  cfg.grid.taus = r.list<std::int64_t>("grid-tau", {});
  cfg.grid.ks = r.list<std::int64_t>("grid-k", {});
  cfg.grid.margins = r.list<double>("grid-delta", {});

  try {
    validate_params(p);
    if (!cfg.strategy.empty()) make_strategy(cfg.strategy, cfg.strategy_options, p);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (cfg.trials < 1) throw UsageError("--trials must be positive");
  if (cfg.m < 1) throw UsageError("--m must be positive");
  if (cfg.subcommand == Subcommand::Verify) {
    if (cfg.experiment.empty()) throw UsageError("verify needs --experiment");
    auto names = verifier_names();
    if (cfg.experiment != "all" && std::find(names.begin(), names.end(), cfg.experiment) == names.end())
      throw UsageError("unknown experiment '" + cfg.experiment + "'");
  }
  if (cfg.subcommand == Subcommand::Sweep) {
    if (cfg.verifier.empty()) throw UsageError("sweep needs --verifier");
    if (cfg.out.empty()) throw UsageError("sweep needs --out (the manifest lives beside it)");
    auto names = verifier_names();
    if (std::find(names.begin(), names.end(), cfg.verifier) == names.end())
      throw UsageError("unknown verifier '" + cfg.verifier + "'");
  }
  return cfg;
}

namespace {

// Everything that determines the output bytes; excludes --out, --jobs and
// --verbose.
Json result_config(const RunConfig& c) {
  const SimParams& p = c.params;
  Json j{{"subcommand", to_string(c.subcommand)},
         {"beta", p.beta},
         {"f-delta", p.f_delta()},
         {"tau", p.tau},
         {"k", p.confirm_depth},
         {"delta-margin", p.margin},
         {"rounds", p.horizon},
         {"seed", p.seed},
         {"format", to_string(c.format)}};
  if (c.subcommand == Subcommand::Bounds && !c.taus.empty()) j["taus"] = c.taus;
  if (c.subcommand != Subcommand::Bounds) {
    if (!c.strategy.empty()) j["strategy"] = c.strategy;
    Json opts = Json::array();
    for (const auto& [k, v] : c.strategy_options) opts.push_back(k + "=" + v);
    j["strategy-opt"] = opts;
    if (c.engine_overridden || c.subcommand == Subcommand::Simulate) {
      j["delay-policy"] = naklab::to_string(c.delay);
      j["tiebreak"] = naklab::to_string(c.tiebreak);
    }
  }
  if (c.subcommand == Subcommand::Verify) j["experiment"] = c.experiment;
  if (c.subcommand == Subcommand::Sweep) {
    j["verifier"] = c.verifier;
    if (!c.grid.betas.empty()) j["grid-beta"] = c.grid.betas;
    if (!c.grid.f_deltas.empty()) j["grid-f-delta"] = c.grid.f_deltas;
    if (!c.grid.taus.empty()) j["grid-tau"] = c.grid.taus;
    if (!c.grid.ks.empty()) j["grid-k"] = c.grid.ks;
    if (!c.grid.margins.empty()) j["grid-delta"] = c.grid.margins;
  }
  if (c.subcommand == Subcommand::Verify || c.subcommand == Subcommand::Sweep) {
    j["trials"] = c.trials;
    j["m"] = c.m;
    j["k-list"] = c.k_list;
  }
  return j;
}

VerifierSpec verifier_spec(const RunConfig& c) {
  VerifierSpec s;
  s.trials = c.trials;
  s.m = c.m;
  s.k_list = c.k_list;
  s.strategy = c.strategy;
  s.strategy_options = c.strategy_options;
  s.engine.delay = c.delay;
  s.engine.tiebreak = c.tiebreak;
  s.engine_overridden = c.engine_overridden;
  s.jobs = c.jobs;
  return s;
}

void emit(const RunConfig& c, const std::string& content, std::ostream& out) {
  if (c.out.empty()) {
    out << content;
  } else {
    write_atomic(c.out, content);
  }
}

}  // namespace

Json config_to_json(const RunConfig& cfg) {
  Json j = result_config(cfg);
  if (!cfg.out.empty()) j["out"] = cfg.out;
  j["jobs"] = cfg.jobs;
  j["verbose"] = cfg.verbosity;
  return j;
}

int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.print_config) {
    out << config_to_json(cfg).dump(2) << '\n';
    return 0;
  }
  const OutputMetadata meta{result_config(cfg), cfg.params.seed};
  const SimParams& p = cfg.params;
  std::ostringstream body;
  int code = 0;
  std::string summary;

  switch (cfg.subcommand) {
    case Subcommand::Bounds: {
      const BoundValues b = compute_bounds(p);
      std::optional<TauLimitTable> taus;
      if (!cfg.taus.empty()) taus = tau_limit_check(p.beta, p.f_delta(), cfg.taus, p.margin);
      if (cfg.format == Format::Json) {
        body << bounds_to_json(p, b, taus ? &*taus : nullptr, meta).dump(2) << '\n';
      } else {
        write_bounds_text(body, p, b, taus ? &*taus : nullptr);
      }
      summary = "bounds evaluated";
      break;
    }
    case Subcommand::Simulate: {
      auto strategy = make_strategy(cfg.strategy, cfg.strategy_options, p);
      EngineOptions o;
      o.delay = cfg.delay;
      o.tiebreak = cfg.tiebreak;
      Trace tr;
      try {
        tr = run(p, *strategy, o);
      } catch (const StrategyViolation& e) {
        err << "naklab: strategy violation: " << e.what() << '\n';
        return 1;
      }
      if (cfg.format == Format::Json) {
        body << trace_to_json(tr, meta).dump() << '\n';
      } else {
        write_round_csv(body, tr, meta);
      }
      std::ostringstream s;
      s << "simulated " << tr.rounds_run << " rounds, " << tr.blocks.size() << " blocks, L="
        << (tr.longest.empty() ? 0 : tr.longest.back())
        << (tr.violation ? ", safety violation" : "")
        << (tr.invariant_failures.empty() ? "" : ", INVARIANT FAILURES");
      summary = s.str();
      if (!tr.invariant_failures.empty()) code = 1;
      break;
    }
    case Subcommand::Verify: {
      const VerifierSpec spec = verifier_spec(cfg);
      std::vector<ExperimentResult> results;
      const auto names = cfg.experiment == "all" ? verifier_names() : std::vector<std::string>{cfg.experiment};
      for (const auto& n : names) {
        auto part = run_verifier(n, p, spec);
        for (const auto& r : part) {
          if (cfg.verbosity > 0) {
            err << r.name << ": " << to_string(r.verdict) << " estimate=" << r.estimate
                << " runtime=" << r.runtime_seconds << "s\n";
          }
        }
        results.insert(results.end(), part.begin(), part.end());
      }
      if (cfg.format == Format::Json) {
        body << results_to_json(results, meta).dump(2) << '\n';
      } else {
        write_results_csv(body, results, meta);
      }
      std::size_t fails = 0;
      for (const auto& r : results) fails += r.verdict == Verdict::Fail;
      code = fails > 0 ? 1 : 0;
      summary = std::to_string(results.size()) + " results, " + std::to_string(fails) + " FAIL";
      break;
    }
    case Subcommand::Sweep: {
      const SweepSummary s =
          run_sweep(p, cfg.grid, cfg.verifier, verifier_spec(cfg), cfg.out, meta);
      code = s.any_fail ? 1 : 0;
      summary = std::to_string(s.cells) + " cells, " + std::to_string(s.computed) + " computed, " +
                std::to_string(s.reused) + " reused" + (s.wrote_output ? "" : ", output unchanged");
      err << "naklab " << to_string(cfg.subcommand) << ": " << summary << " (seed " << p.seed << ")\n";
      return code;
    }
  }
  emit(cfg, body.str(), out);
  err << "naklab " << to_string(cfg.subcommand) << ": " << summary << " (seed " << p.seed << ")\n";
  return code;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  if (args.size() <= 1) {
    err << usage();
    return 2;
  }
  if (std::any_of(args.begin() + 1, args.end(), [](const std::string& a) { return a == "--help" || a == "-h"; })) {
    out << usage();
    return 0;
  }
  RunConfig cfg;
  try {
    cfg = parse_config(args);
  } catch (const UsageError& e) {
    err << "naklab: " << e.what() << "\n\n" << usage();
    return 2;
  }
  try {
    return dispatch(cfg, out, err);
  } catch (const std::runtime_error& e) {
    err << "naklab: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "naklab: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace naklab::cli
