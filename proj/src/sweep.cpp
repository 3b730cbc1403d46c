#include "naklab/sweep.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "naklab/rng.hpp"

namespace naklab {

namespace {

template <typename T>
std::vector<T> or_base(const std::vector<T>& axis, T base) {
  return axis.empty() ? std::vector<T>{base} : axis;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

std::filesystem::path manifest_path(const std::filesystem::path& out) {
  std::filesystem::path p = out;
  p += ".manifest.json";
  return p;
}

std::vector<SweepCell> expand_grid(const SimParams& base, const SweepGrid& grid) {
  std::vector<SweepCell> cells;
  for (double beta : or_base(grid.betas, base.beta))
    for (double fd : or_base(grid.f_deltas, base.f_delta()))
      for (std::int64_t tau : or_base(grid.taus, base.tau))
        for (std::int64_t k : or_base(grid.ks, base.confirm_depth))
          for (double margin : or_base(grid.margins, base.margin)) {
            SweepCell c;
            c.index = cells.size();
            c.params = base;
            c.params.beta = beta;
            c.params.mining_rate = fd / base.delta;
            c.params.tau = tau;
            c.params.confirm_depth = k;
            c.params.margin = margin;
            c.params.seed = derive_seed(base.seed, c.index);
            std::ostringstream key;
            key << std::setprecision(12) << "beta=" << beta << ";f_delta=" << fd << ";tau=" << tau
                << ";k=" << k << ";delta=" << margin;
            c.key = key.str();
            cells.push_back(std::move(c));
          }
  return cells;
}

SweepSummary run_sweep(const SimParams& base, const SweepGrid& grid, std::string_view verifier,
                       const VerifierSpec& spec, const std::filesystem::path& out,
                       const OutputMetadata& meta) {
  const auto names = verifier_names();
  std::string name(verifier);
  std::replace(name.begin(), name.end(), '_', '-');
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw std::invalid_argument("unknown verifier '" + std::string(verifier) + "'");

  const auto cells = expand_grid(base, grid);
  const std::string fingerprint = meta.config.dump();
  const auto manifest_file = manifest_path(out);

  Json manifest{{"schema", "naklab-sweep-manifest-v1"}, {"fingerprint", fingerprint},
                {"cells", Json::object()}};
  if (const std::string text = read_file(manifest_file); !text.empty()) {
    Json old = Json::parse(text, nullptr, false);
    if (!old.is_discarded() && old.value("fingerprint", "") == fingerprint) manifest = old;
  }

  SweepSummary summary;
  summary.cells = cells.size();
  for (const auto& cell : cells) {
    if (manifest["cells"].contains(cell.key)) {
      ++summary.reused;
      continue;
    }
    // A k axis pins the safety verifier to that cell's k.
    VerifierSpec cell_spec = spec;
    if (!grid.ks.empty()) cell_spec.k_list = {cell.params.confirm_depth};
    const auto results = run_verifier(name, cell.params, cell_spec);
    Json rows = Json::array();
    for (const auto& r : results)
      rows.push_back(Json{{"row", result_csv_row(r)}, {"verdict", to_string(r.verdict)}});
    manifest["cells"][cell.key] = rows;
    write_atomic(manifest_file, manifest.dump(1) + "\n");
    ++summary.computed;
  }

  std::ostringstream csv;
  write_results_csv(csv, {}, meta, true);
  for (const auto& cell : cells) {
    for (const auto& row : manifest["cells"][cell.key]) {
      if (row.at("verdict") == to_string(Verdict::Fail)) summary.any_fail = true;
      csv << row.at("row").get<std::string>() << '\n';
    }
  }
  if (read_file(out) != csv.str()) {
    write_atomic(out, csv.str());
    summary.wrote_output = true;
  }
  return summary;
}

}  // namespace naklab
