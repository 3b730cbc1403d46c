#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "naklab/experiments.hpp"
#include "naklab/serialize.hpp"

namespace naklab {

// Empty axes fall back to the base parameters, so the grid always has at
// least one cell.
struct SweepGrid {
  std::vector<double> betas;
  std::vector<double> f_deltas;
  std::vector<std::int64_t> taus;
  std::vector<std::int64_t> ks;
  std::vector<double> margins;
};

struct SweepCell {
  std::size_t index = 0;
  std::string key;
  SimParams params;  // seed already derived for this cell
};

std::vector<SweepCell> expand_grid(const SimParams& base, const SweepGrid& grid);

struct SweepSummary {
  std::size_t cells = 0;
  std::size_t computed = 0;
  std::size_t reused = 0;
  bool wrote_output = false;
  bool any_fail = false;
};

// Runs `verifier` on every cell and writes a CSV table to `out`. Completed
// cells are kept in `<out>.manifest.json`; a rerun with the same config only
// computes missing cells and leaves an up-to-date output untouched.
SweepSummary run_sweep(const SimParams& base, const SweepGrid& grid, std::string_view verifier,
                       const VerifierSpec& spec, const std::filesystem::path& out,
                       const OutputMetadata& meta);

std::filesystem::path manifest_path(const std::filesystem::path& out);

}  // namespace naklab
