#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include <json.hpp>

#include "naklab/bounds.hpp"
#include "naklab/engine.hpp"
#include "naklab/experiments.hpp"

namespace naklab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kTraceSchema = "naklab-trace-v1";
inline constexpr const char* kRoundCsvSchema = "naklab-rounds-v1";
inline constexpr const char* kResultCsvSchema = "naklab-results-v1";

// Embedded in every output file.
struct OutputMetadata {
  Json config;
  std::uint64_t seed = 0;
};

Json metadata_json(const OutputMetadata& meta, const char* schema);

Json params_to_json(const SimParams& p);
SimParams params_from_json(const Json& j);

Json trace_to_json(const Trace& trace, const OutputMetadata& meta);
Trace trace_from_json(const Json& j);

// One row per round: r,H,Z,X,Y,L,confirmed,violation. Y is blank when
// indeterminate.
void write_round_csv(std::ostream& os, const Trace& trace, const OutputMetadata& meta);

Json results_to_json(std::span<const ExperimentResult> results, const OutputMetadata& meta);
void write_results_csv(std::ostream& os, std::span<const ExperimentResult> results,
                       const OutputMetadata& meta, bool header = true);
std::string result_csv_header();
std::string result_csv_row(const ExperimentResult& r);

Json bounds_to_json(const SimParams& p, const BoundValues& b, const TauLimitTable* taus,
                    const OutputMetadata& meta);
void write_bounds_text(std::ostream& os, const SimParams& p, const BoundValues& b,
                       const TauLimitTable* taus);

// Writes via a sibling temporary file and rename. Throws std::runtime_error
// naming the path on failure.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace naklab
