#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "naklab/params.hpp"

namespace naklab {

struct RoundTallies {
  std::vector<std::uint32_t> honest;       // H[r]
  std::vector<std::uint32_t> adversarial;  // Z[r]

  std::size_t size() const { return honest.size(); }
  bool operator==(const RoundTallies&) const = default;
};

enum class Uer : std::uint8_t { No = 0, Yes = 1, Indeterminate = 2 };

struct IndicatorSeries {
  std::vector<std::uint8_t> er;  // X[r]
  std::vector<Uer> uer;          // Y[r]
  // Last round whose forward UER window lies inside the trace; -1 if none.
  Round valid_uer_upto = -1;
};

// Reference kernels: evaluate the ER / UER definition window by window.
// Rounds before 0 count as having no honest blocks.
std::vector<std::uint8_t> detect_er(std::span<const std::uint32_t> honest, std::int64_t tau);
std::vector<Uer> detect_uer(std::span<const std::uint32_t> honest, std::int64_t tau);

// OpenMP kernels. Each thread scans a contiguous chunk with a running
// last-honest-round cursor seeded by looking back at most tau-1 rounds.
std::vector<std::uint8_t> detect_er_parallel(std::span<const std::uint32_t> honest,
                                             std::int64_t tau);
std::vector<Uer> detect_uer_parallel(std::span<const std::uint32_t> honest, std::int64_t tau);

IndicatorSeries detect_indicators(const RoundTallies& tallies, std::int64_t tau);

// Sums over the inclusive round range [from, to], clamped to the series.
// Indeterminate UER entries count as zero.
std::int64_t count_er(std::span<const std::uint8_t> er, Round from, Round to);
std::int64_t count_uer(std::span<const Uer> uer, Round from, Round to);
std::int64_t sum_rounds(std::span<const std::uint32_t> counts, Round from, Round to);

}  // namespace naklab
