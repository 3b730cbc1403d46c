#include "naklab/indicators.hpp"

#include <algorithm>

#include <omp.h>

namespace naklab {

namespace {

using Index = std::int64_t;

bool window_clear(std::span<const std::uint32_t> h, Index from, Index to) {
  from = std::max<Index>(from, 0);
  to = std::min<Index>(to, static_cast<Index>(h.size()) - 1);
  for (Index i = from; i <= to; ++i) {
    if (h[i] != 0) return false;
  }
  return true;
}

Index last_nonzero_before(std::span<const std::uint32_t> h, Index r, std::int64_t tau) {
  for (Index i = r - 1; i >= 0 && i > r - tau; --i) {
    if (h[i] != 0) return i;
  }
  return r - tau;  // far enough back to never block
}

Index first_nonzero_after(std::span<const std::uint32_t> h, Index r, std::int64_t tau) {
  const Index n = static_cast<Index>(h.size());
  for (Index i = r + 1; i < n && i < r + tau; ++i) {
    if (h[i] != 0) return i;
  }
  return r + tau;
}

template <typename Body>
void for_each_chunk(Index n, Body body) {
#pragma omp parallel
  {
    const Index threads = omp_get_num_threads();
    const Index tid = omp_get_thread_num();
    const Index chunk = (n + threads - 1) / threads;
    const Index begin = std::min(n, tid * chunk);
    const Index end = std::min(n, begin + chunk);
    if (begin < end) body(begin, end);
  }
}

}  // namespace

std::vector<std::uint8_t> detect_er(std::span<const std::uint32_t> honest, std::int64_t tau) {
  const Index n = static_cast<Index>(honest.size());
  std::vector<std::uint8_t> er(n, 0);
  for (Index r = 0; r < n; ++r) {
    er[r] = honest[r] >= 1 && window_clear(honest, r - tau + 1, r - 1);
  }
  return er;
}

std::vector<Uer> detect_uer(std::span<const std::uint32_t> honest, std::int64_t tau) {
  const Index n = static_cast<Index>(honest.size());
  std::vector<Uer> uer(n, Uer::No);
  for (Index r = 0; r < n; ++r) {
    if (honest[r] != 1) continue;
    if (!window_clear(honest, r - tau + 1, r - 1)) continue;
    if (!window_clear(honest, r + 1, r + tau - 1)) continue;
    uer[r] = r + tau - 1 < n ? Uer::Yes : Uer::Indeterminate;
  }
  return uer;
}

std::vector<std::uint8_t> detect_er_parallel(std::span<const std::uint32_t> honest,
                                             std::int64_t tau) {
  const Index n = static_cast<Index>(honest.size());
  std::vector<std::uint8_t> er(n, 0);
  for_each_chunk(n, [&](Index begin, Index end) {
    Index last = last_nonzero_before(honest, begin, tau);
    for (Index r = begin; r < end; ++r) {
      const bool mined = honest[r] != 0;
      er[r] = mined && last <= r - tau;
      if (mined) last = r;
    }
  });
  return er;
}

std::vector<Uer> detect_uer_parallel(std::span<const std::uint32_t> honest, std::int64_t tau) {
  const Index n = static_cast<Index>(honest.size());
  std::vector<Uer> uer(n, Uer::No);
  for_each_chunk(n, [&](Index begin, Index end) {
    // A candidate has one block and a clear past; the next nonzero round
    // settles it.
    auto settle = [&](Index c, Index next) {
      if (next >= c + tau) uer[c] = c + tau - 1 < n ? Uer::Yes : Uer::Indeterminate;
    };
    Index last = last_nonzero_before(honest, begin, tau);
    Index candidate = -1;
    for (Index r = begin; r < end; ++r) {
      if (honest[r] == 0) continue;
      if (candidate >= 0) settle(candidate, r);
      candidate = honest[r] == 1 && last <= r - tau ? r : -1;
      last = r;
    }
    if (candidate >= 0) settle(candidate, first_nonzero_after(honest, end - 1, tau));
  });
  return uer;
}

IndicatorSeries detect_indicators(const RoundTallies& tallies, std::int64_t tau) {
  IndicatorSeries s;
  s.er = detect_er_parallel(tallies.honest, tau);
  s.uer = detect_uer_parallel(tallies.honest, tau);
  s.valid_uer_upto = static_cast<Round>(tallies.size()) - tau;
  if (s.valid_uer_upto < -1) s.valid_uer_upto = -1;
  return s;
}

std::int64_t count_er(std::span<const std::uint8_t> er, Round from, Round to) {
  from = std::max<Round>(from, 0);
  to = std::min<Round>(to, static_cast<Round>(er.size()) - 1);
  std::int64_t total = 0;
  for (Round r = from; r <= to; ++r) total += er[r];
  return total;
}

std::int64_t count_uer(std::span<const Uer> uer, Round from, Round to) {
  from = std::max<Round>(from, 0);
  to = std::min<Round>(to, static_cast<Round>(uer.size()) - 1);
  std::int64_t total = 0;
  for (Round r = from; r <= to; ++r) total += uer[r] == Uer::Yes;
  return total;
}

std::int64_t sum_rounds(std::span<const std::uint32_t> counts, Round from, Round to) {
  from = std::max<Round>(from, 0);
  to = std::min<Round>(to, static_cast<Round>(counts.size()) - 1);
  std::int64_t total = 0;
  for (Round r = from; r <= to; ++r) total += counts[r];
  return total;
}

}  // namespace naklab
