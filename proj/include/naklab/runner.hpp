#pragma once

#include <cstdint>
#include <exception>
#include <vector>

#include <omp.h>

#include "naklab/rng.hpp"

namespace naklab {

// Trial i always sees seed derive_seed(master, i) and lands in slot i, so the
// output is identical for any thread count.

template <typename Result, typename Fn>
std::vector<Result> run_trials_serial(std::int64_t trials, std::uint64_t master, Fn&& fn) {
  std::vector<Result> out(trials);
  for (std::int64_t i = 0; i < trials; ++i) out[i] = fn(i, derive_seed(master, i));
  return out;
}

// jobs <= 0 uses the OpenMP default thread count.
template <typename Result, typename Fn>
std::vector<Result> run_trials(std::int64_t trials, std::uint64_t master, int jobs, Fn&& fn) {
  std::vector<Result> out(trials);
  std::vector<std::exception_ptr> errors(trials);
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::int64_t i = 0; i < trials; ++i) {
    try {
      out[i] = fn(i, derive_seed(master, i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace naklab
