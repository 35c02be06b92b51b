// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace multigrid {

// All randomness flows through explicitly seeded Mersenne Twister streams.
// Distribution helpers are implemented here instead of using the <random>
// distributions, whose output is implementation-defined.
using Rng = std::mt19937_64;

// Independent stream for (seed, keys...). Uses std::seed_seq, whose mixing is
// fully specified by the standard.
Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {});

// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform integer in [lo, hi] (inclusive), unbiased.
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

// Standard normal via Box-Muller (one draw per call).
double standard_normal(Rng& rng);

}  // namespace multigrid
