// Copyright 2026-present the fraglab project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

// Seeding discipline: one master seed per experiment, split into named
// substreams with a counter-based derivation. Exposures, noise, assignments,
// strata, subset selection, and every Monte Carlo replication each own a
// stream, so redrawing one component never perturbs another and parallel
// replications reproduce bit-identically regardless of scheduling.

namespace fraglab::rng {

namespace stream {
constexpr std::uint64_t exposure = 0x01;
constexpr std::uint64_t copula = 0x02;
constexpr std::uint64_t noise = 0x03;
constexpr std::uint64_t assignment = 0x04;
constexpr std::uint64_t strata = 0x05;
constexpr std::uint64_t selection = 0x06;
constexpr std::uint64_t dirichlet = 0x07;
// Per-replication streams for Monte Carlo; two per rep (noise, assignment).
inline std::uint64_t mc_noise(std::uint64_t rep) { return 0x100000000ULL + 2 * rep; }
inline std::uint64_t mc_assignment(std::uint64_t rep) { return 0x100000000ULL + 2 * rep + 1; }
}  // namespace stream

// SplitMix64 step; also the substream derivation hash.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id);

// xoshiro256++ with SplitMix64 seed expansion. Self-contained so results do
// not depend on the standard library's distribution implementations.
class Engine {
public:
    explicit Engine(std::uint64_t seed);
    Engine(std::uint64_t master, std::uint64_t stream_id)
        : Engine(derive_seed(master, stream_id)) {}

    std::uint64_t next_u64();
    // Uniform on [0, 1)
    double next_double();
    // Uniform on (0, 1]
    double next_open_double();
    // Unbiased integer in [0, n)
    std::uint64_t next_below(std::uint64_t n);
    // Standard normal (Box-Muller, pair-cached)
    double next_normal();
    // Poisson with the given mean
    long next_poisson(double mu);
    double next_gamma(double shape);
    // Index drawn from an unnormalized weight vector
    std::size_t next_categorical(std::span<const double> probs);

private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// Standard normal CDF (used by the Gaussian copula marginal transform).
double normal_cdf(double z);

}  // namespace fraglab::rng
