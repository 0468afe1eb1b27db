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

#include "fraglab/rng.hpp"

#include <cmath>

#include "fraglab/errors.hpp"

namespace fraglab::rng {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
    // Two mixing rounds over (master, stream) so adjacent stream ids land far
    // apart in seed space.
    std::uint64_t state = master ^ 0x6a09e667f3bcc908ULL;
    std::uint64_t a = splitmix64(state);
    state ^= stream_id * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(state);
    return a ^ (b + 0x2545f4914f6cdd1dULL);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Engine::Engine(std::uint64_t seed) {
    std::uint64_t state = seed;
    for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t Engine::next_u64() {
    std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Engine::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Engine::next_open_double() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::uint64_t Engine::next_below(std::uint64_t n) {
    // Rejection to avoid modulo bias.
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

double Engine::next_normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = next_open_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

long Engine::next_poisson(double mu) {
    if (mu < 0.0) throw ConfigError("poisson mean must be nonnegative");
    if (mu == 0.0) return 0;
    // Halving keeps the product method's O(mu) loop short for large means.
    if (mu > 60.0) return next_poisson(mu / 2.0) + next_poisson(mu / 2.0);
    double limit = std::exp(-mu);
    double prod = next_open_double();
    long count = 0;
    while (prod > limit) {
        prod *= next_open_double();
        ++count;
    }
    return count;
}

double Engine::next_gamma(double shape) {
    if (shape <= 0.0) throw ConfigError("gamma shape must be positive");
    // Marsaglia-Tsang; boost small shapes up by one and rescale.
    if (shape < 1.0) {
        double u = next_open_double();
        return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z = next_normal();
        double v = 1.0 + c * z;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = next_open_double();
        if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) {
            return d * v;
        }
    }
}

std::size_t Engine::next_categorical(std::span<const double> probs) {
    double total = 0.0;
    for (double p : probs) total += p;
    double u = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z * M_SQRT1_2);
}

}  // namespace fraglab::rng
