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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fraglab/errors.hpp"
#include "fraglab/kernels.hpp"

namespace k = fraglab::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

// Odd lengths exercise the SIMD tails.
const std::size_t kSizes[] = {0, 1, 2, 3, 4, 7, 8, 15, 16, 33, 100, 1023};

}  // namespace

TEST_CASE("active backend reports a name") {
    CHECK(!k::backend_name().empty());
}

TEST_CASE("dispatched kernels match the scalar reference") {
    std::mt19937_64 rng(42);
    for (std::size_t n : kSizes) {
        auto w = random_vec(rng, n);
        auto x = random_vec(rng, n);
        auto y = random_vec(rng, n);

        double scale = static_cast<double>(n) + 1.0;
        CHECK(k::dot(x.data(), y.data(), n) ==
              doctest::Approx(k::scalar::dot(x.data(), y.data(), n)).epsilon(1e-13));
        CHECK(k::dot3(w.data(), x.data(), y.data(), n) ==
              doctest::Approx(k::scalar::dot3(w.data(), x.data(), y.data(), n))
                  .epsilon(1e-13));
        CHECK(k::sum(x.data(), n) ==
              doctest::Approx(k::scalar::sum(x.data(), n)).epsilon(1e-13).scale(scale));

        auto y1 = y, y2 = y;
        k::axpy(0.37, x.data(), y1.data(), n);
        k::scalar::axpy(0.37, x.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));

        auto x1 = x, x2 = x;
        k::scal(-1.25, x1.data(), n);
        k::scalar::scal(-1.25, x2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(x1[i] == x2[i]);
    }
}

#ifdef FRAGLAB_HAVE_AVX2_KERNELS
TEST_CASE("avx2 variants agree with scalar on random inputs") {
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return;
    std::mt19937_64 rng(7);
    for (std::size_t n : kSizes) {
        auto w = random_vec(rng, n);
        auto x = random_vec(rng, n);
        auto y = random_vec(rng, n);
        CHECK(k::avx2::dot(x.data(), y.data(), n) ==
              doctest::Approx(k::scalar::dot(x.data(), y.data(), n)).epsilon(1e-13));
        CHECK(k::avx2::dot3(w.data(), x.data(), y.data(), n) ==
              doctest::Approx(k::scalar::dot3(w.data(), x.data(), y.data(), n))
                  .epsilon(1e-13));
        CHECK(k::avx2::sum(x.data(), n) ==
              doctest::Approx(k::scalar::sum(x.data(), n))
                  .epsilon(1e-13)
                  .scale(static_cast<double>(n) + 1.0));
        auto y1 = y, y2 = y;
        k::avx2::axpy(2.5, x.data(), y1.data(), n);
        k::scalar::axpy(2.5, x.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));
    }
}
#endif

TEST_CASE("dot3 equals dot of a hadamard product") {
    std::mt19937_64 rng(11);
    auto w = random_vec(rng, 129);
    auto x = random_vec(rng, 129);
    auto y = random_vec(rng, 129);
    std::vector<double> wx(129);
    for (std::size_t i = 0; i < 129; ++i) wx[i] = w[i] * x[i];
    CHECK(k::dot3(w.data(), x.data(), y.data(), 129) ==
          doctest::Approx(k::dot(wx.data(), y.data(), 129)).epsilon(1e-13));
}

TEST_CASE("force_backend round-trips and rejects unavailable targets") {
    k::Backend original = k::active_backend();
    k::force_backend(k::Backend::scalar);
    CHECK(k::active_backend() == k::Backend::scalar);
    double x[3] = {1.0, 2.0, 3.0};
    CHECK(k::sum(x, 3) == 6.0);
#ifndef FRAGLAB_HAVE_NEON_KERNELS
    CHECK_THROWS_AS(k::force_backend(k::Backend::neon), fraglab::ConfigError);
#endif
    k::force_backend(original);
    CHECK(k::active_backend() == original);
}
