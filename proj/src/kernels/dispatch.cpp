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

#include "fraglab/kernels.hpp"

#include "fraglab/errors.hpp"

namespace fraglab::kernels {

namespace {

using DotFn = double (*)(const double*, const double*, std::size_t);
using Dot3Fn = double (*)(const double*, const double*, const double*, std::size_t);
using SumFn = double (*)(const double*, std::size_t);
using AxpyFn = void (*)(double, const double*, double*, std::size_t);
using ScalFn = void (*)(double, double*, std::size_t);

struct Table {
    Backend backend;
    DotFn dot;
    Dot3Fn dot3;
    SumFn sum;
    AxpyFn axpy;
    ScalFn scal;
};

constexpr Table kScalarTable{Backend::scalar, scalar::dot, scalar::dot3,
                             scalar::sum, scalar::axpy, scalar::scal};

#ifdef FRAGLAB_HAVE_AVX2_KERNELS
constexpr Table kAvx2Table{Backend::avx2, avx2::dot, avx2::dot3,
                           avx2::sum, avx2::axpy, avx2::scal};
#endif
#ifdef FRAGLAB_HAVE_NEON_KERNELS
constexpr Table kNeonTable{Backend::neon, neon::dot, neon::dot3,
                           neon::sum, neon::axpy, neon::scal};
#endif

Table detect() {
#ifdef FRAGLAB_HAVE_AVX2_KERNELS
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return kAvx2Table;
    }
#endif
#ifdef FRAGLAB_HAVE_NEON_KERNELS
    return kNeonTable;
#endif
    return kScalarTable;
}

Table& table() {
    static Table t = detect();
    return t;
}

}  // namespace

Backend active_backend() { return table().backend; }

std::string backend_name() {
    switch (table().backend) {
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
        case Backend::scalar: return "scalar";
    }
    return "scalar";
}

void force_backend(Backend b) {
    switch (b) {
        case Backend::scalar:
            table() = kScalarTable;
            return;
        case Backend::avx2:
#ifdef FRAGLAB_HAVE_AVX2_KERNELS
            if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
                table() = kAvx2Table;
                return;
            }
#endif
            throw ConfigError("avx2 kernels unavailable on this CPU");
        case Backend::neon:
#ifdef FRAGLAB_HAVE_NEON_KERNELS
            table() = kNeonTable;
            return;
#else
            throw ConfigError("neon kernels unavailable on this CPU");
#endif
    }
    throw ConfigError("unknown kernel backend");
}

double dot(const double* x, const double* y, std::size_t n) { return table().dot(x, y, n); }

double dot3(const double* w, const double* x, const double* y, std::size_t n) {
    return table().dot3(w, x, y, n);
}

double sum(const double* x, std::size_t n) { return table().sum(x, n); }

void axpy(double a, const double* x, double* y, std::size_t n) { table().axpy(a, x, y, n); }

void scal(double a, double* x, std::size_t n) { table().scal(a, x, n); }

}  // namespace fraglab::kernels
