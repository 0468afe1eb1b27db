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

// Reference kernels. Two accumulators break the serial dependence chain a
// little without changing results enough to matter; the SIMD equivalence
// tests compare against these.

namespace fraglab::kernels::scalar {

double dot(const double* x, const double* y, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc0 += x[i] * y[i];
        acc1 += x[i + 1] * y[i + 1];
    }
    if (i < n) acc0 += x[i] * y[i];
    return acc0 + acc1;
}

double dot3(const double* w, const double* x, const double* y, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc0 += w[i] * x[i] * y[i];
        acc1 += w[i + 1] * x[i + 1] * y[i + 1];
    }
    if (i < n) acc0 += w[i] * x[i] * y[i];
    return acc0 + acc1;
}

double sum(const double* x, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc0 += x[i];
        acc1 += x[i + 1];
    }
    if (i < n) acc0 += x[i];
    return acc0 + acc1;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

}  // namespace fraglab::kernels::scalar
