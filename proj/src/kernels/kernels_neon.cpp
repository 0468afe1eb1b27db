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

#ifdef FRAGLAB_HAVE_NEON_KERNELS

#include <arm_neon.h>

// NEON is baseline on aarch64, so no runtime feature check is needed.

namespace fraglab::kernels::neon {

double dot(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double result = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) result += x[i] * y[i];
    return result;
}

double dot3(const double* w, const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float64x2_t wx0 = vmulq_f64(vld1q_f64(w + i), vld1q_f64(x + i));
        float64x2_t wx1 = vmulq_f64(vld1q_f64(w + i + 2), vld1q_f64(x + i + 2));
        acc0 = vfmaq_f64(acc0, wx0, vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, wx1, vld1q_f64(y + i + 2));
    }
    double result = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) result += w[i] * x[i] * y[i];
    return result;
}

double sum(const double* x, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
        acc1 = vaddq_f64(acc1, vld1q_f64(x + i + 2));
    }
    double result = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) result += x[i];
    return result;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vy = vld1q_f64(y + i);
        vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
        vst1q_f64(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scal(double a, double* x, std::size_t n) {
    float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) x[i] *= a;
}

}  // namespace fraglab::kernels::neon

#endif  // FRAGLAB_HAVE_NEON_KERNELS
