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

#include <cstddef>
#include <string>

// Vector arithmetic kernels behind the dense linear algebra and the bias
// formulas. Scalar reference implementations always exist; AVX2 (x86-64) and
// NEON (aarch64) variants are selected once at startup based on what the CPU
// reports. SIMD variants may reassociate sums, so they agree with the scalar
// reference to rounding, not bit-exactly.

namespace fraglab::kernels {

enum class Backend { scalar, avx2, neon };

Backend active_backend();
std::string backend_name();

// Test hook. Throws ConfigError if the requested backend is unavailable.
void force_backend(Backend b);

double dot(const double* x, const double* y, std::size_t n);
// Weighted dot product: sum_i w[i] * x[i] * y[i].
double dot3(const double* w, const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, std::size_t n);
// x[i] *= a
void scal(double a, double* x, std::size_t n);

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
double dot3(const double* w, const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define FRAGLAB_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
double dot3(const double* w, const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
#define FRAGLAB_HAVE_NEON_KERNELS 1
namespace neon {
double dot(const double* x, const double* y, std::size_t n);
double dot3(const double* w, const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
}  // namespace neon
#endif

}  // namespace fraglab::kernels
