/*
 * Copyright 2026 The FedBit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDBIT_SAMPLING_HPP_
#define FEDBIT_SAMPLING_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fedbit/random.hpp"
#include "fedbit/ring.hpp"

namespace fedbit {

inline constexpr double kErrorStddev = 3.2;
inline constexpr int kErrorBound = 19;  // floor(6 * sigma)

namespace detail {

// Cumulative table for the discrete Gaussian on [-kErrorBound, kErrorBound].
inline const std::array<double, 2 * kErrorBound + 1>& GaussianCdf() {
  static const auto table = [] {
    std::array<double, 2 * kErrorBound + 1> cdf{};
    double total = 0;
    for (int x = -kErrorBound; x <= kErrorBound; ++x) {
      total += std::exp(-static_cast<double>(x * x) / (2 * kErrorStddev * kErrorStddev));
      cdf[x + kErrorBound] = total;
    }
    for (auto& c : cdf) c /= total;
    cdf.back() = 1.0;
    return cdf;
  }();
  return table;
}

}  // namespace detail

// Uniform element of R_q: one draw in [0, q) per coefficient (rejection on
// q's bit length), reduced into every limb.
inline Polynomial SampleUniform(const Seed& seed, const RingContextPtr& ctx) {
  SeededStream stream(seed);
  const auto& qw = ctx->q_words();
  const std::size_t words = qw.size();
  const int top_bits = ctx->q_bits() - 64 * static_cast<int>(words - 1);
  const std::uint64_t top_mask =
      top_bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << top_bits) - 1;
  Polynomial p = Polynomial::Zero(ctx, Domain::kCoefficient);
  std::vector<std::uint64_t> draw(words);
  for (std::size_t j = 0; j < ctx->n(); ++j) {
    for (;;) {
      for (auto& w : draw) w = stream.NextU64();
      draw.back() &= top_mask;
      // draw < q, compared from the most significant word.
      bool less = false;
      for (std::size_t i = words; i-- > 0;) {
        if (draw[i] != qw[i]) {
          less = draw[i] < qw[i];
          break;
        }
      }
      if (less) break;
    }
    for (std::size_t l = 0; l < ctx->limb_count(); ++l) {
      const Modulus& m = ctx->limb(l);
      std::uint64_t r = 0;
      for (std::size_t i = words; i-- > 0;) {
        r = m.Reduce((static_cast<u128>(r) << 64) | draw[i]);
      }
      p.limb(l)[j] = r;
    }
  }
  return p;
}

// Signed coefficients of a centered discrete Gaussian (sigma 3.2, |v| <= 19).
inline std::vector<std::int64_t> SampleErrorCoefficients(const Seed& seed, std::size_t n) {
  SeededStream stream(seed);
  const auto& cdf = detail::GaussianCdf();
  std::vector<std::int64_t> out(n);
  for (auto& v : out) {
    const double u = stream.UniformDouble();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    v = static_cast<std::int64_t>(it - cdf.begin()) - kErrorBound;
  }
  return out;
}

inline Polynomial SampleError(const Seed& seed, const RingContextPtr& ctx) {
  const auto coeffs = SampleErrorCoefficients(seed, ctx->n());
  return Polynomial::FromSigned(ctx, coeffs);
}

// Uniform binary polynomial, replicated across limbs.
inline Polynomial SampleSecret(const Seed& seed, const RingContextPtr& ctx) {
  SeededStream stream(seed);
  std::vector<std::uint64_t> bits(ctx->n());
  std::uint64_t word = 0;
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (j % 64 == 0) word = stream.NextU64();
    bits[j] = (word >> (j % 64)) & 1;
  }
  return Polynomial::FromUnsigned(ctx, bits);
}

}  // namespace fedbit

#endif  // FEDBIT_SAMPLING_HPP_
