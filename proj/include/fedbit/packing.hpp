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

// Bit-interleaved packing of quantized weights into plaintext coefficients.
//
// Each coefficient holds `slots` fields of (beta + delta) bits; slot k sits
// at bit offset k * (beta + delta), slot 0 least significant. A field carries
// a beta-bit weight and delta bits of headroom so that the sum over
// max_clients participants never carries into the next field, and the whole
// aggregated coefficient stays below the plaintext modulus t:
//
//   carry bound:    U * (2^beta - 1) < 2^(beta + delta)
//   modulus bound:  U * M < t,  M = (2^beta - 1) * (2^(m*f) - 1) / (2^f - 1)
//
// where f = beta + delta and M is the all-ones packed coefficient.

#ifndef FEDBIT_PACKING_HPP_
#define FEDBIT_PACKING_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fedbit/bfv.hpp"
#include "fedbit/common.hpp"

namespace fedbit {

inline constexpr int kMaxQuantBits = 32;

struct FieldLayout {
  int beta = 8;
  int delta = 3;
  int slots = 1;
  std::uint64_t max_clients = 1;
  std::size_t ring_degree = 4096;
  std::uint64_t plain_modulus = 2281701377ULL;

  int field_bits() const { return beta + delta; }
  // Weights carried by one polynomial.
  std::size_t weights_per_poly() const { return static_cast<std::size_t>(slots) * ring_degree; }

  // Layout with the largest slot count both bounds admit; throws
  // InfeasibleLayout when even one slot is impossible.
  static FieldLayout Create(int beta, int delta, std::uint64_t max_clients,
                            std::size_t ring_degree, std::uint64_t plain_modulus);

  friend bool operator==(const FieldLayout&, const FieldLayout&) = default;
};

// Closed form of the all-max packed coefficient.
inline BigInt MaxPackedCoefficient(int beta, int delta, int slots) {
  const int f = beta + delta;
  const BigInt field_max = (BigInt(1) << beta) - 1;
  return field_max * ((BigInt(1) << (slots * f)) - 1) / ((BigInt(1) << f) - 1);
}

enum class LayoutCheck { kParameters = 0, kCarryPrevention = 1, kModulusBound = 2 };

struct LayoutViolation {
  LayoutCheck check;
  BigInt lhs;  // the side that must be strictly smaller
  BigInt rhs;
  std::string message;
};

struct LayoutReport {
  std::vector<LayoutViolation> violations;
  // rhs - lhs of each bound; positive when satisfied.
  BigInt carry_margin;
  BigInt modulus_margin;

  bool ok() const { return violations.empty(); }
  bool Violates(LayoutCheck check) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const LayoutViolation& v) { return v.check == check; });
  }
  std::string Describe() const {
    if (ok()) return "layout ok";
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += v.message;
    }
    return out;
  }
};

inline LayoutReport ValidateLayout(const FieldLayout& layout) {
  LayoutReport report;
  auto param = [&](const std::string& msg) {
    report.violations.push_back({LayoutCheck::kParameters, 0, 0, msg});
  };
  if (layout.beta < 1 || layout.beta > kMaxQuantBits) param("beta must be in [1, 32]");
  if (layout.delta < 0 || layout.delta > 32) param("delta must be in [0, 32]");
  if (layout.slots < 1) param("slots must be >= 1");
  if (layout.max_clients < 1) param("max_clients must be >= 1");
  if (layout.ring_degree < 1) param("ring degree must be >= 1");
  if (layout.plain_modulus < 2) param("plaintext modulus must be >= 2");
  if (!report.ok()) return report;

  const BigInt u = layout.max_clients;
  const BigInt carry_lhs = u * ((BigInt(1) << layout.beta) - 1);
  const BigInt carry_rhs = BigInt(1) << layout.field_bits();
  report.carry_margin = carry_rhs - carry_lhs;
  if (carry_lhs >= carry_rhs) {
    std::ostringstream msg;
    msg << "carry-prevention bound violated: U*(2^beta-1) = " << carry_lhs
        << " >= 2^(beta+delta) = " << carry_rhs << " (short by " << (carry_lhs - carry_rhs + 1)
        << ")";
    report.violations.push_back({LayoutCheck::kCarryPrevention, carry_lhs, carry_rhs, msg.str()});
  }
  const BigInt mod_lhs = u * MaxPackedCoefficient(layout.beta, layout.delta, layout.slots);
  const BigInt mod_rhs = layout.plain_modulus;
  report.modulus_margin = mod_rhs - mod_lhs;
  if (mod_lhs >= mod_rhs) {
    std::ostringstream msg;
    msg << "modulus bound violated: U*M = " << mod_lhs << " >= t = " << mod_rhs;
    report.violations.push_back({LayoutCheck::kModulusBound, mod_lhs, mod_rhs, msg.str()});
  }
  return report;
}

// Largest m >= 1 with U * M(m) < t.
inline int MaxSlots(int beta, int delta, std::uint64_t max_clients, std::uint64_t plain_modulus) {
  FieldLayout probe;
  probe.beta = beta;
  probe.delta = delta;
  probe.slots = 1;
  probe.max_clients = max_clients;
  probe.plain_modulus = plain_modulus;
  const LayoutReport first = ValidateLayout(probe);
  if (!first.ok()) throw InfeasibleLayout(first.Describe());
  const BigInt u = max_clients;
  int m = 1;
  while (u * MaxPackedCoefficient(beta, delta, m + 1) < plain_modulus) ++m;
  return m;
}

inline FieldLayout FieldLayout::Create(int beta, int delta, std::uint64_t max_clients,
                                       std::size_t ring_degree, std::uint64_t plain_modulus) {
  FieldLayout layout;
  layout.beta = beta;
  layout.delta = delta;
  layout.max_clients = max_clients;
  layout.ring_degree = ring_degree;
  layout.plain_modulus = plain_modulus;
  layout.slots = MaxSlots(beta, delta, max_clients, plain_modulus);
  return layout;
}

// Affine min/max quantizer range.
struct QuantParams {
  double lo = 0;
  double hi = 0;
  int beta = 8;

  static QuantParams FromWeights(std::span<const double> weights, int beta) {
    QuantParams p;
    p.beta = beta;
    if (!weights.empty()) {
      const auto [mn, mx] = std::minmax_element(weights.begin(), weights.end());
      p.lo = *mn;
      p.hi = *mx;
    }
    return p;
  }

  std::uint64_t levels() const { return (std::uint64_t{1} << beta) - 1; }

  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

inline std::vector<std::uint64_t> QuantizeLayer(std::span<const double> weights,
                                                const QuantParams& params) {
  if (!(params.hi >= params.lo)) throw ContractViolation("quantizer needs hi >= lo");
  if (params.beta < 1 || params.beta > kMaxQuantBits) {
    throw ContractViolation("quantizer beta must be in [1, 32]");
  }
  std::vector<std::uint64_t> out(weights.size(), 0);
  if (params.hi == params.lo) return out;
  const double levels = static_cast<double>(params.levels());
  const double range = params.hi - params.lo;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double x = std::round((weights[i] - params.lo) / range * levels);
    if (!(x >= 0.0)) x = 0.0;
    if (x > levels) x = levels;
    out[i] = static_cast<std::uint64_t>(x);
  }
  return out;
}

inline std::vector<double> DequantizeLayer(std::span<const std::uint64_t> values,
                                           const QuantParams& params) {
  std::vector<double> out(values.size(), params.lo);
  if (params.hi == params.lo) return out;
  const double levels = static_cast<double>(params.levels());
  const double range = params.hi - params.lo;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > params.levels()) {
      throw ContractViolation("dequantize: value " + std::to_string(values[i]) +
                              " exceeds 2^beta - 1");
    }
    out[i] = params.lo + range * static_cast<double>(values[i]) / levels;
  }
  return out;
}

struct PackedLayer {
  std::vector<PlaintextPoly> polys;
  FieldLayout layout;
  std::size_t weight_count = 0;
};

// ceil(r / (m * N)).
inline std::size_t PolynomialCount(std::size_t weight_count, const FieldLayout& layout) {
  const std::size_t per = layout.weights_per_poly();
  return (weight_count + per - 1) / per;
}

inline void RequireValid(const FieldLayout& layout) {
  const LayoutReport report = ValidateLayout(layout);
  if (!report.ok()) throw InfeasibleLayout(report.Describe());
}

// c_{i,j} = sum_k w_{(iN + j)m + k} * 2^(k(beta+delta)); missing trailing
// weights count as zero.
inline PackedLayer PackLayer(std::span<const std::uint64_t> weights, const FieldLayout& layout) {
  RequireValid(layout);
  const std::uint64_t limit = std::uint64_t{1} << layout.beta;
  const std::size_t n = layout.ring_degree;
  const std::size_t m = static_cast<std::size_t>(layout.slots);
  const int f = layout.field_bits();
  PackedLayer out;
  out.layout = layout;
  out.weight_count = weights.size();
  out.polys.resize(PolynomialCount(weights.size(), layout));
  for (std::size_t i = 0; i < out.polys.size(); ++i) {
    auto& coeffs = out.polys[i].coeffs;
    coeffs.assign(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
      std::uint64_t c = 0;
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t idx = (i * n + j) * m + k;
        if (idx >= weights.size()) break;
        if (weights[idx] >= limit) {
          throw ContractViolation("pack: weight " + std::to_string(weights[idx]) + " at index " +
                                  std::to_string(idx) + " does not fit in beta bits");
        }
        c |= weights[idx] << (k * f);
      }
      coeffs[j] = c;
    }
  }
  return out;
}

// Field k of each coefficient, (c >> k(beta+delta)) mod 2^(beta+delta); the
// first expected_count values. Coefficients >= t mean the plaintext wrapped
// and are reported as IntegrityError.
inline std::vector<std::uint64_t> UnpackLayer(std::span<const PlaintextPoly> polys,
                                              const FieldLayout& layout,
                                              std::size_t expected_count) {
  RequireValid(layout);
  const std::size_t n = layout.ring_degree;
  const std::size_t m = static_cast<std::size_t>(layout.slots);
  const int f = layout.field_bits();
  const std::uint64_t mask = f >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << f) - 1;
  if (expected_count > polys.size() * n * m) {
    throw ContractViolation("unpack: expected " + std::to_string(expected_count) +
                            " weights but only " + std::to_string(polys.size()) +
                            " polynomials supplied");
  }
  std::vector<std::uint64_t> out(expected_count);
  for (std::size_t idx = 0; idx < expected_count; ++idx) {
    const std::size_t flat = idx / m;
    const std::size_t k = idx % m;
    const auto& coeffs = polys[flat / n].coeffs;
    const std::uint64_t c = (flat % n) < coeffs.size() ? coeffs[flat % n] : 0;
    if (c >= layout.plain_modulus) {
      throw IntegrityError("unpack: coefficient " + std::to_string(c) + " >= t");
    }
    out[idx] = (c >> (k * f)) & mask;
  }
  return out;
}

inline std::vector<std::uint64_t> UnpackLayer(const PackedLayer& packed,
                                              std::size_t expected_count) {
  return UnpackLayer(packed.polys, packed.layout, expected_count);
}

// floor((v + floor(U/2)) / U): nearest integer, ties away from zero.
inline std::vector<std::uint64_t> AverageUnpacked(std::span<const std::uint64_t> sums,
                                                  std::uint64_t participants) {
  if (participants == 0) throw ContractViolation("average: zero participants");
  std::vector<std::uint64_t> out(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    out[i] = (sums[i] + participants / 2) / participants;
  }
  return out;
}

}  // namespace fedbit

#endif  // FEDBIT_PACKING_HPP_
