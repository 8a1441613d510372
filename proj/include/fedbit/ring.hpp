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

// Arithmetic in R_q = Z_q[X]/(X^N + 1) with q held as a product of word-sized
// RNS primes.

#ifndef FEDBIT_RING_HPP_
#define FEDBIT_RING_HPP_

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedbit/common.hpp"
#include "fedbit/modulus.hpp"

namespace fedbit {

inline constexpr std::uint64_t kDefaultPlainModulus = 2281701377ULL;
inline constexpr std::size_t kDefaultRingDegree = 4096;
inline constexpr std::size_t kDefaultLimbCount = 2;
inline constexpr int kDefaultLimbBits = 54;

enum class SecurityLevel { kNone, k128 };

// Largest log2(q) admitted at 128-bit classical security for a given ring
// degree (homomorphic encryption standard table). Returns 0 for degrees the
// table does not cover.
inline int MaxModulusBits128(std::size_t ring_degree) {
  switch (ring_degree) {
    case 1024: return 27;
    case 2048: return 54;
    case 4096: return 109;
    case 8192: return 218;
    case 16384: return 438;
    case 32768: return 881;
    default: return 0;
  }
}

namespace detail {

inline std::size_t ReverseBits(std::size_t x, int bits) {
  std::size_t r = 0;
  for (int i = 0; i < bits; ++i) {
    r = (r << 1) | (x & 1);
    x >>= 1;
  }
  return r;
}

inline BigInt FromU128(u128 v) {
  BigInt r = static_cast<std::uint64_t>(v >> 64);
  r <<= 64;
  r |= static_cast<std::uint64_t>(v);
  return r;
}

}  // namespace detail

class RingContext;
using RingContextPtr = std::shared_ptr<const RingContext>;

// Immutable parameter set: ring degree, RNS basis of q, plaintext modulus t,
// Delta = floor(q/t) and the per-limb NTT tables.
class RingContext {
 public:
  static RingContextPtr Create(std::size_t ring_degree,
                               std::vector<std::uint64_t> limb_values,
                               std::uint64_t plain_modulus,
                               SecurityLevel security = SecurityLevel::k128) {
    if (ring_degree < 2 || (ring_degree & (ring_degree - 1)) != 0) {
      throw ContractViolation("ring degree must be a power of two >= 2");
    }
    if (limb_values.empty()) throw ContractViolation("need at least one limb");
    auto ctx = std::shared_ptr<RingContext>(new RingContext());
    ctx->n_ = ring_degree;
    ctx->log_n_ = 0;
    while ((std::size_t{1} << ctx->log_n_) < ring_degree) ++ctx->log_n_;

    ctx->q_ = 1;
    for (std::size_t i = 0; i < limb_values.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (limb_values[i] == limb_values[j]) {
          throw ContractViolation("limb moduli must be pairwise distinct");
        }
      }
      ctx->limbs_.push_back(Modulus::Create(limb_values[i], ring_degree));
      ctx->q_ *= limb_values[i];
    }
    ctx->q_bits_ = static_cast<int>(boost::multiprecision::msb(ctx->q_)) + 1;
    if (security == SecurityLevel::k128) {
      const int budget = MaxModulusBits128(ring_degree);
      if (budget == 0 || ctx->q_bits_ > budget) {
        throw ContractViolation("log2(q) = " + std::to_string(ctx->q_bits_) +
                                " bits exceeds the 128-bit security budget for N = " +
                                std::to_string(ring_degree));
      }
    }
    if (plain_modulus < 2 || plain_modulus > Modulus::kMaxValue ||
        BigInt(plain_modulus) >= ctx->q_) {
      throw ContractViolation("plaintext modulus must satisfy 2 <= t < min(q, 2^62)");
    }
    ctx->t_ = plain_modulus;
    ctx->delta_ = ctx->q_ / plain_modulus;
    ctx->half_q_ = ctx->q_ >> 1;

    BigInt rest = ctx->q_;
    while (rest != 0) {
      ctx->q_words_.push_back(static_cast<std::uint64_t>(rest & ~std::uint64_t{0}));
      rest >>= 64;
    }
    ctx->BuildTables();
    return ctx;
  }

  // Default parameter set: `limb_count` smallest primes above 2^54 that are
  // 1 mod 2N.
  static RingContextPtr CreateDefault(std::size_t ring_degree = kDefaultRingDegree,
                                      std::size_t limb_count = kDefaultLimbCount,
                                      std::uint64_t plain_modulus = kDefaultPlainModulus,
                                      SecurityLevel security = SecurityLevel::k128) {
    return Create(ring_degree,
                  GenerateNttPrimes(ring_degree, limb_count, kDefaultLimbBits),
                  plain_modulus, security);
  }

  std::size_t n() const { return n_; }
  int log_n() const { return log_n_; }
  std::size_t limb_count() const { return limbs_.size(); }
  const std::vector<Modulus>& limbs() const { return limbs_; }
  const Modulus& limb(std::size_t i) const { return limbs_[i]; }
  const BigInt& q() const { return q_; }
  int q_bits() const { return q_bits_; }
  double log2_q() const {
    double acc = 0;
    for (const auto& m : limbs_) acc += std::log2(static_cast<double>(m.value()));
    return acc;
  }
  std::uint64_t t() const { return t_; }
  const BigInt& delta() const { return delta_; }
  const BigInt& half_q() const { return half_q_; }
  // Little-endian 64-bit words of q.
  const std::vector<std::uint64_t>& q_words() const { return q_words_; }

  // psi^bitrev(i) and psi^-bitrev(i) tables for limb `limb`.
  std::span<const ShoupOperand> root_powers(std::size_t limb) const {
    return tables_[limb].roots;
  }
  std::span<const ShoupOperand> inv_root_powers(std::size_t limb) const {
    return tables_[limb].inv_roots;
  }
  const ShoupOperand& n_inv(std::size_t limb) const { return tables_[limb].n_inv; }

  // (q_0 * ... * q_{i-1})^-1 mod q_i and the matching prefix products,
  // used by CRT reconstruction.
  std::uint64_t garner_inverse(std::size_t i) const { return garner_inv_[i]; }
  std::uint64_t prefix_mod(std::size_t i, std::size_t j) const {
    return prefix_mod_[i][j];
  }
  const BigInt& prefix_product(std::size_t i) const { return prefix_product_[i]; }

 private:
  struct NttTables {
    std::vector<ShoupOperand> roots;
    std::vector<ShoupOperand> inv_roots;
    ShoupOperand n_inv;
  };

  RingContext() = default;

  void BuildTables() {
    tables_.resize(limbs_.size());
    for (std::size_t l = 0; l < limbs_.size(); ++l) {
      const Modulus& m = limbs_[l];
      const std::uint64_t psi = m.two_n_root();
      const std::uint64_t psi_inv = InvMod(psi, m);
      auto& tab = tables_[l];
      tab.roots.resize(n_);
      tab.inv_roots.resize(n_);
      std::uint64_t pw = 1, ipw = 1;
      std::vector<std::uint64_t> powers(n_), inv_powers(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        powers[i] = pw;
        inv_powers[i] = ipw;
        pw = MulMod(pw, psi, m);
        ipw = MulMod(ipw, psi_inv, m);
      }
      for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t r = detail::ReverseBits(i, log_n_);
        tab.roots[i] = ShoupOperand(powers[r], m);
        tab.inv_roots[i] = ShoupOperand(inv_powers[r], m);
      }
      tab.n_inv = ShoupOperand(InvMod(static_cast<std::uint64_t>(n_) % m.value(), m), m);
    }

    const std::size_t k = limbs_.size();
    garner_inv_.assign(k, 1);
    prefix_mod_.assign(k, std::vector<std::uint64_t>(k, 1));
    prefix_product_.assign(k, BigInt(1));
    for (std::size_t i = 0; i < k; ++i) {
      const Modulus& mi = limbs_[i];
      std::uint64_t prod = 1;
      for (std::size_t j = 0; j < i; ++j) {
        prefix_mod_[i][j] = prod;
        prod = MulMod(prod, mi.Reduce(limbs_[j].value()), mi);
      }
      prefix_mod_[i][i] = prod;
      garner_inv_[i] = i == 0 ? 1 : InvMod(prod, mi);
      if (i > 0) prefix_product_[i] = prefix_product_[i - 1] * limbs_[i - 1].value();
    }
  }

  std::size_t n_ = 0;
  int log_n_ = 0;
  std::vector<Modulus> limbs_;
  BigInt q_;
  int q_bits_ = 0;
  std::uint64_t t_ = 0;
  BigInt delta_;
  BigInt half_q_;
  std::vector<std::uint64_t> q_words_;
  std::vector<NttTables> tables_;
  std::vector<std::uint64_t> garner_inv_;
  std::vector<std::vector<std::uint64_t>> prefix_mod_;
  std::vector<BigInt> prefix_product_;
};

enum class Domain : std::uint8_t { kCoefficient = 0, kNtt = 1 };

inline const char* DomainName(Domain d) {
  return d == Domain::kCoefficient ? "coefficient" : "ntt";
}

// Element of R_q as limbs x N residues, tagged with its evaluation domain.
class Polynomial {
 public:
  Polynomial() = default;

  static Polynomial Zero(RingContextPtr ctx, Domain domain) {
    Polynomial p;
    p.residues_.assign(ctx->limb_count() * ctx->n(), 0);
    p.ctx_ = std::move(ctx);
    p.domain_ = domain;
    return p;
  }

  // Coefficient-domain polynomial from small signed integers; negatives are
  // stored as q_i - |v| in every limb.
  static Polynomial FromSigned(RingContextPtr ctx, std::span<const std::int64_t> coeffs) {
    Polynomial p = Zero(ctx, Domain::kCoefficient);
    if (coeffs.size() > ctx->n()) throw ContractViolation("too many coefficients");
    for (std::size_t l = 0; l < ctx->limb_count(); ++l) {
      const Modulus& m = ctx->limb(l);
      auto limb = p.limb(l);
      for (std::size_t j = 0; j < coeffs.size(); ++j) {
        const std::int64_t v = coeffs[j];
        const std::uint64_t mag = m.Reduce(static_cast<std::uint64_t>(v < 0 ? -v : v));
        limb[j] = v < 0 ? NegMod(mag, m) : mag;
      }
    }
    return p;
  }

  // Coefficient-domain polynomial from non-negative integers, reduced per limb.
  static Polynomial FromUnsigned(RingContextPtr ctx, std::span<const std::uint64_t> coeffs) {
    Polynomial p = Zero(ctx, Domain::kCoefficient);
    if (coeffs.size() > ctx->n()) throw ContractViolation("too many coefficients");
    for (std::size_t l = 0; l < ctx->limb_count(); ++l) {
      const Modulus& m = ctx->limb(l);
      auto limb = p.limb(l);
      for (std::size_t j = 0; j < coeffs.size(); ++j) limb[j] = m.Reduce(coeffs[j]);
    }
    return p;
  }

  // Coefficient-domain polynomial from integers in [0, q).
  static Polynomial FromBig(RingContextPtr ctx, std::span<const BigInt> coeffs) {
    Polynomial p = Zero(ctx, Domain::kCoefficient);
    if (coeffs.size() > ctx->n()) throw ContractViolation("too many coefficients");
    for (std::size_t l = 0; l < ctx->limb_count(); ++l) {
      const std::uint64_t mv = ctx->limb(l).value();
      auto limb = p.limb(l);
      for (std::size_t j = 0; j < coeffs.size(); ++j) {
        limb[j] = static_cast<std::uint64_t>(coeffs[j] % mv);
      }
    }
    return p;
  }

  // Takes ownership of raw residues laid out limb-major. Throws if any
  // residue is not below its limb modulus.
  static Polynomial FromResidues(RingContextPtr ctx, Domain domain,
                                 std::vector<std::uint64_t> residues) {
    if (residues.size() != ctx->limb_count() * ctx->n()) {
      throw ContractViolation("residue count does not match context");
    }
    for (std::size_t l = 0; l < ctx->limb_count(); ++l) {
      const std::uint64_t mv = ctx->limb(l).value();
      for (std::size_t j = 0; j < ctx->n(); ++j) {
        if (residues[l * ctx->n() + j] >= mv) {
          throw ContractViolation("residue not below limb modulus");
        }
      }
    }
    Polynomial p;
    p.ctx_ = std::move(ctx);
    p.domain_ = domain;
    p.residues_ = std::move(residues);
    return p;
  }

  Domain domain() const { return domain_; }
  void set_domain(Domain d) { domain_ = d; }
  const RingContext& context() const { return *ctx_; }
  const RingContextPtr& context_ptr() const { return ctx_; }
  std::size_t n() const { return ctx_->n(); }
  std::size_t limb_count() const { return ctx_->limb_count(); }

  std::span<std::uint64_t> limb(std::size_t i) {
    return {residues_.data() + i * ctx_->n(), ctx_->n()};
  }
  std::span<const std::uint64_t> limb(std::size_t i) const {
    return {residues_.data() + i * ctx_->n(), ctx_->n()};
  }
  std::span<const std::uint64_t> residues() const { return residues_; }

  bool IsZero() const {
    for (std::uint64_t r : residues_) {
      if (r != 0) return false;
    }
    return true;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.domain_ == b.domain_ && a.residues_ == b.residues_ &&
           (a.ctx_ == b.ctx_ || (a.ctx_ && b.ctx_ && a.ctx_->limbs() == b.ctx_->limbs()));
  }

 private:
  RingContextPtr ctx_;
  Domain domain_ = Domain::kCoefficient;
  std::vector<std::uint64_t> residues_;
};

// One arbitrary-precision integer in [0, q) per coefficient.
struct BigCoefficientVector {
  std::vector<BigInt> coeffs;
};

namespace detail {

inline void RequireDomain(const Polynomial& p, Domain want, const char* op) {
  if (p.domain() != want) {
    throw ContractViolation(std::string(op) + ": expected " + DomainName(want) +
                            " domain, got " + DomainName(p.domain()));
  }
}

inline void RequireCompatible(const Polynomial& a, const Polynomial& b, const char* op) {
  if (a.domain() != b.domain()) {
    throw ContractViolation(std::string(op) + ": domain mismatch");
  }
  if (a.context_ptr() != b.context_ptr() &&
      !(a.context().n() == b.context().n() && a.context().limbs() == b.context().limbs())) {
    throw ContractViolation(std::string(op) + ": context mismatch");
  }
}

// In-place negacyclic Cooley-Tukey; natural order in, bit-reversed out.
inline void ForwardNttLimb(std::span<std::uint64_t> a, std::span<const ShoupOperand> roots,
                           const Modulus& mod) {
  const std::size_t n = a.size();
  const std::uint64_t p = mod.value();
  std::size_t t = n;
  for (std::size_t m = 1; m < n; m <<= 1) {
    t >>= 1;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j1 = 2 * i * t;
      const ShoupOperand& w = roots[m + i];
      for (std::size_t j = j1; j < j1 + t; ++j) {
        const std::uint64_t u = a[j];
        const std::uint64_t v = w.MulMod(a[j + t], mod);
        const std::uint64_t s = u + v;
        a[j] = s >= p ? s - p : s;
        a[j + t] = u >= v ? u - v : u + p - v;
      }
    }
  }
}

// In-place Gentleman-Sande inverse; bit-reversed in, natural order out.
inline void InverseNttLimb(std::span<std::uint64_t> a, std::span<const ShoupOperand> inv_roots,
                           const ShoupOperand& n_inv, const Modulus& mod) {
  const std::size_t n = a.size();
  const std::uint64_t p = mod.value();
  std::size_t t = 1;
  for (std::size_t m = n; m > 1; m >>= 1) {
    const std::size_t h = m >> 1;
    std::size_t j1 = 0;
    for (std::size_t i = 0; i < h; ++i) {
      const ShoupOperand& w = inv_roots[h + i];
      for (std::size_t j = j1; j < j1 + t; ++j) {
        const std::uint64_t u = a[j];
        const std::uint64_t v = a[j + t];
        const std::uint64_t s = u + v;
        a[j] = s >= p ? s - p : s;
        a[j + t] = w.MulMod(u >= v ? u - v : u + p - v, mod);
      }
      j1 += 2 * t;
    }
    t <<= 1;
  }
  for (auto& x : a) x = n_inv.MulMod(x, mod);
}

}  // namespace detail

// Negacyclic NTT per limb. Output slot i holds p(psi^(2*bitrev(i)+1)).
inline Polynomial NttForward(Polynomial p) {
  detail::RequireDomain(p, Domain::kCoefficient, "ntt_forward");
  const RingContext& ctx = p.context();
  for (std::size_t l = 0; l < ctx.limb_count(); ++l) {
    detail::ForwardNttLimb(p.limb(l), ctx.root_powers(l), ctx.limb(l));
  }
  p.set_domain(Domain::kNtt);
  return p;
}

inline Polynomial NttInverse(Polynomial p) {
  detail::RequireDomain(p, Domain::kNtt, "ntt_inverse");
  const RingContext& ctx = p.context();
  for (std::size_t l = 0; l < ctx.limb_count(); ++l) {
    detail::InverseNttLimb(p.limb(l), ctx.inv_root_powers(l), ctx.n_inv(l), ctx.limb(l));
  }
  p.set_domain(Domain::kCoefficient);
  return p;
}

inline void AddInPlace(Polynomial& a, const Polynomial& b) {
  detail::RequireCompatible(a, b, "poly_add");
  const RingContext& ctx = a.context();
  for (std::size_t l = 0; l < ctx.limb_count(); ++l) {
    const Modulus& m = ctx.limb(l);
    auto x = a.limb(l);
    auto y = b.limb(l);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = AddMod(x[j], y[j], m);
  }
}

inline Polynomial Add(Polynomial a, const Polynomial& b) {
  AddInPlace(a, b);
  return a;
}

inline Polynomial Negate(Polynomial a) {
  const RingContext& ctx = a.context();
  for (std::size_t l = 0; l < ctx.limb_count(); ++l) {
    const Modulus& m = ctx.limb(l);
    for (auto& x : a.limb(l)) x = NegMod(x, m);
  }
  return a;
}

// Pointwise product of two NTT-domain polynomials.
inline Polynomial Multiply(Polynomial a, const Polynomial& b) {
  detail::RequireDomain(a, Domain::kNtt, "poly_mul");
  detail::RequireDomain(b, Domain::kNtt, "poly_mul");
  detail::RequireCompatible(a, b, "poly_mul");
  const RingContext& ctx = a.context();
  for (std::size_t l = 0; l < ctx.limb_count(); ++l) {
    const Modulus& m = ctx.limb(l);
    auto x = a.limb(l);
    auto y = b.limb(l);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = MulMod(x[j], y[j], m);
  }
  return a;
}

inline Polynomial ScalarMultiply(Polynomial p, const BigInt& k) {
  const RingContext& ctx = p.context();
  for (std::size_t l = 0; l < ctx.limb_count(); ++l) {
    const Modulus& m = ctx.limb(l);
    BigInt kr = k % m.value();
    if (kr < 0) kr += m.value();
    const ShoupOperand factor(static_cast<std::uint64_t>(kr), m);
    for (auto& x : p.limb(l)) x = factor.MulMod(x, m);
  }
  return p;
}

// Garner mixed-radix reconstruction of each coefficient into [0, q).
inline BigCoefficientVector CrtReconstruct(const Polynomial& p) {
  detail::RequireDomain(p, Domain::kCoefficient, "crt_reconstruct");
  const RingContext& ctx = p.context();
  const std::size_t k = ctx.limb_count();
  BigCoefficientVector out;
  out.coeffs.resize(ctx.n());
  std::vector<std::uint64_t> digits(k);
  for (std::size_t j = 0; j < ctx.n(); ++j) {
    for (std::size_t i = 0; i < k; ++i) {
      const Modulus& mi = ctx.limb(i);
      // Value of the already-fixed mixed-radix prefix, mod q_i.
      std::uint64_t acc = 0;
      for (std::size_t d = 0; d < i; ++d) {
        acc = AddMod(acc, MulMod(mi.Reduce(digits[d]), ctx.prefix_mod(i, d), mi), mi);
      }
      digits[i] = MulMod(SubMod(p.limb(i)[j], acc, mi), ctx.garner_inverse(i), mi);
    }
    if (k <= 2) {
      u128 v = digits[0];
      if (k == 2) v += static_cast<u128>(digits[1]) * ctx.limb(0).value();
      out.coeffs[j] = detail::FromU128(v);
    } else {
      BigInt v = 0;
      for (std::size_t i = 0; i < k; ++i) v += ctx.prefix_product(i) * digits[i];
      out.coeffs[j] = std::move(v);
    }
  }
  return out;
}

// round(t * v / q) mod t, computed as floor((t*v + floor(q/2)) / q) mod t.
inline std::uint64_t ScaleRoundModT(const BigInt& v, const RingContext& ctx) {
  BigInt num = v * ctx.t();
  num += ctx.half_q();
  num /= ctx.q();
  return static_cast<std::uint64_t>(num % ctx.t());
}

inline std::vector<std::uint64_t> ScaleRoundModT(const BigCoefficientVector& v,
                                                 const RingContext& ctx) {
  std::vector<std::uint64_t> out(v.coeffs.size());
  for (std::size_t j = 0; j < v.coeffs.size(); ++j) {
    if (v.coeffs[j] >= ctx.q() || v.coeffs[j] < 0) {
      throw ContractViolation("scale_round_mod_t: coefficient outside [0, q)");
    }
    out[j] = ScaleRoundModT(v.coeffs[j], ctx);
  }
  return out;
}

}  // namespace fedbit

#endif  // FEDBIT_RING_HPP_
