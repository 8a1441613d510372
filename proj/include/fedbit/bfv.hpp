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

// Secret-key, add-only BFV.
//
// The work is split the way the accelerator dataflow splits it:
//   preparation  b = a*s + e (coefficient domain) and NTT(-a), per mask;
//   encryption   c0 = b + Delta*m, c1 = NTT(-a);
//   decryption   c0 + INTT(c1 . NTT(s)), then round(t/q * .) mod t.
// c1 therefore stays in the NTT domain from preparation through aggregation
// to decryption.

#ifndef FEDBIT_BFV_HPP_
#define FEDBIT_BFV_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedbit/common.hpp"
#include "fedbit/random.hpp"
#include "fedbit/ring.hpp"
#include "fedbit/sampling.hpp"

namespace fedbit {

struct SecretKey {
  Polynomial s;      // binary, coefficient domain
  Polynomial s_ntt;  // NTT(s)

  static SecretKey FromPolynomial(Polynomial s) {
    if (s.domain() != Domain::kCoefficient) {
      throw ContractViolation("secret key must be given in coefficient domain");
    }
    for (std::size_t l = 0; l < s.limb_count(); ++l) {
      for (std::uint64_t c : s.limb(l)) {
        if (c > 1) throw ContractViolation("secret key coefficients must be 0 or 1");
      }
    }
    SecretKey sk;
    sk.s_ntt = NttForward(s);
    sk.s = std::move(s);
    return sk;
  }

  const RingContextPtr& context_ptr() const { return s.context_ptr(); }
};

inline SecretKey KeyGen(const RingContextPtr& ctx, const Seed& seed) {
  return SecretKey::FromPolynomial(SampleSecret(DeriveSeed(seed, "fedbit/secret"), ctx));
}

// Precomputed (a*s + e, NTT(-a)) for exactly one encryption.
class EncryptionMask {
 public:
  const Polynomial& b() const { return b_; }
  const Polynomial& neg_a_ntt() const { return neg_a_ntt_; }
  bool consumed() const { return consumed_; }
  // Identifier derived from the mask seed; distinct seeds give distinct ids.
  std::uint64_t id() const { return id_; }

  // Mask from explicit a and e (coefficient domain).
  static EncryptionMask FromComponents(const SecretKey& sk, Polynomial a, const Polynomial& e,
                                       std::uint64_t id = 0) {
    detail::RequireDomain(a, Domain::kCoefficient, "prepare_mask");
    detail::RequireDomain(e, Domain::kCoefficient, "prepare_mask");
    Polynomial a_ntt = NttForward(std::move(a));
    EncryptionMask mask;
    mask.b_ = Add(NttInverse(Multiply(a_ntt, sk.s_ntt)), e);
    mask.neg_a_ntt_ = Negate(std::move(a_ntt));
    mask.id_ = id;
    return mask;
  }

 private:
  friend class MaskConsumer;

  Polynomial b_;
  Polynomial neg_a_ntt_;
  std::uint64_t id_ = 0;
  bool consumed_ = false;
};

inline std::uint64_t MaskIdFromSeed(const Seed& seed) {
  const Seed h = DeriveSeed(seed, "fedbit/mask-id");
  std::uint64_t id = 0;
  for (int i = 7; i >= 0; --i) id = (id << 8) | h[i];
  return id;
}

// Fresh a (uniform) and e (Gaussian) drawn from independent streams of `seed`.
inline EncryptionMask PrepareMask(const SecretKey& sk, const Seed& seed) {
  const RingContextPtr& ctx = sk.context_ptr();
  return EncryptionMask::FromComponents(
      sk, SampleUniform(DeriveSeed(seed, "fedbit/mask-a"), ctx),
      SampleError(DeriveSeed(seed, "fedbit/mask-e"), ctx), MaskIdFromSeed(seed));
}

// Coefficients of m(X) in [0, t).
struct PlaintextPoly {
  std::vector<std::uint64_t> coeffs;

  friend bool operator==(const PlaintextPoly&, const PlaintextPoly&) = default;
};

struct Ciphertext {
  Polynomial c0;  // coefficient domain
  Polynomial c1;  // NTT domain
  std::uint64_t round_tag = 0;
  std::uint32_t index = 0;

  friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

class MaskConsumer {
 public:
  static std::pair<Polynomial, Polynomial> Take(EncryptionMask& mask) {
    if (mask.consumed_) {
      throw MaskReuseError("encryption mask " + std::to_string(mask.id_) +
                           " was already used");
    }
    mask.consumed_ = true;
    return {std::move(mask.b_), std::move(mask.neg_a_ntt_)};
  }
};

// c0 = b + Delta*m, c1 = NTT(-a). Consumes the mask.
inline Ciphertext Encrypt(const PlaintextPoly& m, EncryptionMask& mask,
                          std::uint64_t round_tag = 0, std::uint32_t index = 0) {
  if (mask.consumed()) {
    throw MaskReuseError("encryption mask " + std::to_string(mask.id()) +
                         " was already used");
  }
  const RingContext& ctx = mask.b().context();
  if (m.coeffs.size() > ctx.n()) throw ContractViolation("plaintext has more than N coefficients");
  for (std::uint64_t c : m.coeffs) {
    if (c >= ctx.t()) {
      throw ContractViolation("plaintext coefficient " + std::to_string(c) + " >= t");
    }
  }
  auto [b, neg_a_ntt] = MaskConsumer::Take(mask);
  Ciphertext ct;
  ct.round_tag = round_tag;
  ct.index = index;
  for (std::size_t l = 0; l < ctx.limb_count(); ++l) {
    const Modulus& mod = ctx.limb(l);
    const ShoupOperand delta(static_cast<std::uint64_t>(ctx.delta() % mod.value()), mod);
    auto c0 = b.limb(l);
    for (std::size_t j = 0; j < m.coeffs.size(); ++j) {
      c0[j] = AddMod(c0[j], delta.MulMod(mod.Reduce(m.coeffs[j]), mod), mod);
    }
  }
  ct.c0 = std::move(b);
  ct.c1 = std::move(neg_a_ntt);
  return ct;
}

// Component-wise sum; every input must carry the same round tag and index.
inline Ciphertext AddCiphertexts(std::span<const Ciphertext> cts) {
  if (cts.empty()) throw ContractViolation("add_ciphertexts: empty list");
  Ciphertext sum = cts.front();
  for (std::size_t i = 1; i < cts.size(); ++i) {
    const Ciphertext& ct = cts[i];
    if (ct.round_tag != sum.round_tag || ct.index != sum.index) {
      throw ContractViolation("add_ciphertexts: mismatched round tag or index (" +
                              std::to_string(ct.round_tag) + "/" + std::to_string(ct.index) +
                              " vs " + std::to_string(sum.round_tag) + "/" +
                              std::to_string(sum.index) + ")");
    }
    AddInPlace(sum.c0, ct.c0);
    AddInPlace(sum.c1, ct.c1);
  }
  return sum;
}

// c0 + c1*s in the coefficient domain, i.e. Delta*m + noise.
inline Polynomial DecryptionPhase(const Ciphertext& ct, const SecretKey& sk) {
  detail::RequireDomain(ct.c0, Domain::kCoefficient, "decrypt");
  detail::RequireDomain(ct.c1, Domain::kNtt, "decrypt");
  return Add(NttInverse(Multiply(ct.c1, sk.s_ntt)), ct.c0);
}

inline PlaintextPoly Decrypt(const Ciphertext& ct, const SecretKey& sk) {
  const Polynomial v = DecryptionPhase(ct, sk);
  return PlaintextPoly{ScaleRoundModT(CrtReconstruct(v), v.context())};
}

// log2(Delta/2) - log2(max |c0 + c1*s - Delta*expected|), noise taken in
// (-q/2, q/2]. A zero-noise ciphertext reports log2(Delta/2).
inline double NoiseMargin(const Ciphertext& ct, const PlaintextPoly& expected,
                          const SecretKey& sk) {
  const Polynomial v = DecryptionPhase(ct, sk);
  const RingContext& ctx = v.context();
  const BigCoefficientVector big = CrtReconstruct(v);
  BigInt worst = 0;
  for (std::size_t j = 0; j < big.coeffs.size(); ++j) {
    const std::uint64_t m = j < expected.coeffs.size() ? expected.coeffs[j] : 0;
    BigInt noise = (big.coeffs[j] - ctx.delta() * m) % ctx.q();
    if (noise < 0) noise += ctx.q();
    if (noise > ctx.half_q()) noise = ctx.q() - noise;
    if (noise > worst) worst = noise;
  }
  const double half_delta = std::log2(ctx.delta().convert_to<double>()) - 1.0;
  const double noise_bits = worst <= 1 ? 0.0 : std::log2(worst.convert_to<double>());
  return half_delta - noise_bits;
}

}  // namespace fedbit

#endif  // FEDBIT_BFV_HPP_
