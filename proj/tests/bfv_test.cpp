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

#include "fedbit/bfv.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace fedbit {
namespace {

class BfvTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ctx_ = RingContext::CreateDefault();
    sk_ = KeyGen(ctx_, SeedFromInteger(2024));
  }

  PlaintextPoly RandomPlaintext(std::mt19937_64& rng, std::uint64_t bound = 0) const {
    PlaintextPoly m;
    m.coeffs.resize(ctx_->n());
    const std::uint64_t b = bound == 0 ? ctx_->t() : bound;
    for (auto& c : m.coeffs) c = rng() % b;
    return m;
  }

  Ciphertext Fresh(const PlaintextPoly& m, std::uint64_t mask_id) const {
    EncryptionMask mask = PrepareMask(sk_, SeedFromInteger(mask_id));
    return Encrypt(m, mask);
  }

  RingContextPtr ctx_;
  SecretKey sk_;
};

TEST_F(BfvTest, KeyGenIsDeterministicAndCached) {
  const SecretKey again = KeyGen(ctx_, SeedFromInteger(2024));
  EXPECT_EQ(again.s, sk_.s);
  EXPECT_EQ(sk_.s_ntt, NttForward(sk_.s));
  EXPECT_NE(KeyGen(ctx_, SeedFromInteger(2025)).s, sk_.s);
  for (auto c : sk_.s.limb(0)) ASSERT_LE(c, 1u);
}

TEST_F(BfvTest, SecretKeyRejectsNonBinary) {
  std::vector<std::uint64_t> two = {2};
  EXPECT_THROW(SecretKey::FromPolynomial(Polynomial::FromUnsigned(ctx_, two)),
               ContractViolation);
}

TEST_F(BfvTest, MaskWithZeroSecretAndErrorIsZero) {
  const SecretKey zero = SecretKey::FromPolynomial(Polynomial::Zero(ctx_, Domain::kCoefficient));
  const Polynomial a = SampleUniform(SeedFromInteger(1), ctx_);
  const EncryptionMask mask =
      EncryptionMask::FromComponents(zero, a, Polynomial::Zero(ctx_, Domain::kCoefficient));
  EXPECT_TRUE(mask.b().IsZero());

  const Polynomial e = SampleError(SeedFromInteger(2), ctx_);
  EXPECT_EQ(EncryptionMask::FromComponents(zero, a, e).b(), e);
}

TEST_F(BfvTest, NegatedANttRoundTrips) {
  const Seed seed = SeedFromInteger(77);
  const EncryptionMask mask = PrepareMask(sk_, seed);
  const Polynomial a = SampleUniform(DeriveSeed(seed, "fedbit/mask-a"), ctx_);
  EXPECT_TRUE(Add(NttInverse(mask.neg_a_ntt()), a).IsZero());
}

TEST_F(BfvTest, MaskMatchesSchoolbookProduct) {
  // b = a*s + e, checked on the first limb against an O(N^2) product.
  const Seed seed = SeedFromInteger(78);
  const EncryptionMask mask = PrepareMask(sk_, seed);
  const Polynomial a = SampleUniform(DeriveSeed(seed, "fedbit/mask-a"), ctx_);
  const Polynomial e = SampleError(DeriveSeed(seed, "fedbit/mask-e"), ctx_);
  const std::uint64_t p = ctx_->limb(0).value();
  std::vector<std::uint64_t> av(a.limb(0).begin(), a.limb(0).end());
  std::vector<std::uint64_t> sv(sk_.s.limb(0).begin(), sk_.s.limb(0).end());
  auto as = oracle::NegacyclicConvolution(av, sv, p);
  for (std::size_t j = 0; j < ctx_->n(); ++j) {
    ASSERT_EQ(mask.b().limb(0)[j], (as[j] + e.limb(0)[j]) % p);
  }
}

TEST_F(BfvTest, EncryptZeroLeavesMaskBody) {
  EncryptionMask mask = PrepareMask(sk_, SeedFromInteger(5));
  const Polynomial b = mask.b();
  const Polynomial neg_a = mask.neg_a_ntt();
  const Ciphertext ct = Encrypt(PlaintextPoly{std::vector<std::uint64_t>(ctx_->n(), 0)}, mask);
  EXPECT_EQ(ct.c0, b);
  EXPECT_EQ(ct.c1, neg_a);
  EXPECT_EQ(ct.c0.domain(), Domain::kCoefficient);
  EXPECT_EQ(ct.c1.domain(), Domain::kNtt);
}

TEST_F(BfvTest, MaskReuseIsRejected) {
  std::mt19937_64 rng(1);
  EncryptionMask mask = PrepareMask(sk_, SeedFromInteger(6));
  const PlaintextPoly m = RandomPlaintext(rng);
  EXPECT_NO_THROW(Encrypt(m, mask));
  EXPECT_TRUE(mask.consumed());
  EXPECT_THROW(Encrypt(m, mask), MaskReuseError);
}

TEST_F(BfvTest, PlaintextOutOfRangeIsRejected) {
  EncryptionMask mask = PrepareMask(sk_, SeedFromInteger(7));
  PlaintextPoly m{{ctx_->t()}};
  EXPECT_THROW(Encrypt(m, mask), ContractViolation);
  EXPECT_FALSE(mask.consumed());
}

TEST_F(BfvTest, RoundTrip) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const PlaintextPoly m = RandomPlaintext(rng);
    ASSERT_EQ(Decrypt(Fresh(m, 10000 + trial), sk_), m);
  }
}

TEST_F(BfvTest, SumOfTwoDecryptsToPlaintextSum) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const PlaintextPoly m1 = RandomPlaintext(rng), m2 = RandomPlaintext(rng);
    const std::vector<Ciphertext> cts = {Fresh(m1, 2 * trial), Fresh(m2, 2 * trial + 1)};
    PlaintextPoly expected;
    for (std::size_t j = 0; j < ctx_->n(); ++j) {
      expected.coeffs.push_back((m1.coeffs[j] + m2.coeffs[j]) % ctx_->t());
    }
    ASSERT_EQ(Decrypt(AddCiphertexts(cts), sk_), expected);
  }
}

TEST_F(BfvTest, FiveWaySumDecryptsToIntegerSumModT) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Ciphertext> cts;
    std::vector<std::uint64_t> sum(ctx_->n(), 0);
    for (int i = 0; i < 5; ++i) {
      const PlaintextPoly m = RandomPlaintext(rng);
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += m.coeffs[j];
      cts.push_back(Fresh(m, 100 * trial + i));
    }
    for (auto& s : sum) s %= ctx_->t();
    ASSERT_EQ(Decrypt(AddCiphertexts(cts), sk_).coeffs, sum);
  }
}

TEST_F(BfvTest, AdditionIsOrderIndependentAndSingletonIsIdentity) {
  std::mt19937_64 rng(5);
  std::vector<Ciphertext> cts;
  for (int i = 0; i < 4; ++i) cts.push_back(Fresh(RandomPlaintext(rng), 500 + i));
  EXPECT_EQ(AddCiphertexts(std::span(cts.data(), 1)), cts[0]);
  const Ciphertext forward = AddCiphertexts(cts);
  std::vector<Ciphertext> shuffled = {cts[2], cts[0], cts[3], cts[1]};
  EXPECT_EQ(AddCiphertexts(shuffled), forward);
}

TEST_F(BfvTest, AdditionRejectsMismatchedTags) {
  std::mt19937_64 rng(6);
  EncryptionMask m1 = PrepareMask(sk_, SeedFromInteger(601));
  EncryptionMask m2 = PrepareMask(sk_, SeedFromInteger(602));
  std::vector<Ciphertext> cts = {Encrypt(RandomPlaintext(rng), m1, 1, 0),
                                 Encrypt(RandomPlaintext(rng), m2, 2, 0)};
  EXPECT_THROW(AddCiphertexts(cts), ContractViolation);
  cts[1].round_tag = 1;
  cts[1].index = 3;
  EXPECT_THROW(AddCiphertexts(cts), ContractViolation);
  EXPECT_THROW(AddCiphertexts(std::span<const Ciphertext>()), ContractViolation);
}

TEST_F(BfvTest, WrongKeyDoesNotDecrypt) {
  std::mt19937_64 rng(7);
  const PlaintextPoly m = RandomPlaintext(rng);
  const SecretKey other = KeyGen(ctx_, SeedFromInteger(1));
  EXPECT_NE(Decrypt(Fresh(m, 700), other), m);
}

// Decrypting with c1 carried in the coefficient domain and multiplied by s
// with a schoolbook product gives the same plaintext as the NTT-resident path.
TEST_F(BfvTest, MixedDomainMatchesCoefficientReference) {
  std::mt19937_64 rng(8);
  std::vector<Ciphertext> cts;
  std::vector<PlaintextPoly> ms;
  for (int i = 0; i < 3; ++i) {
    ms.push_back(RandomPlaintext(rng));
    cts.push_back(Fresh(ms.back(), 800 + i));
  }
  const Ciphertext sum = AddCiphertexts(cts);
  const Polynomial c1_coeff = NttInverse(sum.c1);
  std::vector<std::uint64_t> residues;
  for (std::size_t l = 0; l < ctx_->limb_count(); ++l) {
    const std::uint64_t p = ctx_->limb(l).value();
    std::vector<std::uint64_t> c1v(c1_coeff.limb(l).begin(), c1_coeff.limb(l).end());
    std::vector<std::uint64_t> sv(sk_.s.limb(l).begin(), sk_.s.limb(l).end());
    auto prod = oracle::NegacyclicConvolution(c1v, sv, p);
    for (std::size_t j = 0; j < ctx_->n(); ++j) residues.push_back((prod[j] + sum.c0.limb(l)[j]) % p);
  }
  const Polynomial v = Polynomial::FromResidues(ctx_, Domain::kCoefficient, residues);
  EXPECT_EQ(v, DecryptionPhase(sum, sk_));
  const PlaintextPoly reference{ScaleRoundModT(CrtReconstruct(v), *ctx_)};
  EXPECT_EQ(reference, Decrypt(sum, sk_));
}

TEST_F(BfvTest, NoiseMarginFreshAndZeroNoise) {
  std::mt19937_64 rng(9);
  const double half_delta_bits = std::log2(ctx_->delta().convert_to<double>()) - 1;
  const PlaintextPoly m = RandomPlaintext(rng);
  const Ciphertext ct = Fresh(m, 900);
  const double fresh = NoiseMargin(ct, m, sk_);
  EXPECT_GT(fresh, 50.0);
  // Fresh noise is e itself: at most 19 in magnitude.
  EXPECT_GE(fresh, half_delta_bits - std::log2(19.0) - 1e-9);

  const SecretKey zero = SecretKey::FromPolynomial(Polynomial::Zero(ctx_, Domain::kCoefficient));
  EncryptionMask mask = EncryptionMask::FromComponents(
      zero, SampleUniform(SeedFromInteger(3), ctx_), Polynomial::Zero(ctx_, Domain::kCoefficient));
  const Ciphertext clean = Encrypt(m, mask);
  EXPECT_DOUBLE_EQ(NoiseMargin(clean, m, zero), half_delta_bits);
}

TEST_F(BfvTest, NoiseMarginShrinksByAtMostLog2FiveOverFiveWaySum) {
  // Plaintexts below t/5 so the sum does not wrap mod t; the noise is then
  // exactly the sum of the five error polynomials.
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Ciphertext> cts;
    std::vector<PlaintextPoly> ms;
    PlaintextPoly total{std::vector<std::uint64_t>(ctx_->n(), 0)};
    double worst_single = 1e9;
    for (int i = 0; i < 5; ++i) {
      ms.push_back(RandomPlaintext(rng, ctx_->t() / 5));
      cts.push_back(Fresh(ms.back(), 1000 * trial + i));
      worst_single = std::min(worst_single, NoiseMargin(cts.back(), ms.back(), sk_));
      for (std::size_t j = 0; j < ctx_->n(); ++j) total.coeffs[j] += ms.back().coeffs[j];
    }
    const double summed = NoiseMargin(AddCiphertexts(cts), total, sk_);
    ASSERT_GE(summed, worst_single - std::log2(5.0) - 1e-9);
  }
}

}  // namespace
}  // namespace fedbit
