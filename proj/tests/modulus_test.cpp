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

#include "fedbit/modulus.hpp"

#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace fedbit {
namespace {

const std::uint64_t kDefaultPrimes[] = {18014398509506561ULL, 18014398509998081ULL};

TEST(ModulusTest, GeneratesSmallestNttPrimesAbove2To54) {
  const auto primes = GenerateNttPrimes(4096, 2, 54);
  ASSERT_EQ(primes.size(), 2u);
  EXPECT_EQ(primes[0], kDefaultPrimes[0]);
  EXPECT_EQ(primes[1], kDefaultPrimes[1]);
  for (auto p : primes) {
    EXPECT_GT(p, std::uint64_t{1} << 54);
    EXPECT_EQ(p % 8192, 1u);
  }
}

TEST(ModulusTest, RejectsBadValues) {
  EXPECT_THROW(Modulus::Create(65536, 8), ContractViolation);   // composite
  EXPECT_THROW(Modulus::Create(65537, 6), ContractViolation);   // N not 2^k
  EXPECT_THROW(Modulus::Create(97, 64), ContractViolation);     // 97 != 1 mod 128
  EXPECT_THROW(Modulus::Create(1, 8), ContractViolation);
  EXPECT_NO_THROW(Modulus::Create(65537, 8));
}

TEST(ModulusTest, IsPrimeMatchesTrialDivision) {
  for (std::uint64_t n = 0; n < 5000; ++n) {
    bool prime = n >= 2;
    for (std::uint64_t d = 2; d * d <= n; ++d) {
      if (n % d == 0) {
        prime = false;
        break;
      }
    }
    EXPECT_EQ(IsPrime(n), prime) << n;
  }
  EXPECT_TRUE(IsPrime(2281701377ULL));
  EXPECT_FALSE(IsPrime(3215031751ULL));  // strong pseudoprime to bases 2, 3, 5, 7
}

TEST(ModulusTest, TwoNRootHasExactOrderAndIsMinimal) {
  for (std::size_t n : {4u, 8u, 16u}) {
    const Modulus m = Modulus::Create(65537, n);
    const std::uint64_t r = m.two_n_root();
    EXPECT_EQ(oracle::PowMod(r, 2 * n, 65537), 1u);
    EXPECT_EQ(oracle::PowMod(r, n, 65537), 65536u);
    EXPECT_EQ(r, oracle::MinimalPrimitiveRoot(2 * n, 65537)) << n;
  }
  const Modulus big = Modulus::Create(kDefaultPrimes[0], 4096);
  EXPECT_EQ(oracle::PowMod(big.two_n_root(), 4096, kDefaultPrimes[0]), kDefaultPrimes[0] - 1);
}

TEST(ModulusTest, MulModEdgeCases) {
  for (std::uint64_t p : {std::uint64_t{65537}, kDefaultPrimes[0], kDefaultPrimes[1]}) {
    const Modulus m = Modulus::Create(p, 8);
    EXPECT_EQ(MulMod(0, p - 5, m), 0u);
    EXPECT_EQ(MulMod(1, p - 5, m), p - 5);
    EXPECT_EQ(MulMod(p - 1, p - 1, m), 1u);
  }
}

TEST(ModulusTest, BarrettAgreesWithWideDivision) {
  std::mt19937_64 rng(7);
  for (std::uint64_t p : {std::uint64_t{65537}, std::uint64_t{114689}, kDefaultPrimes[0],
                          kDefaultPrimes[1], std::uint64_t{4611686018427322369ULL}}) {
    const Modulus m = Modulus::Create(p, 8);
    for (int i = 0; i < 20000; ++i) {
      const std::uint64_t a = rng() % p, b = rng() % p;
      ASSERT_EQ(MulMod(a, b, m), oracle::MulMod(a, b, p));
      const ShoupOperand w(b, m);
      ASSERT_EQ(w.MulMod(a, m), oracle::MulMod(a, b, p));
      const std::uint64_t x = rng();
      ASSERT_EQ(m.Reduce(x), x % p);
    }
  }
}

TEST(ModulusTest, InverseAndPow) {
  const Modulus m = Modulus::Create(kDefaultPrimes[1], 4096);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t a = 1 + rng() % (m.value() - 1);
    EXPECT_EQ(MulMod(a, InvMod(a, m), m), 1u);
    const std::uint64_t e = rng() % 1000;
    EXPECT_EQ(PowMod(a, e, m), oracle::PowMod(a, e, m.value()));
  }
  EXPECT_THROW(InvMod(0, m), ContractViolation);
}

}  // namespace
}  // namespace fedbit
