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

#include "fedbit/wire.hpp"

#include <cstring>
#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace fedbit {
namespace {

class WireTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ctx_ = RingContext::CreateDefault(64, 2, kDefaultPlainModulus, SecurityLevel::kNone);
    sk_ = KeyGen(ctx_, SeedFromInteger(3));
  }

  Ciphertext RandomCiphertext(std::mt19937_64& rng, std::uint64_t round, std::uint32_t index) {
    PlaintextPoly m;
    for (std::size_t i = 0; i < ctx_->n(); ++i) m.coeffs.push_back(rng() % ctx_->t());
    EncryptionMask mask = PrepareMask(sk_, SeedFromInteger(rng()));
    return Encrypt(m, mask, round, index);
  }

  std::vector<LayerRange> RandomRanges(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> d(-3, 3);
    std::vector<LayerRange> out(n);
    for (auto& r : out) {
      r.lo = d(rng);
      r.hi = r.lo + std::abs(d(rng));
    }
    return out;
  }

  EncryptedUpdate RandomUpdate(std::mt19937_64& rng, std::size_t cts, std::size_t layers) {
    EncryptedUpdate u;
    u.client_id = rng() % 100;
    u.round = rng() % 1000;
    for (std::size_t i = 0; i < cts; ++i) {
      u.cts.push_back(RandomCiphertext(rng, u.round, static_cast<std::uint32_t>(i)));
    }
    u.quant_meta = RandomRanges(rng, layers);
    return u;
  }

  RingContextPtr ctx_;
  SecretKey sk_;
};

TEST_F(WireTest, EncryptedUpdateRoundTripFuzz) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cts = 1 + rng() % 4;
    const std::size_t layers = rng() % 4;
    const EncryptedUpdate u = RandomUpdate(rng, cts, layers);
    const auto bytes = EncodeMessage(u);
    ASSERT_EQ(bytes.size(), EncryptedUpdateWireBytes(cts, layers, *ctx_));
    const Message back = DecodeMessage(bytes, ctx_);
    ASSERT_TRUE(std::holds_alternative<EncryptedUpdate>(back));
    EXPECT_EQ(std::get<EncryptedUpdate>(back), u);
  }
}

TEST_F(WireTest, BroadcastModelInitAbortRoundTrip) {
  std::mt19937_64 rng(12);
  AggregateBroadcast b;
  b.round = 7;
  b.participants = 5;
  for (std::uint32_t i = 0; i < 3; ++i) b.cts.push_back(RandomCiphertext(rng, 7, i));
  b.quant_meta = RandomRanges(rng, 2);
  const auto bb = EncodeMessage(b);
  EXPECT_EQ(bb.size(), AggregateBroadcastWireBytes(3, 2, *ctx_));
  EXPECT_EQ(std::get<AggregateBroadcast>(DecodeMessage(bb, ctx_)), b);

  ModelInit init{0, {{1.5, -2.25, 0.0}, {}, {3.0}}};
  EXPECT_EQ(std::get<ModelInit>(DecodeMessage(EncodeMessage(init), ctx_)), init);

  Abort abort{4, "timed out waiting for client 3"};
  EXPECT_EQ(std::get<Abort>(DecodeMessage(EncodeMessage(abort), ctx_)), abort);
}

TEST_F(WireTest, HeaderLayout) {
  const auto bytes = EncodeMessage(Abort{1, "x"});
  ASSERT_GE(bytes.size(), kFrameHeaderBytes);
  EXPECT_EQ(std::memcmp(bytes.data(), "FBT1", 4), 0);
  EXPECT_EQ(bytes[4], static_cast<std::uint8_t>(MessageTag::kAbort));
  std::uint64_t len = 0;
  for (int i = 7; i >= 0; --i) len = (len << 8) | bytes[5 + i];
  EXPECT_EQ(len, bytes.size() - kFrameHeaderBytes);
  EXPECT_EQ(FrameLength(bytes), bytes.size());
}

TEST_F(WireTest, EveryTruncationIsRejected) {
  std::mt19937_64 rng(13);
  const auto bytes = EncodeMessage(RandomUpdate(rng, 1, 1));
  for (std::size_t cut = 0; cut < bytes.size(); cut += 97) {
    std::vector<std::uint8_t> shorter(bytes.begin(), bytes.begin() + cut);
    EXPECT_THROW(DecodeMessage(shorter, ctx_), DecodeError) << cut;
  }
  std::vector<std::uint8_t> one_short(bytes.begin(), bytes.end() - 1);
  EXPECT_THROW(DecodeMessage(one_short, ctx_), DecodeError);
  std::vector<std::uint8_t> one_long = bytes;
  one_long.push_back(0);
  EXPECT_THROW(DecodeMessage(one_long, ctx_), DecodeError);
}

TEST_F(WireTest, CorruptionReportsOffset) {
  std::mt19937_64 rng(14);
  const auto good = EncodeMessage(RandomUpdate(rng, 2, 1));

  auto bad_magic = good;
  bad_magic[2] = 'X';
  try {
    DecodeMessage(bad_magic, ctx_);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.offset(), 2u);
  }

  auto bad_tag = good;
  bad_tag[4] = 9;
  try {
    DecodeMessage(bad_tag, ctx_);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }

  // header, client id, round, count, then c0's domain flag
  const std::size_t flag_at = kFrameHeaderBytes + 8 + 8 + 4;
  auto bad_flag = good;
  bad_flag[flag_at] = 1;
  try {
    DecodeMessage(bad_flag, ctx_);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.offset(), flag_at);
  }

  // First residue of c0 set to the limb modulus itself.
  const std::size_t res_at = flag_at + 1;
  auto bad_residue = good;
  const std::uint64_t q0 = ctx_->limb(0).value();
  for (int i = 0; i < 8; ++i) bad_residue[res_at + i] = static_cast<std::uint8_t>(q0 >> (8 * i));
  try {
    DecodeMessage(bad_residue, ctx_);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.offset(), res_at);
  }
}

TEST_F(WireTest, DefaultRingSizes) {
  const auto ctx = RingContext::CreateDefault();
  EXPECT_EQ(CiphertextWireBytes(*ctx), 2u * (1 + 2 * 4096 * 8));
  EXPECT_EQ(EncryptedUpdateWireBytes(8, 1, *ctx), 13u + 20 + 8 * 131074 + 16);
}

}  // namespace
}  // namespace fedbit
