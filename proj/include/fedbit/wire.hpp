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

// Binary wire format. Little-endian throughout.
//
//   frame       := "FBT1" tag:u8 payload_len:u64 payload
//   polynomial  := domain:u8 (limbs x N residues, u64 each)
//   ciphertext  := c0 polynomial, c1 polynomial
//
//   tag 1 EncryptedUpdate    client_id:u64 round:u64 count:u32 ciphertext*
//                            (lo:f64 hi:f64)*   one pair per layer
//   tag 2 AggregateBroadcast round:u64 participants:u32 count:u32 ciphertext*
//                            (lo:f64 hi:f64)*
//   tag 3 ModelInit          round:u64 layers:u32 (count:u64 f64*)*
//   tag 4 Abort              round:u64 len:u32 utf8 reason
//
// The number of (lo, hi) pairs is implied by the bytes left in the payload.

#ifndef FEDBIT_WIRE_HPP_
#define FEDBIT_WIRE_HPP_

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <type_traits>
#include <string>
#include <variant>
#include <vector>

#include "fedbit/bfv.hpp"
#include "fedbit/common.hpp"
#include "fedbit/ring.hpp"

namespace fedbit {

// Per-layer weights of a model, in schema order.
using Model = std::vector<std::vector<double>>;

struct LayerRange {
  double lo = 0;
  double hi = 0;
  friend bool operator==(const LayerRange&, const LayerRange&) = default;
};

struct EncryptedUpdate {
  std::uint64_t client_id = 0;
  std::uint64_t round = 0;
  std::vector<Ciphertext> cts;
  std::vector<LayerRange> quant_meta;
  friend bool operator==(const EncryptedUpdate&, const EncryptedUpdate&) = default;
};

struct AggregateBroadcast {
  std::uint64_t round = 0;
  std::uint32_t participants = 0;
  std::vector<Ciphertext> cts;
  std::vector<LayerRange> quant_meta;
  friend bool operator==(const AggregateBroadcast&, const AggregateBroadcast&) = default;
};

struct ModelInit {
  std::uint64_t round = 0;
  Model weights;
  friend bool operator==(const ModelInit&, const ModelInit&) = default;
};

struct Abort {
  std::uint64_t round = 0;
  std::string reason;
  friend bool operator==(const Abort&, const Abort&) = default;
};

using Message = std::variant<EncryptedUpdate, AggregateBroadcast, ModelInit, Abort>;

enum class MessageTag : std::uint8_t {
  kEncryptedUpdate = 1,
  kAggregateBroadcast = 2,
  kModelInit = 3,
  kAbort = 4,
};

inline constexpr std::array<std::uint8_t, 4> kWireMagic = {'F', 'B', 'T', '1'};
inline constexpr std::size_t kFrameHeaderBytes = 4 + 1 + 8;

// Analytic sizes, from the layout above.
inline std::size_t PolynomialWireBytes(const RingContext& ctx) {
  return 1 + ctx.limb_count() * ctx.n() * 8;
}
inline std::size_t CiphertextWireBytes(const RingContext& ctx) {
  return 2 * PolynomialWireBytes(ctx);
}
inline std::size_t EncryptedUpdateWireBytes(std::size_t ciphertexts, std::size_t layers,
                                            const RingContext& ctx) {
  return kFrameHeaderBytes + 8 + 8 + 4 + ciphertexts * CiphertextWireBytes(ctx) + 16 * layers;
}
inline std::size_t AggregateBroadcastWireBytes(std::size_t ciphertexts, std::size_t layers,
                                               const RingContext& ctx) {
  return kFrameHeaderBytes + 8 + 4 + 4 + ciphertexts * CiphertextWireBytes(ctx) + 16 * layers;
}

namespace detail {

class WireWriter {
 public:
  explicit WireWriter(std::size_t reserve = 0) { bytes_.reserve(reserve); }

  void U8(std::uint8_t v) { bytes_.push_back(v); }
  void U32(std::uint32_t v) { Int(v, 4); }
  void U64(std::uint64_t v) { Int(v, 8); }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }
  void Bytes(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }

  void Poly(const Polynomial& p) {
    U8(static_cast<std::uint8_t>(p.domain()));
    const std::size_t at = bytes_.size();
    bytes_.resize(at + p.residues().size() * 8);
    std::uint8_t* out = bytes_.data() + at;
    for (std::uint64_t r : p.residues()) {
      for (int i = 0; i < 8; ++i) *out++ = static_cast<std::uint8_t>(r >> (8 * i));
    }
  }

  std::vector<std::uint8_t> Take() { return std::move(bytes_); }
  std::size_t size() const { return bytes_.size(); }

  void PatchU64(std::size_t at, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }

 private:
  void Int(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class WireReader {
 public:
  WireReader(std::span<const std::uint8_t> bytes, std::size_t pos, std::size_t end)
      : bytes_(bytes), pos_(pos), end_(end) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return end_ - pos_; }

  void Need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw DecodeError(pos_, std::string("truncated ") + what + ": need " + std::to_string(n) +
                                  " bytes, have " + std::to_string(remaining()));
    }
  }

  std::uint8_t U8(const char* what) {
    Need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t U32(const char* what) { return static_cast<std::uint32_t>(Int(4, what)); }
  std::uint64_t U64(const char* what) { return Int(8, what); }
  double F64(const char* what) { return std::bit_cast<double>(U64(what)); }

  Polynomial Poly(const RingContextPtr& ctx, Domain expected, const char* what) {
    const std::size_t flag_at = pos_;
    const std::uint8_t flag = U8(what);
    if (flag > 1) throw DecodeError(flag_at, std::string("bad domain flag in ") + what);
    if (static_cast<Domain>(flag) != expected) {
      throw DecodeError(flag_at, std::string(what) + " must be in " + DomainName(expected) +
                                     " domain");
    }
    const std::size_t count = ctx->limb_count() * ctx->n();
    Need(count * 8, what);
    std::vector<std::uint64_t> residues(count);
    for (std::size_t l = 0; l < ctx->limb_count(); ++l) {
      const std::uint64_t mv = ctx->limb(l).value();
      for (std::size_t j = 0; j < ctx->n(); ++j) {
        const std::size_t at = pos_;
        const std::uint64_t r = Int(8, what);
        if (r >= mv) {
          throw DecodeError(at, "residue " + std::to_string(r) + " >= limb modulus " +
                                    std::to_string(mv));
        }
        residues[l * ctx->n() + j] = r;
      }
    }
    return Polynomial::FromResidues(ctx, expected, std::move(residues));
  }

 private:
  std::uint64_t Int(int n, const char* what) {
    Need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += n;
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
  std::size_t end_;
};

inline std::size_t BeginFrame(WireWriter& w, MessageTag tag) {
  w.Bytes(kWireMagic);
  w.U8(static_cast<std::uint8_t>(tag));
  const std::size_t len_at = w.size();
  w.U64(0);
  return len_at;
}

inline void EndFrame(WireWriter& w, std::size_t len_at) {
  w.PatchU64(len_at, w.size() - kFrameHeaderBytes);
}

inline void PutCiphertexts(WireWriter& w, const std::vector<Ciphertext>& cts) {
  if (cts.size() > 0xffffffffULL) throw ContractViolation("too many ciphertexts");
  w.U32(static_cast<std::uint32_t>(cts.size()));
  for (const auto& ct : cts) {
    w.Poly(ct.c0);
    w.Poly(ct.c1);
  }
}

inline std::vector<Ciphertext> GetCiphertexts(WireReader& r, const RingContextPtr& ctx,
                                              std::uint64_t round) {
  const std::uint32_t count = r.U32("ciphertext count");
  const std::size_t each = CiphertextWireBytes(*ctx);
  if (static_cast<std::size_t>(count) * each > r.remaining()) {
    throw DecodeError(r.pos() - 4, "ciphertext count " + std::to_string(count) +
                                       " exceeds payload");
  }
  std::vector<Ciphertext> cts;
  cts.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Ciphertext ct;
    ct.c0 = r.Poly(ctx, Domain::kCoefficient, "c0");
    ct.c1 = r.Poly(ctx, Domain::kNtt, "c1");
    ct.round_tag = round;
    ct.index = i;
    cts.push_back(std::move(ct));
  }
  return cts;
}

inline void PutRanges(WireWriter& w, const std::vector<LayerRange>& ranges) {
  for (const auto& q : ranges) {
    w.F64(q.lo);
    w.F64(q.hi);
  }
}

inline std::vector<LayerRange> GetRanges(WireReader& r) {
  if (r.remaining() % 16 != 0) {
    throw DecodeError(r.pos(), "quantization metadata is not a whole number of (lo, hi) pairs");
  }
  std::vector<LayerRange> out(r.remaining() / 16);
  for (auto& q : out) {
    q.lo = r.F64("quant lo");
    q.hi = r.F64("quant hi");
  }
  return out;
}

}  // namespace detail

inline std::vector<std::uint8_t> EncodeMessage(const Message& msg) {
  detail::WireWriter w;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, EncryptedUpdate>) {
          const auto at = detail::BeginFrame(w, MessageTag::kEncryptedUpdate);
          w.U64(m.client_id);
          w.U64(m.round);
          detail::PutCiphertexts(w, m.cts);
          detail::PutRanges(w, m.quant_meta);
          detail::EndFrame(w, at);
        } else if constexpr (std::is_same_v<T, AggregateBroadcast>) {
          const auto at = detail::BeginFrame(w, MessageTag::kAggregateBroadcast);
          w.U64(m.round);
          w.U32(m.participants);
          detail::PutCiphertexts(w, m.cts);
          detail::PutRanges(w, m.quant_meta);
          detail::EndFrame(w, at);
        } else if constexpr (std::is_same_v<T, ModelInit>) {
          const auto at = detail::BeginFrame(w, MessageTag::kModelInit);
          w.U64(m.round);
          w.U32(static_cast<std::uint32_t>(m.weights.size()));
          for (const auto& layer : m.weights) {
            w.U64(layer.size());
            for (double x : layer) w.F64(x);
          }
          detail::EndFrame(w, at);
        } else {
          const auto at = detail::BeginFrame(w, MessageTag::kAbort);
          w.U64(m.round);
          w.U32(static_cast<std::uint32_t>(m.reason.size()));
          w.Bytes(std::span(reinterpret_cast<const std::uint8_t*>(m.reason.data()),
                            m.reason.size()));
          detail::EndFrame(w, at);
        }
      },
      msg);
  return w.Take();
}

// Total frame length announced by a header, or nullopt if `header` is
// shorter than a header. Throws DecodeError on bad magic.
inline std::optional<std::size_t> FrameLength(std::span<const std::uint8_t> header) {
  if (header.size() < kFrameHeaderBytes) return std::nullopt;
  for (std::size_t i = 0; i < kWireMagic.size(); ++i) {
    if (header[i] != kWireMagic[i]) throw DecodeError(i, "bad magic (expected FBT1)");
  }
  std::uint64_t len = 0;
  for (int i = 7; i >= 0; --i) len = (len << 8) | header[5 + i];
  if (len > (std::uint64_t{1} << 40)) throw DecodeError(5, "implausible payload length");
  return kFrameHeaderBytes + static_cast<std::size_t>(len);
}

inline Message DecodeMessage(std::span<const std::uint8_t> bytes, const RingContextPtr& ctx) {
  if (bytes.size() < kFrameHeaderBytes) {
    throw DecodeError(bytes.size(), "truncated frame header");
  }
  const std::size_t total = *FrameLength(bytes);
  const std::uint8_t tag = bytes[4];
  if (tag < 1 || tag > 4) throw DecodeError(4, "unknown message tag " + std::to_string(tag));
  if (bytes.size() < total) {
    throw DecodeError(bytes.size(), "truncated payload: header announces " +
                                        std::to_string(total - kFrameHeaderBytes) + " bytes");
  }
  if (bytes.size() > total) throw DecodeError(total, "trailing bytes after frame");

  detail::WireReader r(bytes, kFrameHeaderBytes, total);
  switch (static_cast<MessageTag>(tag)) {
    case MessageTag::kEncryptedUpdate: {
      EncryptedUpdate m;
      m.client_id = r.U64("client id");
      m.round = r.U64("round");
      m.cts = detail::GetCiphertexts(r, ctx, m.round);
      m.quant_meta = detail::GetRanges(r);
      return m;
    }
    case MessageTag::kAggregateBroadcast: {
      AggregateBroadcast m;
      m.round = r.U64("round");
      m.participants = r.U32("participants");
      m.cts = detail::GetCiphertexts(r, ctx, m.round);
      m.quant_meta = detail::GetRanges(r);
      return m;
    }
    case MessageTag::kModelInit: {
      ModelInit m;
      m.round = r.U64("round");
      const std::uint32_t layers = r.U32("layer count");
      for (std::uint32_t l = 0; l < layers; ++l) {
        const std::size_t at = r.pos();
        const std::uint64_t count = r.U64("layer size");
        if (count > r.remaining() / 8) throw DecodeError(at, "layer size exceeds payload");
        std::vector<double> layer(count);
        for (auto& x : layer) x = r.F64("weight");
        m.weights.push_back(std::move(layer));
      }
      if (r.remaining() != 0) throw DecodeError(r.pos(), "trailing bytes in model init");
      return m;
    }
    case MessageTag::kAbort: {
      Abort m;
      m.round = r.U64("round");
      const std::size_t at = r.pos();
      const std::uint32_t len = r.U32("reason length");
      if (len != r.remaining()) throw DecodeError(at, "reason length does not match payload");
      m.reason.assign(reinterpret_cast<const char*>(bytes.data() + r.pos()), len);
      return m;
    }
  }
  throw DecodeError(4, "unknown message tag");
}

}  // namespace fedbit

#endif  // FEDBIT_WIRE_HPP_
