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

#ifndef FEDBIT_COMMON_HPP_
#define FEDBIT_COMMON_HPP_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace fedbit {

// Arbitrary-precision integer used for q, Delta and CRT-reconstructed
// coefficients.
using BigInt = boost::multiprecision::cpp_int;

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke an operation's precondition (domain or context mismatch,
// out-of-range argument).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// An EncryptionMask was offered for a second encryption.
class MaskReuseError : public Error {
 public:
  using Error::Error;
};

// No packing layout satisfies both aggregation bounds.
class InfeasibleLayout : public Error {
 public:
  using Error::Error;
};

// Wire bytes could not be decoded. offset() is the byte position at which
// decoding failed.
class DecodeError : public Error {
 public:
  DecodeError(std::size_t offset, const std::string& what)
      : Error("decode error at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A round could not complete (missing updates, timeout, peer abort).
class RoundAbort : public Error {
 public:
  RoundAbort(std::uint64_t round, const std::string& what)
      : Error("round " + std::to_string(round) + " aborted: " + what),
        round_(round) {}
  std::uint64_t round() const { return round_; }

 private:
  std::uint64_t round_;
};

// Decrypted or received data is inconsistent (field wraparound, metadata
// mismatch).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedbit

#endif  // FEDBIT_COMMON_HPP_
