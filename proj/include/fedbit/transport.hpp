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

// Star-topology message transports between one server and N clients, plus
// byte accounting.

#ifndef FEDBIT_TRANSPORT_HPP_
#define FEDBIT_TRANSPORT_HPP_

#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fedbit/common.hpp"
#include "fedbit/wire.hpp"

namespace fedbit {

using PartyId = std::uint64_t;
inline constexpr PartyId kServerId = ~PartyId{0};

struct Envelope {
  PartyId from = 0;
  std::vector<std::uint8_t> frame;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void Send(PartyId from, PartyId to, std::vector<std::uint8_t> frame) = 0;
  virtual std::optional<Envelope> Receive(PartyId at, std::chrono::milliseconds timeout) = 0;
};

// Blocking FIFO with timed pop.
class Mailbox {
 public:
  void Push(Envelope e) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(std::move(e));
    }
    cv_.notify_one();
  }

  std::optional<Envelope> Pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) return std::nullopt;
    Envelope e = std::move(queue_.front());
    queue_.pop_front();
    return e;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return queue_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Envelope> queue_;
};

// In-process queues; deterministic and allocation-only.
class InMemoryTransport : public Transport {
 public:
  explicit InMemoryTransport(std::size_t clients) : client_boxes_(clients) {}

  void Send(PartyId from, PartyId to, std::vector<std::uint8_t> frame) override {
    Box(to).Push(Envelope{from, std::move(frame)});
  }

  std::optional<Envelope> Receive(PartyId at, std::chrono::milliseconds timeout) override {
    return Box(at).Pop(timeout);
  }

 private:
  Mailbox& Box(PartyId id) {
    if (id == kServerId) return server_box_;
    if (id >= client_boxes_.size()) throw ContractViolation("unknown party " + std::to_string(id));
    return client_boxes_[id];
  }

  Mailbox server_box_;
  std::vector<Mailbox> client_boxes_;
};

// One AF_UNIX stream socket pair per client. Frames are written whole and
// re-assembled on the far side from the length in the frame header by a
// reader thread per socket end.
class SocketTransport : public Transport {
 public:
  explicit SocketTransport(std::size_t clients) : links_(clients), client_boxes_(clients) {
    for (std::size_t i = 0; i < clients; ++i) {
      int fds[2];
      if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
        Shutdown();
        throw Error(std::string("socketpair failed: ") + std::strerror(errno));
      }
      links_[i].server_fd = fds[0];
      links_[i].client_fd = fds[1];
    }
    for (std::size_t i = 0; i < clients; ++i) {
      readers_.emplace_back([this, i] { ReadLoop(links_[i].server_fd, i, server_box_); });
      readers_.emplace_back(
          [this, i] { ReadLoop(links_[i].client_fd, kServerId, client_boxes_[i]); });
    }
  }

  ~SocketTransport() override { Shutdown(); }

  SocketTransport(const SocketTransport&) = delete;
  SocketTransport& operator=(const SocketTransport&) = delete;

  void Send(PartyId from, PartyId to, std::vector<std::uint8_t> frame) override {
    Link* link = nullptr;
    int fd = -1;
    if (from == kServerId) {
      link = &LinkFor(to);
      fd = link->server_fd;
    } else {
      if (to != kServerId) throw ContractViolation("clients may only send to the server");
      link = &LinkFor(from);
      fd = link->client_fd;
    }
    std::lock_guard lock(from == kServerId ? link->server_write_mu : link->client_write_mu);
    std::size_t off = 0;
    while (off < frame.size()) {
      const ssize_t n = ::send(fd, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(std::string("socket send failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::optional<Envelope> Receive(PartyId at, std::chrono::milliseconds timeout) override {
    if (at == kServerId) return server_box_.Pop(timeout);
    if (at >= client_boxes_.size()) throw ContractViolation("unknown party " + std::to_string(at));
    return client_boxes_[at].Pop(timeout);
  }

 private:
  struct Link {
    int server_fd = -1;
    int client_fd = -1;
    std::mutex server_write_mu;
    std::mutex client_write_mu;
  };

  Link& LinkFor(PartyId client) {
    if (client >= links_.size()) throw ContractViolation("unknown party " + std::to_string(client));
    return links_[client];
  }

  static bool ReadExact(int fd, std::uint8_t* out, std::size_t len) {
    std::size_t got = 0;
    while (got < len) {
      const ssize_t n = ::recv(fd, out + got, len - got, 0);
      if (n == 0) return false;
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      got += static_cast<std::size_t>(n);
    }
    return true;
  }

  void ReadLoop(int fd, PartyId from, Mailbox& box) {
    for (;;) {
      std::vector<std::uint8_t> frame(kFrameHeaderBytes);
      if (!ReadExact(fd, frame.data(), frame.size())) return;
      std::size_t total = 0;
      try {
        total = *FrameLength(frame);
      } catch (const DecodeError&) {
        return;  // stream is desynchronized; drop the link
      }
      frame.resize(total);
      if (!ReadExact(fd, frame.data() + kFrameHeaderBytes, total - kFrameHeaderBytes)) return;
      box.Push(Envelope{from, std::move(frame)});
    }
  }

  void Shutdown() {
    if (closed_.exchange(true)) return;
    for (auto& l : links_) {
      if (l.server_fd >= 0) ::shutdown(l.server_fd, SHUT_RDWR);
      if (l.client_fd >= 0) ::shutdown(l.client_fd, SHUT_RDWR);
    }
    for (auto& t : readers_) {
      if (t.joinable()) t.join();
    }
    for (auto& l : links_) {
      if (l.server_fd >= 0) ::close(l.server_fd);
      if (l.client_fd >= 0) ::close(l.client_fd);
      l.server_fd = l.client_fd = -1;
    }
  }

  std::vector<Link> links_;
  Mailbox server_box_;
  std::vector<Mailbox> client_boxes_;
  std::vector<std::thread> readers_;
  std::atomic<bool> closed_{false};
};

// Upload (client -> server) and download (server -> client) byte counts per
// round and client.
class TrafficLedger {
 public:
  struct Counts {
    std::uint64_t upload = 0;
    std::uint64_t download = 0;
    friend bool operator==(const Counts&, const Counts&) = default;
  };

  void Record(std::uint64_t round, PartyId from, PartyId to, std::uint64_t bytes) {
    std::lock_guard lock(mu_);
    if (from == kServerId) {
      rounds_[round][to].download += bytes;
      total_.download += bytes;
    } else {
      rounds_[round][from].upload += bytes;
      total_.upload += bytes;
    }
  }

  Counts ForClient(std::uint64_t round, PartyId client) const {
    std::lock_guard lock(mu_);
    const auto r = rounds_.find(round);
    if (r == rounds_.end()) return {};
    const auto c = r->second.find(client);
    return c == r->second.end() ? Counts{} : c->second;
  }

  Counts ForRound(std::uint64_t round) const {
    std::lock_guard lock(mu_);
    Counts sum;
    const auto r = rounds_.find(round);
    if (r == rounds_.end()) return sum;
    for (const auto& [id, c] : r->second) {
      sum.upload += c.upload;
      sum.download += c.download;
    }
    return sum;
  }

  std::map<PartyId, Counts> RoundBreakdown(std::uint64_t round) const {
    std::lock_guard lock(mu_);
    const auto r = rounds_.find(round);
    return r == rounds_.end() ? std::map<PartyId, Counts>{} : r->second;
  }

  Counts Total() const {
    std::lock_guard lock(mu_);
    return total_;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::uint64_t, std::map<PartyId, Counts>> rounds_;
  Counts total_;
};

// Forwards to another transport and records the length of every frame it
// carries against the current round.
class MeteredTransport : public Transport {
 public:
  MeteredTransport(Transport& inner, TrafficLedger& ledger) : inner_(inner), ledger_(ledger) {}

  void set_round(std::uint64_t round) { round_.store(round); }
  std::uint64_t round() const { return round_.load(); }

  void Send(PartyId from, PartyId to, std::vector<std::uint8_t> frame) override {
    const std::uint64_t bytes = frame.size();
    inner_.Send(from, to, std::move(frame));
    ledger_.Record(round_.load(), from, to, bytes);
  }

  std::optional<Envelope> Receive(PartyId at, std::chrono::milliseconds timeout) override {
    return inner_.Receive(at, timeout);
  }

 private:
  Transport& inner_;
  TrafficLedger& ledger_;
  std::atomic<std::uint64_t> round_{0};
};

}  // namespace fedbit

#endif  // FEDBIT_TRANSPORT_HPP_
