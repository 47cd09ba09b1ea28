// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// Envelope transport of the agent interoperability protocol: local
// SOCK_SEQPACKET sockets carrying fixed 48-byte frames. Message boundaries
// and per-sender FIFO ordering come from the socket type; bodies never cross
// the channel (they live in the content store).

#ifndef HALO_IPC_CHANNEL_HPP
#define HALO_IPC_CHANNEL_HPP

#include <memory>
#include <string>

#include "halo/status.hpp"
#include "halo/wire.hpp"

namespace halo::ipc {

/// One connected endpoint. send() may be called from several threads
/// (frames are atomic); recv() is single-consumer. recv blocks only the
/// calling thread, up to the given timeout.
class Endpoint {
 public:
  explicit Endpoint(int fd) : fd_(fd) {}
  ~Endpoint();
  Endpoint(const Endpoint&) = delete;
  Endpoint& operator=(const Endpoint&) = delete;

  StatusCode send(const MessageEnvelope& e);
  Result<MessageEnvelope> recv(int timeout_ms);

  int fd() const { return fd_; }
  /// True once the peer has closed its side.
  bool closed() const { return closed_; }

 private:
  int fd_ = -1;
  bool closed_ = false;
};

/// Listening side of an endpoint path. Accept never blocks longer than the
/// given timeout.
class Listener {
 public:
  static Result<std::unique_ptr<Listener>> bind(const std::string& path);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  Result<std::unique_ptr<Endpoint>> accept(int timeout_ms);
  int fd() const { return fd_; }
  const std::string& path() const { return path_; }

 private:
  Listener() = default;
  int fd_ = -1;
  std::string path_;
};

/// Connect to a listening endpoint path.
Result<std::unique_ptr<Endpoint>> channel_connect(const std::string& path);

}  // namespace halo::ipc

#endif  // HALO_IPC_CHANNEL_HPP
