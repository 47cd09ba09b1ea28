// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/ipc/channel.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace halo::ipc {

namespace {

bool fill_addr(const std::string& path, sockaddr_un& addr) {
  if (path.size() >= sizeof(addr.sun_path)) return false;
  std::memset(&addr, 0, sizeof(addr));
  addr.sun_family = AF_UNIX;
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  return true;
}

}  // namespace

Endpoint::~Endpoint() {
  if (fd_ >= 0) ::close(fd_);
}

StatusCode Endpoint::send(const MessageEnvelope& e) {
  std::byte frame[kEnvelopeSize];
  envelope_encode(e, frame);
  // SEQPACKET keeps each frame atomic, so concurrent senders are safe.
  ssize_t n;
  do {
    n = ::send(fd_, frame, kEnvelopeSize, MSG_NOSIGNAL);
  } while (n < 0 && errno == EINTR);
  if (n != static_cast<ssize_t>(kEnvelopeSize)) {
    if (n < 0 && (errno == EPIPE || errno == ECONNRESET)) closed_ = true;
    return StatusCode::ErrNoResource;
  }
  return StatusCode::Ok;
}

Result<MessageEnvelope> Endpoint::recv(int timeout_ms) {
  using R = Result<MessageEnvelope>;
  pollfd pfd{fd_, POLLIN, 0};
  int rc;
  do {
    rc = ::poll(&pfd, 1, timeout_ms);
  } while (rc < 0 && errno == EINTR);
  if (rc == 0) return R::failure(StatusCode::ErrTimeout);
  if (rc < 0) return R::failure(StatusCode::ErrNoResource);

  std::byte frame[kEnvelopeSize + 1];
  ssize_t n;
  do {
    n = ::recv(fd_, frame, sizeof(frame), 0);
  } while (n < 0 && errno == EINTR);
  if (n == 0) {
    closed_ = true;
    return R::failure(StatusCode::ErrNoResource);
  }
  if (n < 0) return R::failure(StatusCode::ErrNoResource);
  if (n != static_cast<ssize_t>(kEnvelopeSize))
    return R::failure(StatusCode::ErrSerialization);
  return envelope_decode(std::span<const std::byte>(frame, kEnvelopeSize));
}

Result<std::unique_ptr<Listener>> Listener::bind(const std::string& path) {
  using R = Result<std::unique_ptr<Listener>>;
  sockaddr_un addr;
  if (!fill_addr(path, addr)) return R::failure(StatusCode::ErrBadArgument);

  int fd = ::socket(AF_UNIX, SOCK_SEQPACKET | SOCK_CLOEXEC, 0);
  if (fd < 0) return R::failure(StatusCode::ErrNoResource);
  ::unlink(path.c_str());  // stale socket file from a previous run
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd, 64) != 0) {
    ::close(fd);
    return R::failure(StatusCode::ErrNoResource);
  }
  auto l = std::unique_ptr<Listener>(new Listener());
  l->fd_ = fd;
  l->path_ = path;
  return R::success(std::move(l));
}

Listener::~Listener() {
  if (fd_ >= 0) {
    ::close(fd_);
    ::unlink(path_.c_str());
  }
}

Result<std::unique_ptr<Endpoint>> Listener::accept(int timeout_ms) {
  using R = Result<std::unique_ptr<Endpoint>>;
  pollfd pfd{fd_, POLLIN, 0};
  int rc;
  do {
    rc = ::poll(&pfd, 1, timeout_ms);
  } while (rc < 0 && errno == EINTR);
  if (rc == 0) return R::failure(StatusCode::ErrTimeout);
  if (rc < 0) return R::failure(StatusCode::ErrNoResource);
  int cfd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (cfd < 0) return R::failure(StatusCode::ErrNoResource);
  return R::success(std::make_unique<Endpoint>(cfd));
}

Result<std::unique_ptr<Endpoint>> channel_connect(const std::string& path) {
  using R = Result<std::unique_ptr<Endpoint>>;
  sockaddr_un addr;
  if (!fill_addr(path, addr)) return R::failure(StatusCode::ErrBadArgument);
  int fd = ::socket(AF_UNIX, SOCK_SEQPACKET | SOCK_CLOEXEC, 0);
  if (fd < 0) return R::failure(StatusCode::ErrNoResource);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return R::failure(StatusCode::ErrNoResource);
  }
  return R::success(std::make_unique<Endpoint>(fd));
}

}  // namespace halo::ipc
