/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

/** Minimal blocking TCP server: one thread per connection, each line
 * handed to a CommandProcessor and answered with one line. POSIX only.
 * @file */

#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "line_protocol.hpp"

namespace beaconpark::parking {

class LineServer {
public:
  /// @p bind_address is "host:port" (IPv4 literal or "localhost"); port 0
  /// picks an ephemeral port, see port().
  LineServer(CommandProcessor& processor, const std::string& bind_address) : processor_(processor) {
    auto colon = bind_address.rfind(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("bind address must be host:port");
    }
    std::string host = bind_address.substr(0, colon);
    if (host.empty()) host = "0.0.0.0";
    if (host == "localhost") host = "127.0.0.1";
    int port = 0;
    try {
      port = std::stoi(bind_address.substr(colon + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad port in bind address");
    }
    if (port < 0 || port > 65535) {
      throw std::invalid_argument("bad port in bind address");
    }

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      throw std::invalid_argument("bad host in bind address");
    }

    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) {
      throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
    }
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
      const std::string err = std::strerror(errno);
      ::close(listen_fd_);
      throw std::runtime_error("bind " + bind_address + ": " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  LineServer(const LineServer&) = delete;
  LineServer& operator=(const LineServer&) = delete;

  ~LineServer() {
    stop();
    for (auto& t : workers_) {
      if (t.joinable()) t.join();
    }
    ::close(listen_fd_);
  }

  std::uint16_t port() const noexcept { return port_; }

  /// Accepts connections until stop() is called.
  void run() {
    while (!stopping_) {
      int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (errno == EINTR && !stopping_) continue;
        break;
      }
      std::lock_guard lock(clients_mutex_);
      if (stopping_) {
        ::close(fd);
        break;
      }
      clients_.insert(fd);
      workers_.emplace_back([this, fd] { serve_client(fd); });
    }
  }

  void stop() {
    if (stopping_.exchange(true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    std::lock_guard lock(clients_mutex_);
    for (int fd : clients_) {
      ::shutdown(fd, SHUT_RDWR);
    }
  }

private:
  void serve_client(int fd) {
    std::string buffer;
    char chunk[1024];
    bool open = true;
    while (open) {
      ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string reply = processor_.handle(line) + "\n";
        if (!send_all(fd, reply)) {
          open = false;
          break;
        }
      }
    }
    std::lock_guard lock(clients_mutex_);
    clients_.erase(fd);
    ::close(fd);
  }

  static bool send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

  CommandProcessor& processor_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex clients_mutex_;
  std::set<int> clients_;
  std::vector<std::thread> workers_;
};

} // namespace beaconpark::parking
