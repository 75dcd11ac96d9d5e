#pragma once

// Thin RAII layer over POSIX TCP sockets plus a framed message channel.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wire.hpp"

namespace alch::net {

class Socket {
  public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket();

    bool valid() const noexcept { return fd_ >= 0; }
    int fd() const noexcept { return fd_; }

    void send_all(std::span<const std::uint8_t> bytes);
    /// Returns 0 on orderly close; throws Error(Connection) on failure.
    std::size_t recv_some(std::span<std::uint8_t> buffer);
    /// Unblocks pending reads/writes from other threads.
    void shutdown() noexcept;
    void close() noexcept;
    void set_recv_timeout_ms(int ms);

  private:
    int fd_ = -1;
};

class Listener {
  public:
    /// Binds host:port (port 0 picks an ephemeral port). Throws Error(Connection).
    Listener(const std::string& host, std::uint16_t port);

    std::uint16_t port() const noexcept { return port_; }
    /// Blocks; nullopt once shutdown() was called.
    std::optional<Socket> accept();
    void shutdown() noexcept;

  private:
    Socket sock_;
    std::uint16_t port_ = 0;
};

Socket connect_to(const std::string& host, std::uint16_t port);

/// "host:port" -> (host, port).
std::pair<std::string, std::uint16_t> split_address(const std::string& address);

/// Socket plus its framing buffer. Not movable: the frame reader refers to the socket.
class Channel {
  public:
    explicit Channel(Socket sock);
    Channel(const Channel&) = delete;
    Channel& operator=(const Channel&) = delete;

    void send(const wire::Message& message, std::uint32_t session_id);
    void send_bytes(std::span<const std::uint8_t> frame) { sock_.send_all(frame); }
    /// nullopt on clean close at a frame boundary.
    std::optional<wire::Decoded> receive();
    /// receive() that treats a close as a connection error.
    wire::Decoded expect();

    Socket& socket() noexcept { return sock_; }
    void shutdown() noexcept { sock_.shutdown(); }

  private:
    Socket sock_;
    wire::FrameStream stream_;
    std::vector<std::uint8_t> out_;
};

} // namespace alch::net
