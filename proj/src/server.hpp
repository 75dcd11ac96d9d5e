#pragma once

// The offload server: a driver that owns sessions, the handle registry and
// task dispatch, plus a pool of workers that each hold one shard of every
// distributed matrix and execute routines as symmetric participants.
//
// Clients talk to the driver over one control connection and to each worker
// over its own data connection (rows in and out).

#include <cstdint>
#include <memory>
#include <string>

namespace alch::server {

struct ServerOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0; // 0 = ephemeral
    std::uint16_t workers = 1;
    std::uint64_t memory_budget = std::uint64_t{8} << 30;
};

class Server {
  public:
    /// Binds and starts serving. Throws Error(Connection) when the port is taken.
    explicit Server(const ServerOptions& options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    std::uint16_t port() const noexcept;
    const std::string& host() const noexcept;
    std::uint16_t worker_count() const noexcept;

    /// Closes every connection and joins all threads. Idempotent.
    void stop();

    std::size_t active_sessions() const;
    std::size_t live_matrices() const;
    std::uint64_t bytes_in_use() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace alch::server
