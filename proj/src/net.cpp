#include "net.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include "error.hpp"

namespace alch::net {

namespace {

[[noreturn]] void fail(const std::string& what) {
    throw Error(ErrorCode::Connection, what + ": " + std::strerror(errno));
}

void tune(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host.empty() || host == "0.0.0.0") {
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        return addr;
    }
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
        throw Error(ErrorCode::Connection, "cannot resolve host '" + host + "'");
    }
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
    return addr;
}

} // namespace

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

Socket::~Socket() { close(); }

void Socket::send_all(std::span<const std::uint8_t> bytes) {
    while (!bytes.empty()) {
        const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail("send");
        }
        bytes = bytes.subspan(static_cast<std::size_t>(n));
    }
}

std::size_t Socket::recv_some(std::span<std::uint8_t> buffer) {
    for (;;) {
        const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
        if (n >= 0) return static_cast<std::size_t>(n);
        if (errno == EINTR) continue;
        if (errno == ECONNRESET || errno == ENOTCONN) return 0;
        fail("recv");
    }
}

void Socket::shutdown() noexcept {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Socket::set_recv_timeout_ms(int ms) {
    timeval tv{};
    tv.tv_sec = ms / 1000;
    tv.tv_usec = (ms % 1000) * 1000;
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

Listener::Listener(const std::string& host, std::uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) fail("socket");
    sock_ = Socket(fd);
    const auto addr = resolve(host, port);
    if (::bind(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        fail("bind " + host + ":" + std::to_string(port));
    }
    if (::listen(fd, 64) != 0) fail("listen");
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

std::optional<Socket> Listener::accept() {
    for (;;) {
        const int fd = ::accept4(sock_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
        if (fd >= 0) {
            tune(fd);
            return Socket(fd);
        }
        if (errno == EINTR || errno == ECONNABORTED) continue;
        return std::nullopt;
    }
}

void Listener::shutdown() noexcept { sock_.shutdown(); }

Socket connect_to(const std::string& host, std::uint16_t port) {
    const auto addr = resolve(host, port);
    const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) fail("socket");
    Socket sock(fd);
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        fail("connect " + host + ":" + std::to_string(port));
    }
    tune(fd);
    return sock;
}

std::pair<std::string, std::uint16_t> split_address(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "address '" + address + "' lacks ':port'");
    }
    const auto port = std::stoul(address.substr(colon + 1));
    if (port > 65535) throw Error(ErrorCode::InvalidArgument, "port out of range in '" + address + "'");
    return {address.substr(0, colon), static_cast<std::uint16_t>(port)};
}

Channel::Channel(Socket sock)
    : sock_(std::move(sock)),
      stream_([this](std::span<std::uint8_t> buf) { return sock_.recv_some(buf); }) {}

void Channel::send(const wire::Message& message, std::uint32_t session_id) {
    out_.clear();
    wire::encode_into(out_, message, session_id);
    sock_.send_all(out_);
    if (out_.capacity() > (std::size_t{1} << 24)) out_ = {};
}

std::optional<wire::Decoded> Channel::receive() { return stream_.next(); }

wire::Decoded Channel::expect() {
    auto d = receive();
    if (!d) throw Error(ErrorCode::Connection, "connection closed by peer");
    return std::move(*d);
}

} // namespace alch::net
