#include "ctfkit/util/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace ctfkit::util {

namespace {
using Clock = std::chrono::steady_clock;

int connect_once(const std::string& host, int port, int timeout_ms, int* err_out) {
    int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) return -1;

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        hostent* he = ::gethostbyname(host.c_str());
        if (!he || he->h_addrtype != AF_INET) {
            ::close(fd);
            *err_out = EHOSTUNREACH;
            return -1;
        }
        std::memcpy(&addr.sin_addr, he->h_addr, sizeof addr.sin_addr);
    }

    int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);

    int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    if (rc == 0) return fd;
    if (errno != EINPROGRESS) {
        *err_out = errno;
        ::close(fd);
        return -1;
    }
    struct pollfd pfd{fd, POLLOUT, 0};
    rc = ::poll(&pfd, 1, timeout_ms);
    if (rc <= 0) {
        *err_out = ETIMEDOUT;
        ::close(fd);
        return -1;
    }
    int soerr = 0;
    socklen_t len = sizeof soerr;
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &soerr, &len);
    if (soerr != 0) {
        *err_out = soerr;
        ::close(fd);
        return -1;
    }
    return fd;
}

}  // namespace

const char* to_string(ConnectFailure f) {
    switch (f) {
        case ConnectFailure::refused: return "refused";
        case ConnectFailure::timeout: return "timeout";
        case ConnectFailure::reset: return "reset";
    }
    return "unknown";
}

int pick_free_port() {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket failed");
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        throw std::runtime_error("bind failed");
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    int port = ntohs(addr.sin_port);
    ::close(fd);
    return port;
}

TcpConn::~TcpConn() { close(); }

TcpConn::TcpConn(TcpConn&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

TcpConn& TcpConn::operator=(TcpConn&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

std::optional<TcpConn> TcpConn::dial(const std::string& host, int port,
                                     int timeout_ms, ConnectFailure* failure) {
    auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    int last_err = ECONNREFUSED;
    while (true) {
        auto remain = std::chrono::duration_cast<std::chrono::milliseconds>(
                          deadline - Clock::now())
                          .count();
        if (remain <= 0) break;
        int err = 0;
        int fd = connect_once(host, port, static_cast<int>(remain), &err);
        if (fd >= 0) {
            TcpConn c;
            c.fd_ = fd;
            return c;
        }
        last_err = err;
        if (err != ECONNREFUSED && err != ETIMEDOUT) break;
        if (err == ECONNREFUSED) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
    }
    if (failure) {
        if (last_err == ECONNREFUSED) {
            *failure = ConnectFailure::refused;
        } else if (last_err == ECONNRESET) {
            *failure = ConnectFailure::reset;
        } else {
            *failure = ConnectFailure::timeout;
        }
    }
    return std::nullopt;
}

bool TcpConn::send_all(std::string_view data) {
    size_t sent = 0;
    while (sent < data.size()) {
        ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n > 0) {
            sent += static_cast<size_t>(n);
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
            struct pollfd pfd{fd_, POLLOUT, 0};
            if (::poll(&pfd, 1, 1000) <= 0) return false;
            continue;
        }
        return false;
    }
    return true;
}

std::string TcpConn::read_available(int timeout_ms, size_t max_bytes, bool* eof) {
    if (eof) *eof = false;
    std::string out;
    auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    char buf[4096];
    while (out.size() < max_bytes) {
        auto remain = std::chrono::duration_cast<std::chrono::milliseconds>(
                          deadline - Clock::now())
                          .count();
        if (remain < 0) remain = 0;
        struct pollfd pfd{fd_, POLLIN, 0};
        int pr = ::poll(&pfd, 1, static_cast<int>(remain));
        if (pr <= 0) break;  // nothing further within the window
        ssize_t n = ::recv(fd_, buf, std::min(sizeof buf, max_bytes - out.size()), 0);
        if (n > 0) {
            out.append(buf, buf + n);
            // Once data started flowing, only drain what is promptly there.
            deadline = std::min(deadline, Clock::now() + std::chrono::milliseconds(60));
            continue;
        }
        if (n == 0) {
            if (eof) *eof = true;
            break;
        }
        if (errno == EAGAIN || errno == EWOULDBLOCK) continue;
        if (eof) *eof = true;  // reset or hard error ends the stream
        break;
    }
    return out;
}

void TcpConn::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

}  // namespace ctfkit::util
