#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace ctfkit::util {

enum class ConnectFailure { refused, timeout, reset };

const char* to_string(ConnectFailure f);

// Binds port 0 on loopback, reads the assigned port, closes. The usual
// allocate-then-hand-off race is acceptable for test-scale use.
int pick_free_port();

// One blocking-ish TCP client connection with millisecond deadlines.
class TcpConn {
public:
    TcpConn() = default;
    ~TcpConn();
    TcpConn(TcpConn&& other) noexcept;
    TcpConn& operator=(TcpConn&& other) noexcept;
    TcpConn(const TcpConn&) = delete;
    TcpConn& operator=(const TcpConn&) = delete;

    // Repeatedly attempts to connect until the deadline; refusal inside the
    // window is retried (services need a beat to start listening).
    static std::optional<TcpConn> dial(const std::string& host, int port,
                                       int timeout_ms,
                                       ConnectFailure* failure = nullptr);

    bool open() const { return fd_ >= 0; }
    bool send_all(std::string_view data);
    // Reads whatever arrives within timeout_ms, up to max_bytes. Empty result
    // with eof=false means nothing arrived in time.
    std::string read_available(int timeout_ms, size_t max_bytes, bool* eof = nullptr);
    void close();

private:
    int fd_ = -1;
};

}  // namespace ctfkit::util
