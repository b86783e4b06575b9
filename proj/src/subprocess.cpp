#include "ctfkit/util/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace ctfkit::util {

namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void child_exec(const std::vector<std::string>& argv,
                             const std::optional<std::filesystem::path>& cwd,
                             const std::map<std::string, std::string>& env) {
    ::setpgid(0, 0);
    if (cwd && ::chdir(cwd->c_str()) != 0) _exit(127);
    for (const auto& [k, v] : env) ::setenv(k.c_str(), v.c_str(), 1);
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    ::execvp(cargv[0], cargv.data());
    _exit(127);
}

void kill_group(pid_t pid, int grace_ms) {
    if (pid <= 0) return;
    ::kill(-pid, SIGTERM);
    auto deadline = Clock::now() + std::chrono::milliseconds(grace_ms);
    while (Clock::now() < deadline) {
        int status = 0;
        pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid || (r == -1 && errno == ECHILD)) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ::kill(-pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
}

RunResult run_impl(const std::vector<std::string>& argv, const RunOptions& opts) {
    int pipefd[2];
    if (::pipe(pipefd) != 0) throw std::runtime_error("pipe failed");

    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(pipefd[0]);
        ::close(pipefd[1]);
        throw std::runtime_error("fork failed");
    }
    if (pid == 0) {
        ::close(pipefd[0]);
        ::dup2(pipefd[1], STDOUT_FILENO);
        ::dup2(pipefd[1], STDERR_FILENO);
        ::close(pipefd[1]);
        int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) {
            ::dup2(devnull, STDIN_FILENO);
            ::close(devnull);
        }
        child_exec(argv, opts.cwd, opts.env);
    }

    ::close(pipefd[1]);
    ::fcntl(pipefd[0], F_SETFL, O_NONBLOCK);

    RunResult result;
    auto deadline = Clock::now() + std::chrono::milliseconds(opts.timeout_ms);
    bool child_done = false;
    char buf[4096];
    while (true) {
        struct pollfd pfd{pipefd[0], POLLIN, 0};
        auto remain = std::chrono::duration_cast<std::chrono::milliseconds>(
                          deadline - Clock::now())
                          .count();
        if (remain < 0) remain = 0;
        int pr = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remain, 200)));
        if (pr > 0 && (pfd.revents & (POLLIN | POLLHUP))) {
            ssize_t n;
            while ((n = ::read(pipefd[0], buf, sizeof buf)) > 0) {
                if (result.output.size() < opts.max_output) {
                    result.output.append(buf, buf + std::min<size_t>(
                                                       static_cast<size_t>(n),
                                                       opts.max_output - result.output.size()));
                }
            }
            if (n == 0) break;  // writer closed
        }
        int status = 0;
        pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            child_done = true;
            result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status)
                                                 : 128 + WTERMSIG(status);
            // Drain whatever is left, then stop.
            ssize_t n;
            while ((n = ::read(pipefd[0], buf, sizeof buf)) > 0) {
                if (result.output.size() < opts.max_output) {
                    result.output.append(buf, buf + std::min<size_t>(
                                                       static_cast<size_t>(n),
                                                       opts.max_output - result.output.size()));
                }
            }
            break;
        }
        if (Clock::now() >= deadline) {
            result.timed_out = true;
            kill_group(pid, 500);
            result.exit_code = -1;
            break;
        }
    }
    ::close(pipefd[0]);
    if (!child_done && !result.timed_out) {
        int status = 0;
        ::waitpid(pid, &status, 0);
        result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status)
                                             : 128 + WTERMSIG(status);
    }
    return result;
}

}  // namespace

RunResult run_shell(const std::string& command, const RunOptions& opts) {
    return run_impl({"/bin/sh", "-c", command}, opts);
}

RunResult run_argv(const std::vector<std::string>& argv, const RunOptions& opts) {
    if (argv.empty()) throw std::invalid_argument("empty argv");
    return run_impl(argv, opts);
}

Child Child::spawn_internal(const std::vector<std::string>& argv,
                            const std::filesystem::path& cwd,
                            const std::map<std::string, std::string>& env,
                            const std::filesystem::path& log_path) {
    pid_t pid = ::fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
        int logfd = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
        if (logfd >= 0) {
            ::dup2(logfd, STDOUT_FILENO);
            ::dup2(logfd, STDERR_FILENO);
            ::close(logfd);
        }
        int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) {
            ::dup2(devnull, STDIN_FILENO);
            ::close(devnull);
        }
        child_exec(argv, cwd, env);
    }
    // Best effort from the parent side too; the child also calls setpgid.
    ::setpgid(pid, pid);
    return Child(pid);
}

Child Child::spawn_shell(const std::string& command,
                         const std::filesystem::path& cwd,
                         const std::map<std::string, std::string>& env,
                         const std::filesystem::path& log_path) {
    return spawn_internal({"/bin/sh", "-c", command}, cwd, env, log_path);
}

Child Child::spawn_argv(const std::vector<std::string>& argv,
                        const std::filesystem::path& cwd,
                        const std::map<std::string, std::string>& env,
                        const std::filesystem::path& log_path) {
    if (argv.empty()) throw std::invalid_argument("empty argv");
    return spawn_internal(argv, cwd, env, log_path);
}

bool Child::alive() const {
    if (pid_ <= 0) return false;
    int status = 0;
    pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) return false;       // reaped just now
    if (r == -1 && errno == ECHILD) return false;
    return ::kill(pid_, 0) == 0;
}

void Child::terminate(int grace_ms) {
    if (pid_ <= 0) return;
    kill_group(pid_, grace_ms);
    pid_ = -1;
}

}  // namespace ctfkit::util
