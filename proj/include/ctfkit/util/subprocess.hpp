#pragma once

#include <sys/types.h>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctfkit::util {

struct RunOptions {
    std::optional<std::filesystem::path> cwd;
    std::map<std::string, std::string> env;  // added on top of the inherited env
    int timeout_ms = 30000;
    size_t max_output = 1 << 20;
};

struct RunResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string output;  // stdout and stderr interleaved
};

// Runs `/bin/sh -c command` to completion (or timeout; the whole process
// group is killed on timeout).
RunResult run_shell(const std::string& command, const RunOptions& opts = {});

RunResult run_argv(const std::vector<std::string>& argv, const RunOptions& opts = {});

// A long-running child in its own process group, stdout/stderr appended to
// a log file. Used for container-like service processes.
class Child {
public:
    Child() = default;
    static Child spawn_shell(const std::string& command,
                             const std::filesystem::path& cwd,
                             const std::map<std::string, std::string>& env,
                             const std::filesystem::path& log_path);
    static Child spawn_argv(const std::vector<std::string>& argv,
                            const std::filesystem::path& cwd,
                            const std::map<std::string, std::string>& env,
                            const std::filesystem::path& log_path);

    pid_t pid() const { return pid_; }
    bool alive() const;
    // SIGTERM the group, wait up to grace_ms, then SIGKILL. Idempotent.
    void terminate(int grace_ms = 2000);

private:
    explicit Child(pid_t pid) : pid_(pid) {}
    static Child spawn_internal(const std::vector<std::string>& argv,
                                const std::filesystem::path& cwd,
                                const std::map<std::string, std::string>& env,
                                const std::filesystem::path& log_path);
    pid_t pid_ = -1;
};

}  // namespace ctfkit::util
