#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ctfkit::util {

namespace fs = std::filesystem;

std::string read_file(const fs::path& p);
std::optional<std::string> read_file_opt(const fs::path& p);

void write_file(const fs::path& p, std::string_view content);

// Writes to a sibling temp file, then renames onto the target so a crash
// mid-write never leaves a partial file at `p`.
void write_file_atomic(const fs::path& p, std::string_view content);

// Relative paths of all regular files under root, sorted, '/'-separated.
std::vector<std::string> list_files_recursive(const fs::path& root);

void copy_tree(const fs::path& from, const fs::path& to);

bool is_executable(const fs::path& p);
void set_mode(const fs::path& p, unsigned mode);
unsigned get_mode(const fs::path& p);

// Scoped temporary directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "ctfkit");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

}  // namespace ctfkit::util
