#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ctfkit::ingest {

enum class Category { crypto, forensics, pwn, rev, web, misc };

const char* to_string(Category c);
std::optional<Category> category_from_string(std::string_view s);

struct StaticFlag {
    // Digest may be absent when only a checker executable exists; when
    // present it is 64 lowercase hex characters.
    std::optional<std::string> digest;
    std::optional<std::string> checker_path;  // relative
};

struct DynamicFlag {
    std::string flag_path = "/flag";  // absolute
};

using FlagMode = std::variant<StaticFlag, DynamicFlag>;

bool is_static(const FlagMode& m);

struct ChallengeArtifact {
    std::string id;  // "<competition>/<task>"
    std::string competition;
    std::string name;
    Category category = Category::misc;
    std::string description;
    std::vector<std::string> files;  // relative, sorted; player-visible files only
    std::optional<std::string> rehost_notes;  // REHOST.md
    std::optional<std::string> init_script;   // .init
    FlagMode flag_mode = DynamicFlag{};
    std::string root_dir;  // absolute path of the challenge directory

    nlohmann::ordered_json to_json() const;
    static ChallengeArtifact from_json(const nlohmann::json& j);
};

enum class FileKind { elf32, elf64, script, archive, text, image, other };

const char* to_string(FileKind k);

struct FileAnalysis {
    std::string path;  // relative
    FileKind kind = FileKind::other;
    std::optional<int> detected_listen_port;  // scripts only
    bool shebang_issue = false;
};

struct ScanWarning {
    std::string id;      // challenge id or directory stem
    std::string path;
    std::string reason;
};

struct ScanResult {
    std::vector<ChallengeArtifact> artifacts;  // sorted by id
    std::vector<ScanWarning> warnings;
};

// Walks <root>/<competition>/<task> directories into artifacts. Malformed
// challenge directories (no files, no description) are skipped with a warning.
// Throws on an unreadable root.
ScanResult scan_archive(const std::filesystem::path& root);

// Static wins when both a digest file and a checker executable are present.
// Throws MalformedDigestError when flag.sha256 exists but is not 64 hex chars.
FlagMode detect_flag_mode(const std::filesystem::path& artifact_dir);

struct MalformedDigestError : std::runtime_error {
    explicit MalformedDigestError(const std::string& file)
        : std::runtime_error("malformed SHA-256 digest in " + file), file_name(file) {}
    std::string file_name;
};

// One analysis per artifact file; unreadable files degrade to kind=other with
// a warning appended to `warnings` (never fatal).
std::vector<FileAnalysis> analyze_files(const ChallengeArtifact& artifact,
                                        std::vector<ScanWarning>* warnings = nullptr);

struct RemovalRecord {
    std::string id;
    std::string pattern;
};

// Drops artifacts whose id matches any glob pattern; removals are recorded.
std::vector<ChallengeArtifact> decontaminate(const std::vector<ChallengeArtifact>& artifacts,
                                             const std::vector<std::string>& blocklist,
                                             std::vector<RemovalRecord>* removed = nullptr);

// Newline-delimited glob file; blank lines and '#' comments ignored.
std::vector<std::string> load_blocklist(const std::filesystem::path& p);

// True when the challenge needs a hosted network service (dynamic flag,
// a script with a detected listen port, a pwn/web category, or a
// "nc host port" style description).
bool server_needed(const ChallengeArtifact& artifact,
                   const std::vector<FileAnalysis>& analyses);

}  // namespace ctfkit::ingest
