#include "ctfkit/ingest.hpp"

#include "ctfkit/util/fs.hpp"
#include "ctfkit/util/hash.hpp"
#include "ctfkit/util/text.hpp"

#include <algorithm>
#include <regex>
#include <set>

namespace ctfkit::ingest {

namespace fs = std::filesystem;
using util::to_lower;
using util::trim;

const char* to_string(Category c) {
    switch (c) {
        case Category::crypto: return "crypto";
        case Category::forensics: return "forensics";
        case Category::pwn: return "pwn";
        case Category::rev: return "rev";
        case Category::web: return "web";
        case Category::misc: return "misc";
    }
    return "misc";
}

std::optional<Category> category_from_string(std::string_view s) {
    std::string v = to_lower(s);
    if (v == "crypto" || v == "cryptography") return Category::crypto;
    if (v == "forensics" || v == "forensic") return Category::forensics;
    if (v == "pwn" || v == "binary-exploitation" || v == "exploitation") return Category::pwn;
    if (v == "rev" || v == "reverse" || v == "reversing" || v == "reverse-engineering")
        return Category::rev;
    if (v == "web") return Category::web;
    if (v == "misc" || v == "miscellaneous") return Category::misc;
    return std::nullopt;
}

const char* to_string(FileKind k) {
    switch (k) {
        case FileKind::elf32: return "elf32";
        case FileKind::elf64: return "elf64";
        case FileKind::script: return "script";
        case FileKind::archive: return "archive";
        case FileKind::text: return "text";
        case FileKind::image: return "image";
        case FileKind::other: return "other";
    }
    return "other";
}

bool is_static(const FlagMode& m) { return std::holds_alternative<StaticFlag>(m); }

nlohmann::ordered_json ChallengeArtifact::to_json() const {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["competition"] = competition;
    j["name"] = name;
    j["category"] = to_string(category);
    j["description"] = description;
    j["files"] = files;
    if (rehost_notes) j["rehost_notes"] = *rehost_notes;
    if (init_script) j["init_script"] = *init_script;
    if (const auto* st = std::get_if<StaticFlag>(&flag_mode)) {
        nlohmann::ordered_json fm;
        fm["mode"] = "static";
        if (st->digest) fm["digest"] = *st->digest;
        if (st->checker_path) fm["checker_path"] = *st->checker_path;
        j["flag_mode"] = fm;
    } else {
        const auto& dyn = std::get<DynamicFlag>(flag_mode);
        j["flag_mode"] = {{"mode", "dynamic"}, {"flag_path", dyn.flag_path}};
    }
    j["root_dir"] = root_dir;
    return j;
}

ChallengeArtifact ChallengeArtifact::from_json(const nlohmann::json& j) {
    ChallengeArtifact a;
    a.id = j.at("id").get<std::string>();
    a.competition = j.at("competition").get<std::string>();
    a.name = j.at("name").get<std::string>();
    a.category = category_from_string(j.at("category").get<std::string>()).value_or(Category::misc);
    a.description = j.value("description", "");
    a.files = j.value("files", std::vector<std::string>{});
    if (j.contains("rehost_notes")) a.rehost_notes = j["rehost_notes"].get<std::string>();
    if (j.contains("init_script")) a.init_script = j["init_script"].get<std::string>();
    const auto& fm = j.at("flag_mode");
    if (fm.at("mode") == "static") {
        StaticFlag st;
        if (fm.contains("digest")) st.digest = fm["digest"].get<std::string>();
        if (fm.contains("checker_path")) st.checker_path = fm["checker_path"].get<std::string>();
        a.flag_mode = st;
    } else {
        a.flag_mode = DynamicFlag{fm.value("flag_path", "/flag")};
    }
    a.root_dir = j.value("root_dir", "");
    return a;
}

namespace {

const std::set<std::string> kDescriptionNames = {
    "DESCRIPTION.md", "DESCRIPTION", "description.md", "description.txt", "description"};

bool is_digest_file(const std::string& base) {
    return base == "flag.sha256" || base == ".flag.sha256";
}

bool is_checker_file(const fs::path& p) {
    std::string base = to_lower(p.filename().string());
    return base.find("flagcheck") != std::string::npos && util::is_executable(p);
}

// Infrastructure files are not part of the player-visible file list.
bool is_infra_file(const fs::path& full, const std::string& rel) {
    fs::path relp(rel);
    std::string base = relp.filename().string();
    if (base == "REHOST.md" || base == ".init" || base == "module.yml") return true;
    if (is_digest_file(base)) return true;
    if (kDescriptionNames.count(base)) return true;
    if (is_checker_file(full)) return true;
    return false;
}

std::optional<std::string> read_description(const fs::path& dir) {
    for (const auto& name : kDescriptionNames) {
        auto content = util::read_file_opt(dir / name);
        if (content) return trim(*content);
    }
    return std::nullopt;
}

// module.yml carries a top-level "category:" key when the archive provides
// one; fall back to a keyword scan of the challenge path.
Category resolve_category(const fs::path& challenge_dir, const std::string& id) {
    for (const fs::path loc : {challenge_dir / "module.yml", challenge_dir.parent_path() / "module.yml"}) {
        auto content = util::read_file_opt(loc);
        if (!content) continue;
        for (const auto& line : util::split_lines(*content)) {
            std::string t = trim(line);
            if (t.rfind("category:", 0) == 0) {
                auto cat = category_from_string(trim(t.substr(9)));
                if (cat) return *cat;
            }
        }
    }
    std::string path_lc = to_lower(id);
    struct Keyword { const char* word; Category cat; };
    static const Keyword kKeywords[] = {
        {"crypto", Category::crypto}, {"forensic", Category::forensics},
        {"pwn", Category::pwn},       {"exploit", Category::pwn},
        {"rev", Category::rev},       {"web", Category::web},
        {"misc", Category::misc},
    };
    for (const auto& kw : kKeywords) {
        if (path_lc.find(kw.word) != std::string::npos) return kw.cat;
    }
    return Category::misc;
}

}  // namespace

FlagMode detect_flag_mode(const fs::path& artifact_dir) {
    std::optional<std::string> digest;
    std::optional<std::string> digest_file;
    for (const char* name : {"flag.sha256", ".flag.sha256"}) {
        auto content = util::read_file_opt(artifact_dir / name);
        if (content) {
            std::string d = to_lower(trim(*content));
            if (!util::is_sha256_hex(d)) throw MalformedDigestError(name);
            digest = d;
            digest_file = name;
            break;
        }
    }

    std::optional<std::string> checker;
    if (fs::exists(artifact_dir)) {
        std::vector<std::string> names = util::list_files_recursive(artifact_dir);
        for (const auto& rel : names) {
            if (is_checker_file(artifact_dir / rel)) {
                checker = rel;
                break;
            }
        }
    }

    if (digest || checker) {
        return StaticFlag{digest, checker};
    }
    return DynamicFlag{"/flag"};
}

ScanResult scan_archive(const fs::path& root) {
    if (!fs::exists(root) || !fs::is_directory(root)) {
        throw std::runtime_error("archive root not readable: " + root.string());
    }
    ScanResult result;

    std::vector<fs::path> competitions;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) competitions.push_back(e.path());
    }
    std::sort(competitions.begin(), competitions.end());

    for (const auto& comp_dir : competitions) {
        std::vector<fs::path> tasks;
        for (const auto& e : fs::directory_iterator(comp_dir)) {
            if (e.is_directory()) tasks.push_back(e.path());
        }
        std::sort(tasks.begin(), tasks.end());

        for (const auto& task_dir : tasks) {
            std::string id = comp_dir.filename().string() + "/" + task_dir.filename().string();

            std::vector<std::string> all = util::list_files_recursive(task_dir);
            std::vector<std::string> files;
            for (const auto& rel : all) {
                if (!is_infra_file(task_dir / rel, rel)) files.push_back(rel);
            }
            auto description = read_description(task_dir);

            if (files.empty() && !description) {
                result.warnings.push_back(
                    {id, task_dir.string(), "no challenge files and no description"});
                continue;
            }

            ChallengeArtifact a;
            a.id = id;
            a.competition = comp_dir.filename().string();
            a.name = task_dir.filename().string();
            a.description = description.value_or("");
            a.files = std::move(files);
            a.category = resolve_category(task_dir, id);
            a.rehost_notes = util::read_file_opt(task_dir / "REHOST.md");
            a.init_script = util::read_file_opt(task_dir / ".init");
            a.flag_mode = detect_flag_mode(task_dir);
            a.root_dir = fs::absolute(task_dir).string();
            result.artifacts.push_back(std::move(a));
        }
    }
    std::sort(result.artifacts.begin(), result.artifacts.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    return result;
}

namespace {

bool looks_texty(std::string_view head) {
    if (head.empty()) return false;
    size_t printable = 0;
    for (unsigned char c : head) {
        if (c == 0) return false;
        if (c == '\n' || c == '\r' || c == '\t' || (c >= 0x20 && c < 0x7F) || c >= 0x80) ++printable;
    }
    return printable * 10 >= head.size() * 9;  // >= 90%
}

bool has_script_extension(const std::string& path) {
    static const char* exts[] = {".py", ".sh", ".pl", ".rb", ".js", ".php"};
    std::string lc = to_lower(path);
    for (const char* e : exts) {
        if (lc.size() >= std::strlen(e) && lc.rfind(e) == lc.size() - std::strlen(e)) return true;
    }
    return false;
}

FileKind classify(const std::string& path, const std::string& head) {
    if (head.size() >= 5 && head[0] == 0x7F && head[1] == 'E' && head[2] == 'L' && head[3] == 'F') {
        if (head[4] == 1) return FileKind::elf32;
        if (head[4] == 2) return FileKind::elf64;
        return FileKind::other;
    }
    if (head.size() >= 2 && head[0] == '#' && head[1] == '!') return FileKind::script;
    if (has_script_extension(path)) return FileKind::script;
    if (head.size() >= 2 && static_cast<unsigned char>(head[0]) == 0x1F &&
        static_cast<unsigned char>(head[1]) == 0x8B)
        return FileKind::archive;  // gzip
    if (head.size() >= 4 && head.compare(0, 4, "PK\x03\x04") == 0) return FileKind::archive;
    if (head.size() >= 3 && head.compare(0, 3, "BZh") == 0) return FileKind::archive;
    if (head.size() >= 6 && head.compare(0, 6, "\xFD""7zXZ\x00") == 0) return FileKind::archive;
    if (head.size() >= 262 && head.compare(257, 5, "ustar") == 0) return FileKind::archive;
    if (head.size() >= 8 && head.compare(0, 8, "\x89PNG\r\n\x1A\n") == 0) return FileKind::image;
    if (head.size() >= 3 && static_cast<unsigned char>(head[0]) == 0xFF &&
        static_cast<unsigned char>(head[1]) == 0xD8 && static_cast<unsigned char>(head[2]) == 0xFF)
        return FileKind::image;
    if (head.size() >= 6 && (head.compare(0, 6, "GIF87a") == 0 || head.compare(0, 6, "GIF89a") == 0))
        return FileKind::image;
    if (looks_texty(head)) return FileKind::text;
    return FileKind::other;
}

// Ordered listen-port patterns; the first hit wins.
std::optional<int> detect_listen_port(const std::string& source) {
    static const std::regex patterns[] = {
        // bind(("0.0.0.0", 5000)) and friends
        std::regex(R"(bind\s*\(\s*\(\s*['"][^'"]*['"]\s*,\s*(\d{1,5}))"),
        // socat TCP-LISTEN:5000
        std::regex(R"(TCP-LISTEN:(\d{1,5}))"),
        // PORT = 5000 / port=5000
        std::regex(R"([Pp][Oo][Rr][Tt]\s*=\s*(\d{1,5}))"),
        // app.run(port=5000)
        std::regex(R"(port\s*=\s*(\d{1,5})\s*[,)])"),
        // server.listen(3000): require >= 4 digits to avoid backlog args
        std::regex(R"(listen\s*\(\s*(\d{4,5})\s*[,)])"),
    };
    for (const auto& re : patterns) {
        std::smatch m;
        if (std::regex_search(source, m, re)) {
            int port = std::stoi(m[1].str());
            if (port >= 1 && port <= 65535) return port;
        }
    }
    return std::nullopt;
}

bool shebang_is_suspect(const std::string& first_line) {
    if (first_line.rfind("#!", 0) != 0) return false;
    std::string interp = trim(first_line.substr(2));
    size_t sp = interp.find_first_of(" \t");
    if (sp != std::string::npos) interp = interp.substr(0, sp);
    if (interp.rfind("/bin/", 0) == 0) return false;
    if (interp.rfind("/usr/bin/", 0) == 0) return false;
    return true;
}

}  // namespace

std::vector<FileAnalysis> analyze_files(const ChallengeArtifact& artifact,
                                        std::vector<ScanWarning>* warnings) {
    std::vector<FileAnalysis> out;
    for (const auto& rel : artifact.files) {
        FileAnalysis fa;
        fa.path = rel;
        fs::path full = fs::path(artifact.root_dir) / rel;
        auto content = util::read_file_opt(full);
        if (!content) {
            fa.kind = FileKind::other;
            if (warnings) warnings->push_back({artifact.id, rel, "unreadable file"});
            out.push_back(std::move(fa));
            continue;
        }
        std::string head = content->substr(0, 512);
        fa.kind = classify(rel, *content);
        if (fa.kind == FileKind::script) {
            fa.detected_listen_port = detect_listen_port(*content);
            auto lines = util::split_lines(head);
            if (!lines.empty()) fa.shebang_issue = shebang_is_suspect(lines[0]);
        }
        out.push_back(std::move(fa));
    }
    return out;
}

std::vector<ChallengeArtifact> decontaminate(const std::vector<ChallengeArtifact>& artifacts,
                                             const std::vector<std::string>& blocklist,
                                             std::vector<RemovalRecord>* removed) {
    std::vector<ChallengeArtifact> kept;
    for (const auto& a : artifacts) {
        std::optional<std::string> hit;
        for (const auto& pattern : blocklist) {
            if (util::glob_match(pattern, a.id)) {
                hit = pattern;
                break;
            }
        }
        if (hit) {
            if (removed) removed->push_back({a.id, *hit});
        } else {
            kept.push_back(a);
        }
    }
    return kept;
}

std::vector<std::string> load_blocklist(const fs::path& p) {
    std::vector<std::string> out;
    auto content = util::read_file(p);
    for (const auto& line : util::split_lines(content)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        out.push_back(t);
    }
    return out;
}

bool server_needed(const ChallengeArtifact& artifact,
                   const std::vector<FileAnalysis>& analyses) {
    if (!is_static(artifact.flag_mode)) return true;
    if (artifact.category == Category::pwn || artifact.category == Category::web) return true;
    for (const auto& fa : analyses) {
        if (fa.detected_listen_port) return true;
    }
    static const std::regex nc_re(R"(\bnc\s+\S+\s+\d{2,5}\b)");
    if (std::regex_search(artifact.description, nc_re)) return true;
    return false;
}

}  // namespace ctfkit::ingest
