#include "ctfkit/forge.hpp"

#include "ctfkit/prompt_assets.hpp"
#include "ctfkit/util/dockerfile.hpp"
#include "ctfkit/util/fs.hpp"
#include "ctfkit/util/hash.hpp"
#include "ctfkit/util/jsonl.hpp"
#include "ctfkit/util/text.hpp"

#include <httplib.h>
#include <yaml-cpp/yaml.h>

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace ctfkit::forge {

namespace fs = std::filesystem;
using ingest::Category;
using ingest::ChallengeArtifact;
using ingest::FileAnalysis;
using ingest::FileKind;
using util::contains_ci;
using util::trim;

// ---------------------------------------------------------------------------
// ChallengeMeta / EnvironmentBundle

std::string ChallengeMeta::to_canonical_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["description"] = description;
    j["category"] = category;
    j["files"] = files;
    j["box"] = box;
    j["internal_port"] = internal_port;
    j["compose"] = compose;
    j["flag"] = flag;
    return j.dump(2) + "\n";
}

std::string EnvironmentBundle::content_hash() const {
    return util::sha256_hex(dockerfile + "\x1e" + compose + "\x1e" + metadata_text());
}

LintReport LintReport::from(std::vector<LintViolation> violations) {
    LintReport r;
    r.violations = std::move(violations);
    r.passed = r.violations.empty();
    return r;
}

// ---------------------------------------------------------------------------
// Backends

std::string HttpChatBackend::complete(const std::string& prompt) {
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_s, 0);
    client.set_read_timeout(cfg_.timeout_s, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    }
    nlohmann::json body = {
        {"model", cfg_.model},
        {"messages", {{{"role", "user"}, {"content", prompt}}}},
        {"temperature", cfg_.temperature},
    };
    auto res = client.Post(cfg_.api_path, headers, body.dump(), "application/json");
    if (!res) {
        throw BackendError("backend transport failure: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw BackendError(fmt::format("backend HTTP {}: {}", res->status,
                                       res->body.substr(0, 200)));
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
        throw BackendError("backend returned malformed completion payload");
    }
    return j["choices"][0]["message"]["content"].get<std::string>();
}

std::string ReplayBackend::complete(const std::string&) {
    if (next_ >= responses_.size()) {
        throw BackendError("replay backend exhausted after " +
                           std::to_string(responses_.size()) + " responses");
    }
    return responses_[next_++];
}

// ---------------------------------------------------------------------------
// Prompt library and rendering

PromptLibrary::PromptLibrary() {
    for (const auto& [name, text] : assets::embedded_prompts()) {
        prompts_[name] = text;
    }
}

PromptLibrary PromptLibrary::from_dir(const fs::path& dir) {
    PromptLibrary lib;  // embedded defaults remain for files not present
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".txt") {
            lib.prompts_[e.path().stem().string()] = util::read_file(e.path());
        }
    }
    return lib;
}

const std::string& PromptLibrary::get(const std::string& name) const {
    auto it = prompts_.find(name);
    if (it == prompts_.end()) {
        throw std::runtime_error("unknown prompt template: " + name);
    }
    return it->second;
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    size_t pos = 0;
    while (pos < tmpl.size()) {
        size_t open = tmpl.find('{', pos);
        if (open == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        size_t close = tmpl.find('}', open + 1);
        if (close == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        std::string name = tmpl.substr(open + 1, close - open - 1);
        auto it = values.find(name);
        if (it != values.end()) {
            out.append(tmpl, pos, open - pos);
            out.append(it->second);  // verbatim; never rescanned
            pos = close + 1;
        } else {
            out.append(tmpl, pos, open + 1 - pos);
            pos = open + 1;
        }
    }
    return out;
}

namespace {

constexpr const char* kNoneProvided = "None provided";

std::string category_guidelines(Category c) {
    switch (c) {
        case Category::web:
            return "Web challenge: serve the application with an appropriate web server "
                   "(Apache/Nginx, or the language's production server) for PHP, Python, or "
                   "Node.js applications. Expose the HTTP port (80 or 8080) and make sure the "
                   "application starts automatically.";
        case Category::pwn:
            return "Binary exploitation challenge: use socat to host binary services on port "
                   "1337 with the appropriate library dependencies installed. Wrap the binary "
                   "in run.sh with stdbuf so input/output is unbuffered, e.g. "
                   "CMD [\"socat\", \"TCP-LISTEN:1337,reuseaddr,fork\", \"EXEC:/challenge/run.sh\"].";
        case Category::crypto:
            return "Cryptography challenge: provide a Python runtime environment for "
                   "cryptographic services. Interactive services are hosted with socat on port "
                   "1337; offline ciphertext-only tasks still ship their files in the image.";
        case Category::rev:
            return "Reverse engineering challenge: provide the downloadable binaries and, when "
                   "the task includes a live component, an analysis service reachable over the "
                   "network on port 1337.";
        case Category::forensics:
            return "Forensics challenge: offer the evidence files for offline analysis. A "
                   "minimal file-serving endpoint is acceptable when players must fetch "
                   "artifacts over the network.";
        case Category::misc:
            return "Miscellaneous challenge: pick the minimal setup that makes the task "
                   "solvable; default to a socat-wrapped service on port 1337 when interaction "
                   "is required.";
    }
    return "";
}

std::string architecture_wrapper(const std::vector<FileAnalysis>& analyses) {
    bool any32 = false;
    bool any64 = false;
    for (const auto& fa : analyses) {
        if (fa.kind == FileKind::elf32) any32 = true;
        if (fa.kind == FileKind::elf64) any64 = true;
    }
    std::string out =
        "- Every executable or script the service runs MUST be wrapped by run.sh with "
        "stdbuf -i0 -o0 -e0 so it interacts without buffering delays.\n";
    if (any32) {
        out +=
            "- 32-bit ELF executables detected: enable the i386 architecture and install "
            "32-bit runtime libraries (e.g. dpkg --add-architecture i386 && apt-get update && "
            "apt-get install -y libc6:i386 libstdc++6:i386) so the binaries load.\n";
    }
    if (any64) {
        out += "- 64-bit ELF executables detected: standard amd64 libraries apply.\n";
    }
    if (!any32 && !any64) {
        out += "- No native executables detected: wrap the interpreter entry point instead.\n";
    }
    return out;
}

std::string file_analysis_summary(const std::vector<FileAnalysis>& analyses) {
    if (analyses.empty()) return kNoneProvided;
    std::string out;
    for (const auto& fa : analyses) {
        out += fa.path;
        out += ": ";
        out += ingest::to_string(fa.kind);
        if (fa.detected_listen_port) {
            out += fmt::format(", detected as listening on port {}", *fa.detected_listen_port);
        }
        if (fa.shebang_issue) {
            out += ", nonstandard shebang interpreter";
        }
        out += "\n";
    }
    if (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

std::string flag_instruction(const ChallengeArtifact& artifact) {
    if (ingest::is_static(artifact.flag_mode)) {
        return "# FLAG HANDLING:\n"
               "This challenge uses a predefined flag verified against a SHA-256 digest "
               "outside the container. DO NOT copy flag.sha256 or any flag checker into the "
               "image; the challenge content itself already embeds whatever the player must "
               "recover.";
    }
    return "# FLAG HANDLING:\n"
           "This challenge uses dynamic flag generation. The flag is provisioned at container "
           "start and MUST be stored in /flag with the permissions 444. Create the path and "
           "set permissions in the Dockerfile (e.g. RUN touch /flag && chmod 444 /flag); the "
           "runtime writes the actual value.";
}

std::string files_joined(const std::vector<std::string>& files) {
    if (files.empty()) return kNoneProvided;
    return util::join(files, "\n");
}

std::string files_json(const std::vector<std::string>& files) {
    return nlohmann::json(files).dump();
}

}  // namespace

std::string render_dockerfile_prompt(const ChallengeArtifact& artifact,
                                     const std::vector<FileAnalysis>& analyses,
                                     const PromptLibrary& lib) {
    std::map<std::string, std::string> values = {
        {"task_name", artifact.name},
        {"category", ingest::to_string(artifact.category)},
        {"available_files", files_joined(artifact.files)},
        {"file_analysis", file_analysis_summary(analyses)},
        {"description", artifact.description.empty() ? kNoneProvided : artifact.description},
        {"rehost_content", artifact.rehost_notes.value_or(kNoneProvided)},
        {"init_content", artifact.init_script.value_or(kNoneProvided)},
        {"flag_instruction", flag_instruction(artifact)},
        {"category_guidelines", category_guidelines(artifact.category)},
        {"architecture_specific_wrapper", architecture_wrapper(analyses)},
    };
    return render_template(lib.get("dockerfile"), values);
}

std::string render_compose_prompt(const ChallengeArtifact& artifact,
                                  const std::string& dockerfile,
                                  const PromptLibrary& lib) {
    if (dockerfile.empty()) throw std::invalid_argument("dockerfile must be non-empty");
    std::map<std::string, std::string> values = {
        {"task_name", artifact.name},
        {"ctf_name", artifact.competition},
        {"available_files", files_joined(artifact.files)},
        {"description", artifact.description.empty() ? kNoneProvided : artifact.description},
        {"dockerfile_content", dockerfile},
    };
    return render_template(lib.get("compose"), values);
}

std::string render_metadata_prompt(const ChallengeArtifact& artifact,
                                   const std::optional<std::string>& compose,
                                   const PromptLibrary& lib) {
    std::string compose_section;
    if (compose) {
        compose_section =
            "# Generated docker-compose.yml (this challenge is server-hosted):\n" + *compose;
    }
    std::map<std::string, std::string> values = {
        {"task_name", artifact.name},
        {"category", ingest::to_string(artifact.category)},
        {"task_files", files_json(artifact.files)},
        {"description", artifact.description.empty() ? kNoneProvided : artifact.description},
        {"rehost_content", artifact.rehost_notes.value_or(kNoneProvided)},
        {"docker_compose_section", compose_section},
    };
    return render_template(lib.get("metadata"), values);
}

// ---------------------------------------------------------------------------
// Fence stripping

namespace {

bool is_opening_fence(const std::string& line) {
    std::string t = trim(line);
    if (t.rfind("```", 0) != 0) return false;
    std::string lang = t.substr(3);
    return std::all_of(lang.begin(), lang.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '+' || c == '-';
    });
}

bool is_closing_fence(const std::string& line) { return trim(line) == "```"; }

// One strip of a complete outer wrapper; returns nullopt when not wrapped.
std::optional<std::string> strip_once(const std::string& text) {
    auto lines = util::split_lines(text);
    size_t first = 0;
    while (first < lines.size() && trim(lines[first]).empty()) ++first;
    size_t last = lines.size();
    while (last > first && trim(lines[last - 1]).empty()) --last;
    if (last - first < 2) return std::nullopt;
    if (!is_opening_fence(lines[first]) || !is_closing_fence(lines[last - 1])) {
        return std::nullopt;
    }
    std::string out;
    for (size_t i = first + 1; i + 1 < last; ++i) {
        out += lines[i];
        out += '\n';
    }
    return out;
}

}  // namespace

std::string strip_code_fences(const std::string& text) {
    std::string cur = text;
    while (auto next = strip_once(cur)) cur = *next;
    return cur;
}

// ---------------------------------------------------------------------------
// Extraction helpers

int extract_exposed_port(const std::string& dockerfile) {
    std::vector<int> found;
    for (const auto& ins : util::parse_dockerfile(dockerfile)) {
        if (ins.keyword != "EXPOSE") continue;
        for (const auto& tok : util::split_ws(ins.args)) {
            std::string num = tok.substr(0, tok.find('/'));  // strip "/tcp"
            try {
                found.push_back(std::stoi(num));
            } catch (...) {
            }
        }
    }
    if (found.empty()) {
        throw PortExtractionError("no EXPOSE directive found", found);
    }
    if (found.size() > 1) {
        std::string msg = "multiple exposed ports:";
        for (int p : found) msg += " " + std::to_string(p);
        throw PortExtractionError(msg, found);
    }
    return found[0];
}

std::string extract_network_alias(const std::string& compose) {
    try {
        YAML::Node root = YAML::Load(compose);
        auto services = root["services"];
        if (!services || !services.IsMap()) return "";
        for (const auto& svc : services) {
            auto networks = svc.second["networks"];
            if (!networks) continue;
            auto ctfnet = networks["ctfnet"];
            if (!ctfnet) continue;
            auto aliases = ctfnet["aliases"];
            if (aliases && aliases.IsSequence() && aliases.size() > 0) {
                return aliases[0].as<std::string>();
            }
        }
    } catch (const YAML::Exception&) {
    }
    return "";
}

bool is_dns_compliant_alias(const std::string& alias) {
    if (alias.empty() || alias.size() > 253) return false;
    size_t start = 0;
    while (start <= alias.size()) {
        size_t dot = alias.find('.', start);
        size_t end = dot == std::string::npos ? alias.size() : dot;
        size_t len = end - start;
        if (len == 0 || len > 63) return false;
        for (size_t i = start; i < end; ++i) {
            char c = alias[i];
            bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
            if (!ok) return false;
        }
        if (alias[start] == '-' || alias[end - 1] == '-') return false;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Lint rules

namespace {

bool creates_run_sh(const std::string& run_args) {
    // printf/echo ... > run.sh (or >>), possibly inside && chains
    if (run_args.find("run.sh") == std::string::npos) return false;
    bool has_writer = run_args.find("printf") != std::string::npos ||
                      run_args.find("echo") != std::string::npos;
    bool redirects = run_args.find('>') != std::string::npos;
    return has_writer && redirects;
}

bool run_sh_content_ok(const std::string& run_args) {
    if (run_args.find("stdbuf -i0 -o0 -e0") != std::string::npos) return true;
    // Background service + socat proxy pattern
    bool background = run_args.find("&") != std::string::npos;
    bool proxy = run_args.find("socat") != std::string::npos &&
                 run_args.find("TCP-LISTEN:") != std::string::npos;
    return background && proxy;
}

}  // namespace

std::vector<LintViolation> lint_dockerfile(const std::string& dockerfile,
                                           const ChallengeArtifact& artifact,
                                           bool server) {
    std::vector<LintViolation> v;
    auto instructions = util::parse_dockerfile(dockerfile);

    // no-heredoc
    for (const auto& ins : instructions) {
        if (ins.keyword == "RUN" && ins.args.find("<<") != std::string::npos) {
            v.push_back({"no-heredoc",
                         "RUN uses heredoc syntax; create files with printf/echo instead",
                         ins.line});
        }
    }

    // no-secret-copy
    for (const auto& ins : instructions) {
        if (ins.keyword != "COPY" && ins.keyword != "ADD") continue;
        if (contains_ci(ins.args, "flag.sha256") || contains_ci(ins.args, "flagcheck")) {
            v.push_back({"no-secret-copy",
                         "COPY/ADD references flag verification files: " + ins.args,
                         ins.line});
        }
    }

    // runsh-wrapper (server challenges only)
    if (server) {
        bool found_runsh = false;
        bool content_ok = false;
        for (const auto& ins : instructions) {
            if (ins.keyword == "RUN" && creates_run_sh(ins.args)) {
                found_runsh = true;
                if (run_sh_content_ok(ins.args)) content_ok = true;
            }
        }
        if (!found_runsh) {
            v.push_back({"runsh-wrapper",
                         "server challenge must create a run.sh wrapper via printf/echo",
                         std::nullopt});
        } else if (!content_ok) {
            v.push_back({"runsh-wrapper",
                         "run.sh must use 'stdbuf -i0 -o0 -e0' or a background service with a "
                         "socat TCP-LISTEN proxy",
                         std::nullopt});
        }
    }

    // flag-perms (dynamic-flag bundles)
    if (!ingest::is_static(artifact.flag_mode)) {
        const auto& flag_path = std::get<ingest::DynamicFlag>(artifact.flag_mode).flag_path;
        bool references = dockerfile.find(flag_path) != std::string::npos;
        bool perms = false;
        for (const char* pat : {"chmod 444", "chmod 0444", "chmod a=r"}) {
            size_t at = dockerfile.find(pat);
            while (at != std::string::npos) {
                size_t rest = at + std::strlen(pat);
                if (dockerfile.find(flag_path, rest) != std::string::npos ||
                    dockerfile.rfind(flag_path, at) != std::string::npos) {
                    perms = true;
                    break;
                }
                at = dockerfile.find(pat, at + 1);
            }
            if (perms) break;
        }
        if (!references || !perms) {
            v.push_back({"flag-perms",
                         "dynamic-flag bundle must reference " + flag_path +
                             " with permissions 444",
                         std::nullopt});
        }
    }

    // expose-port
    try {
        extract_exposed_port(dockerfile);
    } catch (const PortExtractionError& e) {
        v.push_back({"expose-port", e.what(), std::nullopt});
    }

    return v;
}

std::vector<LintViolation> lint_compose(const std::string& compose) {
    std::vector<LintViolation> v;

    YAML::Node root;
    try {
        root = YAML::Load(compose);
    } catch (const YAML::Exception& e) {
        v.push_back({"ctfnet", std::string("compose is not valid YAML: ") + e.what(),
                     std::nullopt});
        return v;
    }
    if (!root.IsMap()) {
        v.push_back({"ctfnet", "compose is not a YAML mapping", std::nullopt});
        return v;
    }

    bool external_ok = false;
    auto networks = root["networks"];
    if (networks && networks.IsMap()) {
        auto ctfnet = networks["ctfnet"];
        if (ctfnet && ctfnet.IsMap()) {
            auto ext = ctfnet["external"];
            if (ext && ext.IsScalar() && ext.as<std::string>() == "true") external_ok = true;
        }
    }

    bool service_joins = false;
    std::string alias = extract_network_alias(compose);
    auto services = root["services"];
    if (services && services.IsMap()) {
        for (const auto& svc : services) {
            auto nets = svc.second["networks"];
            if (!nets) continue;
            if (nets.IsMap() && nets["ctfnet"]) service_joins = true;
            if (nets.IsSequence()) {
                for (const auto& n : nets) {
                    if (n.IsScalar() && n.as<std::string>() == "ctfnet") service_joins = true;
                }
            }
        }
    }

    if (!external_ok || !service_joins) {
        v.push_back({"ctfnet",
                     "compose must join the external network \"ctfnet\"",
                     std::nullopt});
    }
    if (service_joins && alias.empty()) {
        v.push_back({"ctfnet", "service joins ctfnet but declares no alias", std::nullopt});
    }

    if (!alias.empty()) {
        if (!is_dns_compliant_alias(alias)) {
            v.push_back({"alias-dns", "alias is not DNS-compliant: " + alias, std::nullopt});
        } else if (alias == "web.chal.custom.io") {
            v.push_back({"alias-dns", "alias is a generic placeholder: " + alias, std::nullopt});
        }
    }
    return v;
}

ChallengeMetaParse parse_challenge_meta(const std::string& text) {
    ChallengeMetaParse out;
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        out.violations.push_back({"meta-schema", "metadata is not a JSON object", std::nullopt});
        return out;
    }

    auto need_string = [&](const char* key) -> std::optional<std::string> {
        if (!j.contains(key) || !j[key].is_string()) {
            out.violations.push_back(
                {"meta-schema", fmt::format("missing or non-string field \"{}\"", key),
                 std::nullopt});
            return std::nullopt;
        }
        return j[key].get<std::string>();
    };

    ChallengeMeta meta;
    if (auto s = need_string("name")) meta.name = *s;
    if (auto s = need_string("description")) meta.description = *s;
    if (auto s = need_string("category")) meta.category = *s;
    if (auto s = need_string("box")) meta.box = *s;
    if (auto s = need_string("internal_port")) meta.internal_port = *s;
    if (auto s = need_string("flag")) meta.flag = *s;

    if (!j.contains("files") || !j["files"].is_array()) {
        out.violations.push_back({"meta-schema", "missing or non-array field \"files\"",
                                  std::nullopt});
    } else {
        for (const auto& f : j["files"]) {
            if (!f.is_string()) {
                out.violations.push_back(
                    {"meta-schema", "files must be an array of strings", std::nullopt});
                break;
            }
            meta.files.push_back(f.get<std::string>());
        }
    }
    if (!j.contains("compose") || !j["compose"].is_boolean()) {
        out.violations.push_back({"meta-schema", "missing or non-boolean field \"compose\"",
                                  std::nullopt});
    } else {
        meta.compose = j["compose"].get<bool>();
    }

    if (contains_ci(meta.description, "flagcheck")) {
        out.violations.push_back(
            {"meta-schema", "description must not mention the flag checker", std::nullopt});
    }

    if (out.violations.empty()) out.meta = std::move(meta);
    return out;
}

std::vector<LintViolation> lint_metadata_text(const std::string& metadata_text,
                                              const ChallengeArtifact& artifact) {
    auto parsed = parse_challenge_meta(metadata_text);
    std::vector<LintViolation> v = std::move(parsed.violations);
    if (parsed.meta) {
        std::set<std::string> allowed(artifact.files.begin(), artifact.files.end());
        for (const auto& f : parsed.meta->files) {
            if (!allowed.count(f)) {
                v.push_back({"file-list",
                             "metadata lists a file not in the artifact: " + f,
                             std::nullopt});
            }
        }
    }
    return v;
}

LintReport lint_bundle(const EnvironmentBundle& bundle, const ChallengeArtifact& artifact) {
    std::vector<LintViolation> v;
    auto dv = lint_dockerfile(bundle.dockerfile, artifact, bundle.metadata.compose);
    v.insert(v.end(), dv.begin(), dv.end());
    auto cv = lint_compose(bundle.compose);
    v.insert(v.end(), cv.begin(), cv.end());
    auto mv = lint_metadata_text(bundle.metadata_text(), artifact);
    v.insert(v.end(), mv.begin(), mv.end());
    return LintReport::from(std::move(v));
}

// ---------------------------------------------------------------------------
// Generation driver

namespace {

std::string violations_feedback(const std::vector<LintViolation>& violations) {
    std::string out =
        "\n\n# PREVIOUS ATTEMPT FAILED VALIDATION\n"
        "The last response violated these rules; regenerate the complete file and fix every "
        "violation:\n";
    for (const auto& viol : violations) {
        out += fmt::format("- [{}] {}\n", viol.rule_id, viol.message);
    }
    return out;
}

std::string sanitize_for_path(const std::string& id) {
    std::string out;
    for (char c : id) {
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    }
    return out;
}

// One lint-retry loop for a single stage.
std::string run_stage(const std::string& stage, const std::string& base_prompt,
                      GenerationBackend& backend, const GenerateOptions& options,
                      const ChallengeArtifact& artifact,
                      const std::function<std::vector<LintViolation>(const std::string&)>& lint,
                      GenerateStats* stats) {
    std::string prompt = base_prompt;
    std::vector<LintViolation> last;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        std::string raw;
        std::optional<fs::path> cache_file;
        if (options.cache_dir) {
            cache_file = *options.cache_dir / sanitize_for_path(artifact.id) /
                         (stage + "-" + util::sha256_hex(prompt).substr(0, 12) + ".txt");
            if (auto cached = util::read_file_opt(*cache_file)) {
                raw = *cached;
                if (stats) ++stats->cache_hits;
            }
        }
        if (raw.empty()) {
            try {
                raw = backend.complete(prompt);
            } catch (const BackendError& e) {
                throw BackendError(fmt::format("stage {}: {}", stage, e.what()));
            }
            if (stats) ++stats->backend_calls;
            if (cache_file) util::write_file_atomic(*cache_file, raw);
        }

        std::string text = strip_code_fences(raw);
        last = lint(text);
        if (last.empty()) return text;
        if (stats) ++stats->retries;
        prompt = base_prompt + violations_feedback(last);
    }
    throw GenerationFailed(stage, LintReport::from(std::move(last)));
}

}  // namespace

EnvironmentBundle generate_bundle(const ChallengeArtifact& artifact,
                                  const std::vector<FileAnalysis>& analyses,
                                  GenerationBackend& backend,
                                  const GenerateOptions& options,
                                  const PromptLibrary& lib,
                                  GenerateStats* stats) {
    if (options.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
    bool server = ingest::server_needed(artifact, analyses);

    std::string dockerfile = run_stage(
        "dockerfile", render_dockerfile_prompt(artifact, analyses, lib), backend, options,
        artifact,
        [&](const std::string& text) { return lint_dockerfile(text, artifact, server); },
        stats);

    std::string compose = run_stage(
        "compose", render_compose_prompt(artifact, dockerfile, lib), backend, options, artifact,
        [&](const std::string& text) { return lint_compose(text); }, stats);

    std::string metadata_text = run_stage(
        "metadata",
        render_metadata_prompt(artifact,
                               server ? std::optional<std::string>(compose) : std::nullopt, lib),
        backend, options, artifact,
        [&](const std::string& text) { return lint_metadata_text(text, artifact); }, stats);

    EnvironmentBundle bundle;
    bundle.dockerfile = dockerfile;
    bundle.compose = compose;
    auto parsed = parse_challenge_meta(metadata_text);
    bundle.metadata = *parsed.meta;  // stage lint guarantees parseability
    // Category ownership: the artifact's category always wins.
    bundle.metadata.category = ingest::to_string(artifact.category);
    bundle.metadata.compose = server;
    bundle.exposed_port = extract_exposed_port(dockerfile);
    bundle.network_alias = extract_network_alias(compose);
    return bundle;
}

void write_bundle(const EnvironmentBundle& bundle, const fs::path& dir) {
    fs::create_directories(dir);
    util::write_file_atomic(dir / "Dockerfile", bundle.dockerfile);
    util::write_file_atomic(dir / "docker-compose.yml", bundle.compose);
    util::write_file_atomic(dir / "challenge.json", bundle.metadata_text());
}

EnvironmentBundle read_bundle(const fs::path& dir) {
    EnvironmentBundle bundle;
    bundle.dockerfile = util::read_file(dir / "Dockerfile");
    bundle.compose = util::read_file(dir / "docker-compose.yml");
    auto parsed = parse_challenge_meta(util::read_file(dir / "challenge.json"));
    if (!parsed.meta) {
        throw std::runtime_error("invalid challenge.json in " + dir.string());
    }
    bundle.metadata = *parsed.meta;
    bundle.exposed_port = extract_exposed_port(bundle.dockerfile);
    bundle.network_alias = extract_network_alias(bundle.compose);
    return bundle;
}

}  // namespace ctfkit::forge
