#pragma once

#include "ctfkit/ingest.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ctfkit::forge {

struct ChallengeMeta {
    std::string name;
    std::string description;
    std::string category;
    std::vector<std::string> files;
    std::string box;            // may be empty
    std::string internal_port;  // may be empty
    bool compose = false;
    std::string flag;

    // Canonical form: stable field order, 2-space indent, trailing newline.
    std::string to_canonical_json() const;
};

struct EnvironmentBundle {
    std::string dockerfile;
    std::string compose;
    ChallengeMeta metadata;
    int exposed_port = 0;
    std::string network_alias;

    std::string metadata_text() const { return metadata.to_canonical_json(); }
    // Stable digest over the three rendered files.
    std::string content_hash() const;
};

struct LintViolation {
    std::string rule_id;
    std::string message;
    std::optional<int> line;
};

struct LintReport {
    bool passed = false;
    std::vector<LintViolation> violations;

    static LintReport from(std::vector<LintViolation> violations);
};

// Untrusted text generator. Implementations: remote chat endpoint, scripted
// replay for tests. Throws BackendError on transport problems.
class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class HttpChatBackend : public GenerationBackend {
public:
    struct Config {
        std::string base_url;   // e.g. http://host:port
        std::string api_path = "/v1/chat/completions";
        std::string model;
        std::string api_key;    // optional bearer token
        double temperature = 0.0;
        int timeout_s = 120;
    };
    explicit HttpChatBackend(Config cfg) : cfg_(std::move(cfg)) {}
    std::string complete(const std::string& prompt) override;

private:
    Config cfg_;
};

// Replays a fixed response sequence; throws BackendError when exhausted.
class ReplayBackend : public GenerationBackend {
public:
    explicit ReplayBackend(std::vector<std::string> responses)
        : responses_(std::move(responses)) {}
    std::string complete(const std::string& prompt) override;
    size_t calls() const { return next_; }

private:
    std::vector<std::string> responses_;
    size_t next_ = 0;
};

// Prompt templates; defaults come from the compiled-in assets, overridable
// from a directory of .txt files.
class PromptLibrary {
public:
    PromptLibrary();  // embedded defaults
    static PromptLibrary from_dir(const std::filesystem::path& dir);
    const std::string& get(const std::string& name) const;

private:
    std::map<std::string, std::string> prompts_;
};

// Single-pass placeholder substitution: inserted values are embedded verbatim
// and never rescanned for placeholders.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values);

std::string render_dockerfile_prompt(const ingest::ChallengeArtifact& artifact,
                                     const std::vector<ingest::FileAnalysis>& analyses,
                                     const PromptLibrary& lib);
std::string render_compose_prompt(const ingest::ChallengeArtifact& artifact,
                                  const std::string& dockerfile,
                                  const PromptLibrary& lib);
std::string render_metadata_prompt(const ingest::ChallengeArtifact& artifact,
                                   const std::optional<std::string>& compose,
                                   const PromptLibrary& lib);

// Removes complete leading/trailing ``` fence wrappers (repeatedly, so the
// operation is idempotent); interior fences and unfenced text are untouched.
std::string strip_code_fences(const std::string& text);

struct PortExtractionError : std::runtime_error {
    PortExtractionError(const std::string& msg, std::vector<int> found)
        : std::runtime_error(msg), ports_found(std::move(found)) {}
    std::vector<int> ports_found;
};

// The single EXPOSE'd port; throws PortExtractionError on zero or many.
int extract_exposed_port(const std::string& dockerfile);

// First alias on the ctfnet network, empty if none.
std::string extract_network_alias(const std::string& compose);

bool is_dns_compliant_alias(const std::string& alias);

// Per-file rule subsets; generate_bundle lints stage by stage.
std::vector<LintViolation> lint_dockerfile(const std::string& dockerfile,
                                           const ingest::ChallengeArtifact& artifact,
                                           bool server);
std::vector<LintViolation> lint_compose(const std::string& compose);
std::vector<LintViolation> lint_metadata_text(const std::string& metadata_text,
                                              const ingest::ChallengeArtifact& artifact);

// All nine rules over a complete bundle. Pure: same bundle, same report.
LintReport lint_bundle(const EnvironmentBundle& bundle,
                       const ingest::ChallengeArtifact& artifact);

struct ChallengeMetaParse {
    std::optional<ChallengeMeta> meta;
    std::vector<LintViolation> violations;  // rule meta-schema
};
ChallengeMetaParse parse_challenge_meta(const std::string& text);

struct GenerationFailed : std::runtime_error {
    GenerationFailed(const std::string& stage_, LintReport report_)
        : std::runtime_error("generation failed at stage " + stage_),
          stage(stage_), report(std::move(report_)) {}
    std::string stage;
    LintReport report;
};

struct GenerateOptions {
    int max_retries = 3;
    // Stage outputs cached on disk keyed by (artifact id, stage, prompt hash).
    std::optional<std::filesystem::path> cache_dir;
};

struct GenerateStats {
    int retries = 0;
    int backend_calls = 0;
    int cache_hits = 0;
};

// Three stages in order (dockerfile -> compose -> metadata); each raw output
// is fence-stripped then linted; failures retried with violations appended
// to the prompt. The returned bundle always passes lint_bundle.
EnvironmentBundle generate_bundle(const ingest::ChallengeArtifact& artifact,
                                  const std::vector<ingest::FileAnalysis>& analyses,
                                  GenerationBackend& backend,
                                  const GenerateOptions& options = {},
                                  const PromptLibrary& lib = PromptLibrary(),
                                  GenerateStats* stats = nullptr);

// Writes Dockerfile, docker-compose.yml and challenge.json into dir.
void write_bundle(const EnvironmentBundle& bundle, const std::filesystem::path& dir);
EnvironmentBundle read_bundle(const std::filesystem::path& dir);

}  // namespace ctfkit::forge
