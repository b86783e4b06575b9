#pragma once

#include <string>
#include <vector>

namespace ctfkit::util {

struct DockerInstruction {
    std::string keyword;  // uppercased
    std::string args;     // remainder, continuations joined
    int line = 0;         // 1-based line of the keyword
};

// Joins backslash continuations, skips blank lines and '#' comments.
std::vector<DockerInstruction> parse_dockerfile(const std::string& text);

// CMD/ENTRYPOINT argv: JSON-array exec form or shell form ("sh -c ...").
std::vector<std::string> docker_cmd_argv(const std::string& args);

}  // namespace ctfkit::util
