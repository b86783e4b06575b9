#include "ctfkit/util/dockerfile.hpp"

#include "ctfkit/util/text.hpp"

#include <nlohmann/json.hpp>

namespace ctfkit::util {

std::vector<DockerInstruction> parse_dockerfile(const std::string& text) {
    std::vector<DockerInstruction> out;
    auto lines = split_lines(text);
    size_t i = 0;
    while (i < lines.size()) {
        std::string t = trim(lines[i]);
        if (t.empty() || t[0] == '#') {
            ++i;
            continue;
        }
        int start_line = static_cast<int>(i) + 1;
        std::string logical = lines[i];
        while (!logical.empty() && logical.back() == '\\' && i + 1 < lines.size()) {
            logical.pop_back();
            ++i;
            logical += "\n" + lines[i];
        }
        ++i;

        std::string stripped = trim(logical);
        size_t sp = stripped.find_first_of(" \t");
        DockerInstruction ins;
        ins.line = start_line;
        if (sp == std::string::npos) {
            ins.keyword = to_lower(stripped);
            ins.args = "";
        } else {
            ins.keyword = to_lower(stripped.substr(0, sp));
            ins.args = trim(stripped.substr(sp + 1));
        }
        for (auto& c : ins.keyword) c = static_cast<char>(::toupper(static_cast<unsigned char>(c)));
        out.push_back(std::move(ins));
    }
    return out;
}

std::vector<std::string> docker_cmd_argv(const std::string& args) {
    std::string t = trim(args);
    if (!t.empty() && t[0] == '[') {
        auto j = nlohmann::json::parse(t, nullptr, false);
        if (j.is_array()) {
            std::vector<std::string> argv;
            for (const auto& e : j) {
                if (e.is_string()) argv.push_back(e.get<std::string>());
            }
            if (!argv.empty()) return argv;
        }
    }
    return {"/bin/sh", "-c", t};
}

}  // namespace ctfkit::util
