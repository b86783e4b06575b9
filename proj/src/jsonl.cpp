#include "ctfkit/util/jsonl.hpp"

#include "ctfkit/util/fs.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace ctfkit::util {

std::vector<json> read_jsonl(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot read: " + p.string());
    std::vector<json> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw std::runtime_error(p.string() + ":" + std::to_string(lineno) +
                                     ": bad JSON line: " + e.what());
        }
    }
    return out;
}

void append_jsonl(const std::filesystem::path& p, const json& obj) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::app);
    if (!out) throw std::runtime_error("cannot append: " + p.string());
    out << obj.dump() << '\n';
}

void write_jsonl_atomic(const std::filesystem::path& p, const std::vector<ojson>& rows) {
    std::string body;
    for (const auto& r : rows) {
        body += r.dump();
        body += '\n';
    }
    write_file_atomic(p, body);
}

void log_event(const std::string& level, const std::string& event, json fields) {
    static std::mutex mu;
    auto now = std::chrono::system_clock::now().time_since_epoch();
    json rec = {
        {"ts_ms", std::chrono::duration_cast<std::chrono::milliseconds>(now).count()},
        {"level", level},
        {"event", event},
    };
    for (auto& [k, v] : fields.items()) rec[k] = v;
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << rec.dump() << std::endl;
}

}  // namespace ctfkit::util
