#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace ctfkit::util {

using json = nlohmann::json;
// Preserves insertion order; exports rely on stable field order.
using ojson = nlohmann::ordered_json;

std::vector<json> read_jsonl(const std::filesystem::path& p);

void append_jsonl(const std::filesystem::path& p, const json& obj);

// Whole-file write through a temp file + rename.
void write_jsonl_atomic(const std::filesystem::path& p, const std::vector<ojson>& rows);

// Structured event log: one JSON object per line on stderr.
void log_event(const std::string& level, const std::string& event, json fields = json::object());

}  // namespace ctfkit::util
