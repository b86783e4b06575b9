#pragma once

#include <map>
#include <string>

namespace ctfkit::assets {

// Prompt texts compiled in from assets/prompts/*.txt, keyed by file stem.
const std::map<std::string, const char*>& embedded_prompts();

}  // namespace ctfkit::assets
