#pragma once

#include <string>
#include <vector>

namespace ctfkit::util {

struct TarEntry {
    std::string path;     // relative, '/'-separated
    std::string content;
    unsigned mode = 0644;
};

// Minimal ustar archive; enough for container-engine build contexts and
// single-file uploads. Paths must fit the 100-byte name field.
std::string make_tar(const std::vector<TarEntry>& entries);

}  // namespace ctfkit::util
