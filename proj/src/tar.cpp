#include "ctfkit/util/tar.hpp"

#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace ctfkit::util {

namespace {

void write_octal(char* field, size_t width, unsigned long value) {
    // width includes the trailing NUL
    std::snprintf(field, width, "%0*lo", static_cast<int>(width - 1), value);
}

}  // namespace

std::string make_tar(const std::vector<TarEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        if (e.path.size() > 99) {
            throw std::runtime_error("tar path too long: " + e.path);
        }
        char hdr[512];
        std::memset(hdr, 0, sizeof hdr);
        std::memcpy(hdr, e.path.data(), e.path.size());
        write_octal(hdr + 100, 8, e.mode);
        write_octal(hdr + 108, 8, 0);  // uid
        write_octal(hdr + 116, 8, 0);  // gid
        write_octal(hdr + 124, 12, e.content.size());
        write_octal(hdr + 136, 12, 0);  // mtime
        std::memset(hdr + 148, ' ', 8);
        hdr[156] = '0';  // regular file
        std::memcpy(hdr + 257, "ustar", 5);
        hdr[263] = '0';
        hdr[264] = '0';
        unsigned chksum = 0;
        for (unsigned char c : hdr) chksum += c;
        write_octal(hdr + 148, 7, chksum);
        hdr[155] = ' ';
        out.append(hdr, sizeof hdr);
        out.append(e.content);
        size_t pad = (512 - (e.content.size() % 512)) % 512;
        out.append(pad, '\0');
    }
    out.append(1024, '\0');  // end-of-archive
    return out;
}

}  // namespace ctfkit::util
