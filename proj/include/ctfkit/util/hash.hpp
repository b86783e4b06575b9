#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ctfkit::util {

// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

// Keyed hash (HMAC-SHA256), lowercase hex.
std::string hmac_sha256_hex(std::string_view key, std::string_view data);

std::string to_hex(const unsigned char* data, size_t len);

// True when the string is exactly 64 lowercase hex characters.
bool is_sha256_hex(std::string_view s);

// Stable 64-bit value from arbitrary bytes (first 8 bytes of SHA-256,
// big-endian). Used to derive RNG seeds from structured inputs.
uint64_t fold_to_u64(std::string_view data);

}  // namespace ctfkit::util
