#pragma once

#include <string>
#include <string_view>

namespace exas {

// Lowercase hex SHA-256 of bytes (64 characters).
std::string sha256_hex(std::string_view bytes);

bool is_hex_digest(std::string_view s) noexcept;

}  // namespace exas
