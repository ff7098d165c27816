#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace nego {

/// Write-to-temp then atomic rename; a failed run never leaves a partial
/// file behind. Creates parent directories as needed.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

std::uint64_t fnv1a64(std::string_view s);
std::string hash_hex(std::string_view s);

} // namespace nego
