#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace gjepa {

/// Lowercase hex SHA-1 of `bytes`.
std::string sha1_hex(std::string_view bytes);

/// Git blob id: SHA-1 over "blob <size>\0" followed by the content, so the
/// value matches `git hash-object`.
std::string git_blob_hash(std::string_view bytes);

std::string read_file_bytes(const std::filesystem::path& path);
std::string git_blob_hash_file(const std::filesystem::path& path);

}  // namespace gjepa
