#pragma once

#include <filesystem>
#include <string>

namespace ttfm::cli {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);

/// Rewrites <dir>/manifest.json listing every regular file under dir
/// (except the manifest itself) with its size and SHA-256, sorted by path.
void write_manifest(const std::filesystem::path& dir);

}  // namespace ttfm::cli
