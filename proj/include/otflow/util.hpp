#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace otflow {

/// Worker count: hardware concurrency capped by OTFLOW_THREADS (if set).
unsigned worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. fn must only
/// write to slots owned by i, so results never depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Shortest round-trip decimal for a double ("%.17g"); non-finite as inf/-inf/nan.
std::string format_double(double x);

/// Parses a decimal produced by format_double (also accepts inf/nan spellings).
bool parse_double(const std::string& s, double& out);

/// Lowercase hex SHA-256 of bytes / of a file's content.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Writes content to path via a temporary sibling file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// FNV-1a over raw bytes; used for cheap in-memory identities.
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace otflow
