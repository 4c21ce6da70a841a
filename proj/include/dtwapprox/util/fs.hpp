#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dtwapprox {

// Writes content to a sibling temp file, then renames it over the target.
// Readers never observe a half-written file and a failed run leaves the
// previous version intact.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);
void atomic_write_file(const std::filesystem::path& path, const void* data, std::size_t size);

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

// FNV-1a over a byte range; used to fingerprint parameter payloads.
std::uint64_t fnv1a64(const void* data, std::size_t size);

// snprintf-backed float formatting. %.9g round-trips any f32 exactly;
// %.17g round-trips any f64.
std::string fmt_g9(double v);
std::string fmt_g17(double v);

}  // namespace dtwapprox
