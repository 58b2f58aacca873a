#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace polyuct {

inline constexpr const char* kToolVersion = "0.1.0";

/// Shortest decimal form that round-trips a double. CSV outputs must be
/// byte-identical across reruns, so all floating output funnels through here.
std::string fmt_double(double x);

using CsvRow = std::vector<std::string>;

/// Writes header + rows to a temp file in the target directory, then renames
/// into place. Comma-separated, '.' decimal point, LF line endings.
void write_csv_atomic(const std::filesystem::path& path, const CsvRow& header,
                      const std::vector<CsvRow>& rows);

std::vector<CsvRow> read_csv(const std::filesystem::path& path);

/// FNV-1a over raw bytes; used for the manifest's config hash.
std::uint64_t fnv1a64(const std::string& bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace polyuct
