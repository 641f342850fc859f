#pragma once

#include "common.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace decovid {

/// Header "date,<names...>", one row per month with ISO yyyy-mm dates.
void write_dated_csv(const std::filesystem::path& path, std::span<const YearMonth> dates,
                     const std::vector<std::string>& names, const Eigen::MatrixXd& values);

/// Plain table; every row must match the header width.
void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

void write_text_file(const std::filesystem::path& path, const std::string& text);

[[nodiscard]] std::string sha256_hex(std::string_view bytes);
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

/// manifest.json: command, configuration echo, seed and a SHA-256 per output file.
void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const std::map<std::string, std::string>& config, std::uint64_t seed,
                    const std::vector<std::filesystem::path>& outputs);

}  // namespace decovid
