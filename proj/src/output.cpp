#include "output.hpp"

#include "ingest.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <fstream>
#include <memory>

namespace decovid {

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorCode::not_found, fmt::format("cannot create directory {}: {}", path.parent_path().string(), ec.message()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::not_found, fmt::format("cannot open {} for writing", path.string()));
  out << text;
  if (!out) fail(ErrorCode::internal, fmt::format("write to {} failed", path.string()));
}

void write_dated_csv(const std::filesystem::path& path, std::span<const YearMonth> dates,
                     const std::vector<std::string>& names, const Eigen::MatrixXd& values) {
  if (static_cast<Eigen::Index>(dates.size()) != values.rows() ||
      static_cast<Eigen::Index>(names.size()) != values.cols())
    fail(ErrorCode::invalid_argument, fmt::format("{}: table shape does not match its labels", path.string()));
  std::string s = "date";
  for (const auto& n : names) s += "," + n;
  s += "\n";
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    s += dates[static_cast<std::size_t>(t)].iso();
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      s += ',';
      if (!is_missing(values(t, j))) s += format_double(values(t, j));
    }
    s += '\n';
  }
  write_text_file(path, s);
}

void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::string s;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) s += (j ? "," : "") + cells[j];
    s += '\n';
  };
  line(header);
  for (const auto& r : rows) {
    if (r.size() != header.size())
      fail(ErrorCode::internal, fmt::format("{}: row width {} differs from header {}", path.string(), r.size(), header.size()));
    line(r);
  }
  write_text_file(path, s);
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    fail(ErrorCode::internal, "sha256 failed");
  std::string hex;
  for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const std::map<std::string, std::string>& config, std::uint64_t seed,
                    const std::vector<std::filesystem::path>& outputs) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  nlohmann::json files = nlohmann::json::object();
  for (const auto& p : outputs) files[p.filename().string()] = sha256_file(p);
  j["outputs"] = files;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace decovid
