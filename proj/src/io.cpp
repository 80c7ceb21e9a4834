#include "metriplex/io.hpp"

#include <fmt/format.h>
#include <openssl/sha.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace metriplex::io {

namespace fs = std::filesystem;

std::string format_double(double v) { return fmt::format("{}", v); }

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) body_ += ',';
    body_ += header[i];
  }
  body_ += '\n';
}

void CsvTable::add_row(const std::vector<double>& row) {
  if (row.size() != columns_)
    throw std::invalid_argument(fmt::format(
        "CSV row has {} values but the header has {}", row.size(), columns_));
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) body_ += ',';
    body_ += format_double(row[i]);
  }
  body_ += '\n';
  ++rows_;
}

std::string CsvTable::str() const { return body_; }

void write_atomic(const fs::path& path, const std::string& data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", tmp.string()));
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw std::runtime_error(fmt::format("short write to '{}'", tmp.string()));
  }
  fs::rename(tmp, path);
}

std::string pack_f64(const std::vector<double>& values) {
  static_assert(std::endian::native == std::endian::little,
                "binary artifacts assume a little-endian host");
  std::string out(values.size() * sizeof(double), '\0');
  if (!values.empty()) std::memcpy(out.data(), values.data(), out.size());
  return out;
}

std::vector<double> unpack_f64(const std::string& bytes) {
  if (bytes.size() % sizeof(double) != 0)
    throw std::invalid_argument("binary array length is not a multiple of 8");
  std::vector<double> out(bytes.size() / sizeof(double));
  if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  std::string hex;
  for (unsigned char b : digest) hex += fmt::format("{:02x}", b);
  return hex;
}

RunManifest::RunManifest(fs::path dir, nlohmann::json config)
    : dir_(std::move(dir)),
      config_(std::move(config)),
      start_(std::chrono::steady_clock::now()) {
  fs::create_directories(dir_);
}

void RunManifest::write(const std::string& name, const std::string& data) {
  write_atomic(dir_ / name, data);
  files_.push_back(
      {{"name", name}, {"bytes", data.size()}, {"sha256", sha256_hex(data)}});
}

void RunManifest::set(const std::string& key, nlohmann::json value) {
  extra_[key] = std::move(value);
}

fs::path RunManifest::finish(const std::string& status) {
  const double wall = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start_).count();
  nlohmann::json m;
  m["version"] = kVersion;
  m["status"] = status;
  m["config"] = config_;
  m["files"] = files_;
  m["timings"] = {{"wall_seconds", wall}};
  for (auto& [k, v] : extra_.items()) m[k] = v;
  const fs::path path = dir_ / kManifestName;
  write_atomic(path, m.dump(2) + "\n");
  return path;
}

}  // namespace metriplex::io
