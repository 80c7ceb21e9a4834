#pragma once

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace metriplex::io {

/// Shortest round-trip text for a double; identical across runs.
std::string format_double(double v);

/// Rows of numbers under a fixed header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(const std::vector<double>& row);
  std::string str() const;
  std::size_t rows() const { return rows_; }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string body_;
};

/// Write through a temporary file in the same directory, then rename.
void write_atomic(const std::filesystem::path& path, const std::string& data);

/// Raw little-endian float64 array.
std::string pack_f64(const std::vector<double>& values);
std::vector<double> unpack_f64(const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(const std::string& data);

/// Records every file a run writes, then writes itself last.
class RunManifest {
 public:
  RunManifest(std::filesystem::path dir, nlohmann::json config);

  const std::filesystem::path& dir() const { return dir_; }
  /// Write an artifact atomically and record it.
  void write(const std::string& name, const std::string& data);
  void set(const std::string& key, nlohmann::json value);
  /// Finalise with a status string; returns the manifest path.
  std::filesystem::path finish(const std::string& status);

 private:
  std::filesystem::path dir_;
  nlohmann::json config_;
  nlohmann::json files_ = nlohmann::json::array();
  nlohmann::json extra_ = nlohmann::json::object();
  std::chrono::steady_clock::time_point start_;
};

constexpr const char* kVersion = "1.0.0";
constexpr const char* kManifestName = "manifest.json";

}  // namespace metriplex::io
