#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace latte::cli {

// Hex SHA-256 of a file's bytes. Throws latte::Error when it cannot be read.
std::string sha256_file(const std::filesystem::path& path);

// Record of one CLI run: the resolved config, every seed used, hashes of the
// files read, the files written and wall-clock timing.
class RunManifest {
 public:
  RunManifest(std::string command, nlohmann::json config);

  void add_seed(const std::string& name, std::uint64_t value);
  // Hashes a file, or every regular file of a directory in name order.
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void note(const std::string& key, nlohmann::json value);

  // Checks that every output exists, then writes the manifest as
  // <dir>/manifest_<command>.json and returns its path.
  std::filesystem::path write(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  nlohmann::json config_;
  nlohmann::json seeds_ = nlohmann::json::object();
  nlohmann::json inputs_ = nlohmann::json::array();
  std::vector<std::filesystem::path> outputs_;
  nlohmann::json notes_ = nlohmann::json::object();
  std::chrono::system_clock::time_point started_ = std::chrono::system_clock::now();
  std::chrono::steady_clock::time_point clock_ = std::chrono::steady_clock::now();
};

}  // namespace latte::cli
