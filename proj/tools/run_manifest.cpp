#include "run_manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>

#include "latte/error.hpp"

namespace latte::cli {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 unavailable");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

RunManifest::RunManifest(std::string command, nlohmann::json config)
    : command_(std::move(command)), config_(std::move(config)) {}

void RunManifest::add_seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }

void RunManifest::add_input(const fs::path& path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) inputs_.push_back({{"path", f.string()}, {"sha256", sha256_file(f)}});
    return;
  }
  inputs_.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
}

void RunManifest::add_output(const fs::path& path) { outputs_.push_back(path); }

void RunManifest::note(const std::string& key, nlohmann::json value) { notes_[key] = std::move(value); }

fs::path RunManifest::write(const fs::path& dir) const {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& p : outputs_) {
    if (!fs::exists(p)) throw Error("declared output was not written: " + p.string());
    outputs.push_back(p.string());
  }
  const std::time_t started = std::chrono::system_clock::to_time_t(started_);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();

  nlohmann::json j;
  j["command"] = command_;
  j["config"] = config_;
  j["seeds"] = seeds_;
  j["inputs"] = inputs_;
  j["outputs"] = outputs;
  if (!notes_.empty()) j["notes"] = notes_;
  j["timing"] = {{"started", stamp}, {"seconds", seconds}};

  std::string name = command_;
  std::replace(name.begin(), name.end(), ' ', '_');
  const fs::path out = dir / ("manifest_" + name + ".json");
  std::ofstream f(out);
  if (!f) throw Error("cannot write " + out.string());
  f << j.dump(2) << "\n";
  return out;
}

}  // namespace latte::cli
