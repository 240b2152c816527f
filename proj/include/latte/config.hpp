#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "latte/experiment.hpp"
#include "latte/synth.hpp"
#include "latte/trainer.hpp"

namespace latte {

// Flat key = value file. `[section]` headers prefix the keys that follow
// with "section.". `#` starts a comment outside quotes. Values are bare or
// double-quoted strings, numbers, booleans or bracketed lists.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, const std::string& source = "<config>");
  static ConfigFile load(const std::filesystem::path& path);

  // Later values replace earlier ones; used for command-line overrides.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

enum class SweepAxis { kK, kC, kRatio };

struct SweepConfig {
  SweepAxis axis = SweepAxis::kK;
  std::vector<double> values;
  std::size_t repeats = 1;  // seeds averaged per point, root seed + r
};

// Everything a CLI run can be configured with. A single root seed feeds
// every random component.
struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::string out_dir = "out";

  std::string graph;       // graph bundle directory
  std::string cascades;    // defaults to <graph>/cascades.json
  std::string truth;       // defaults to <graph>/ground_truth.json when present
  std::string checkpoint;  // for `communities`

  SynthConfig synth;
  TrainConfig train;
  DiffusionConfig diffusion;
  SweepConfig sweep;
  std::vector<double> c_grid;  // optional grid search over c for `communities`
  std::size_t order = 1;       // `proximity dump` order
};

// Maps the file onto a RunConfig. Every unknown key, malformed value and
// violated constraint is collected; ConfigError lists all of them, one per
// line.
RunConfig build_run_config(const ConfigFile& file);

nlohmann::json to_json(const RunConfig& cfg);

std::string_view to_string(SweepAxis axis);

}  // namespace latte
