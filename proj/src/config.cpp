#include "latte/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "latte/error.hpp"

namespace latte {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

template <class T>
bool parse_number(const std::string& text, T& out) {
  const std::string s = unquote(text);
  if (s.empty()) return false;
  const char* begin = s.data();
  if constexpr (std::is_unsigned_v<T>) {
    if (*begin == '-') return false;
  }
  const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string> split_list(const std::string& value, bool& ok) {
  std::vector<std::string> items;
  ok = value.size() >= 2 && value.front() == '[' && value.back() == ']';
  if (!ok) return items;
  const std::string inner = trim(std::string_view(value).substr(1, value.size() - 2));
  if (inner.empty()) return items;
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

// Typed lookups that record failures instead of throwing, so one pass can
// report every problem.
class Reader {
 public:
  Reader(const std::map<std::string, std::string>& values, std::vector<std::string>& errors)
      : values_(values), errors_(errors) {}

  const std::string* raw(const std::string& key) {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

  template <class T>
  void number(const std::string& key, T& out) {
    if (const std::string* v = raw(key); v && !parse_number(*v, out))
      errors_.push_back(key + ": expected a " + std::string(std::is_floating_point_v<T> ? "number" : "non-negative integer") +
                        ", got '" + *v + "'");
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const std::string* v = raw(key)) {
      double x = 0.0;
      if (parse_number(*v, x)) {
        out = x;
      } else {
        errors_.push_back(key + ": expected a number, got '" + *v + "'");
      }
    }
  }

  void text(const std::string& key, std::string& out) {
    if (const std::string* v = raw(key)) out = unquote(*v);
  }

  template <class T>
  void list(const std::string& key, std::vector<T>& out) {
    const std::string* v = raw(key);
    if (!v) return;
    bool ok = false;
    const auto items = split_list(*v, ok);
    if (!ok) {
      errors_.push_back(key + ": expected a bracketed list, got '" + *v + "'");
      return;
    }
    out.clear();
    for (const std::string& item : items) {
      T x{};
      if (!parse_number(item, x)) {
        errors_.push_back(key + ": bad list element '" + item + "'");
        return;
      }
      out.push_back(x);
    }
  }

  void report_unknown() {
    for (const auto& [key, value] : values_)
      if (!used_.count(key)) errors_.push_back(key + ": unknown key");
  }

 private:
  const std::map<std::string, std::string>& values_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text, const std::string& source) {
  ConfigFile file;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> errors;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    const std::string body = trim(strip_comment(line));
    const std::string where = source + ":" + std::to_string(number) + ": ";
    if (body.empty()) continue;
    if (body.front() == '[' && body.back() == ']' && body.find('=') == std::string::npos) {
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      if (section.empty()) errors.push_back(where + "empty section name");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      errors.push_back(where + "expected key = value");
      continue;
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) {
      errors.push_back(where + "missing key");
      continue;
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (!file.values_.emplace(full, value).second) errors.push_back(where + "duplicate key " + full);
  }
  if (!errors.empty()) {
    std::string msg = errors.front();
    for (std::size_t i = 1; i < errors.size(); ++i) msg += "\n" + errors[i];
    throw ConfigError(msg);
  }
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void ConfigFile::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kK: return "k";
    case SweepAxis::kC: return "c";
    case SweepAxis::kRatio: return "ratio";
  }
  return "k";
}

RunConfig build_run_config(const ConfigFile& file) {
  RunConfig cfg;
  std::vector<std::string> errors;
  Reader r(file.values(), errors);

  r.number("seed", cfg.seed);
  r.number("jobs", cfg.jobs);
  r.text("out_dir", cfg.out_dir);
  r.text("input.graph", cfg.graph);
  r.text("input.cascades", cfg.cascades);
  r.text("input.truth", cfg.truth);
  r.text("input.checkpoint", cfg.checkpoint);

  SynthConfig& s = cfg.synth;
  r.number("synth.users", s.users);
  r.number("synth.blocks", s.blocks);
  r.number("synth.p_in", s.p_in);
  r.number("synth.p_out", s.p_out);
  r.number("synth.posts_min", s.posts_min);
  r.number("synth.posts_max", s.posts_max);
  r.number("synth.words_per_post", s.words_per_post);
  r.number("synth.vocab", s.vocab);
  r.number("synth.name_vocab", s.name_vocab);
  r.number("synth.locations", s.locations);
  r.number("synth.topics", s.topics);
  r.number("synth.cascades", s.cascades);
  r.number("synth.checkin_prob", s.checkin_prob);
  r.number("synth.q", s.q);
  r.number("synth.attribute_signal", s.attribute_signal);

  TrainConfig& t = cfg.train;
  if (const std::string* task = r.raw("train.task")) {
    if (auto parsed = task_from_string(unquote(*task))) {
      t.task = *parsed;
    } else {
      errors.push_back("train.task: expected none, community or diffusion, got '" + *task + "'");
    }
  }
  r.list("train.hidden", t.hidden);
  r.number("train.k", t.k);
  r.number("train.d", t.d);
  r.number("train.max_order", t.max_order);
  r.number("train.alpha", t.alpha);
  r.number("train.beta", t.beta);
  r.number("train.theta", t.theta);
  r.number("train.gamma", t.gamma);
  r.number("train.eta", t.eta);
  r.number("train.delta", t.delta);
  r.optional_number("train.tau", t.tau);
  r.number("train.c", t.c);
  r.number("train.learning_rate", t.learning_rate);
  r.number("train.epochs", t.epochs);
  r.number("train.batch_size", t.batch_size);
  r.number("train.tolerance", t.tolerance);
  r.number("train.patience", t.patience);
  r.list("train.c_grid", cfg.c_grid);

  DiffusionConfig& d = cfg.diffusion;
  r.number("diffusion.sample_ratio", d.sample_ratio);
  r.number("diffusion.folds", d.folds);
  r.number("diffusion.folds_to_run", d.folds_to_run);
  r.number("diffusion.negative_ratio", d.negative_ratio);
  r.number("diffusion.top_k", d.top_k);

  if (const std::string* axis = r.raw("sweep.axis")) {
    const std::string a = unquote(*axis);
    if (a == "k") {
      cfg.sweep.axis = SweepAxis::kK;
    } else if (a == "c") {
      cfg.sweep.axis = SweepAxis::kC;
    } else if (a == "ratio") {
      cfg.sweep.axis = SweepAxis::kRatio;
    } else {
      errors.push_back("sweep.axis: expected k, c or ratio, got '" + *axis + "'");
    }
  }
  const bool has_values = file.has("sweep.values");
  r.list("sweep.values", cfg.sweep.values);
  if (has_values && cfg.sweep.values.empty()) errors.push_back("sweep.values: must not be empty");
  r.number("sweep.repeats", cfg.sweep.repeats);
  r.number("proximity.order", cfg.order);

  r.report_unknown();

  cfg.synth.seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  if (cfg.jobs < 1) errors.push_back("jobs: must be at least 1");
  if (cfg.sweep.repeats < 1) errors.push_back("sweep.repeats: must be at least 1");
  if (cfg.order < 1) errors.push_back("proximity.order: must be at least 1");
  for (double c : cfg.c_grid)
    if (!(c >= 0.0 && c <= 1.0)) errors.push_back("train.c_grid: values must lie in [0, 1]");
  const auto se = s.validate();
  errors.insert(errors.end(), se.begin(), se.end());
  const auto te = t.validate();
  errors.insert(errors.end(), te.begin(), te.end());
  const auto de = d.validate();
  errors.insert(errors.end(), de.begin(), de.end());

  if (!errors.empty()) {
    std::string msg = errors.front();
    for (std::size_t i = 1; i < errors.size(); ++i) msg += "\n" + errors[i];
    throw ConfigError(msg);
  }
  return cfg;
}

nlohmann::json to_json(const RunConfig& cfg) {
  const SynthConfig& s = cfg.synth;
  const TrainConfig& t = cfg.train;
  const DiffusionConfig& d = cfg.diffusion;
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["input"] = {{"graph", cfg.graph}, {"cascades", cfg.cascades}, {"truth", cfg.truth}, {"checkpoint", cfg.checkpoint}};
  j["synth"] = {{"users", s.users}, {"blocks", s.blocks}, {"p_in", s.p_in}, {"p_out", s.p_out},
                {"posts_min", s.posts_min}, {"posts_max", s.posts_max}, {"words_per_post", s.words_per_post},
                {"vocab", s.vocab}, {"name_vocab", s.name_vocab}, {"locations", s.locations},
                {"topics", s.topics}, {"cascades", s.cascades}, {"checkin_prob", s.checkin_prob},
                {"q", s.q}, {"attribute_signal", s.attribute_signal}};
  j["train"] = {{"task", std::string(to_string(t.task))}, {"hidden", t.hidden}, {"k", t.k}, {"d", t.d},
                {"max_order", t.max_order}, {"alpha", t.alpha}, {"beta", t.beta}, {"theta", t.theta},
                {"gamma", t.gamma}, {"eta", t.eta}, {"delta", t.delta}, {"c", t.c},
                {"learning_rate", t.learning_rate}, {"epochs", t.epochs}, {"batch_size", t.batch_size},
                {"tolerance", t.tolerance}, {"patience", t.patience}, {"c_grid", cfg.c_grid}};
  j["train"]["tau"] = t.tau ? nlohmann::json(*t.tau) : nlohmann::json(nullptr);
  j["diffusion"] = {{"sample_ratio", d.sample_ratio}, {"folds", d.folds}, {"folds_to_run", d.folds_to_run},
                    {"negative_ratio", d.negative_ratio}, {"top_k", d.top_k}};
  j["sweep"] = {{"axis", std::string(to_string(cfg.sweep.axis))}, {"values", cfg.sweep.values},
                {"repeats", cfg.sweep.repeats}};
  j["proximity"] = {{"order", cfg.order}};
  return j;
}

}  // namespace latte
