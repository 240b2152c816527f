#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "latte/config.hpp"
#include "latte/error.hpp"
#include "latte/experiment.hpp"
#include "latte/neuralnet.hpp"
#include "latte/parallel.hpp"
#include "latte/rawfeat.hpp"
#include "latte/synth.hpp"
#include "latte/trainer.hpp"
#include "run_manifest.hpp"

namespace fs = std::filesystem;
using namespace latte;
using cli::RunManifest;

namespace {

constexpr int kConfigExit = 2;
constexpr int kRuntimeExit = 3;

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) { open_out(path) << j.dump(2) << "\n"; }

// Rows of `m` as TSV, each prefixed with its id, under a header line.
void write_rows(const fs::path& path, const std::vector<std::string>& header, const std::vector<std::string>& ids,
                const Matrix& m) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "\t" : "") << header[i];
  out << "\n";
  for (Index r = 0; r < m.rows(); ++r) {
    out << ids[static_cast<std::size_t>(r)];
    for (Index c = 0; c < m.cols(); ++c) out << "\t" << number(m(r, c));
    out << "\n";
  }
}

std::vector<std::string> node_ids(const HetGraph& g, std::size_t count) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < count; ++i) ids.push_back(g.node(i).id);
  return ids;
}

// The graph a command works on: a bundle from input.graph, or a network
// generated from the synth settings when no bundle is given.
struct Network {
  HetGraph graph;
  std::optional<CascadeSet> cascades;
  std::optional<CommunityAssignment> truth;
};

struct Context {
  RunConfig cfg;
  fs::path out;
  RunManifest manifest;

  Network network(bool need_cascades) {
    Network net;
    manifest.add_seed("root", cfg.seed);
    manifest.add_seed("train", cfg.train.seed);
    if (cfg.graph.empty()) {
      SyntheticNetwork synth = generate_network(cfg.synth);
      manifest.add_seed("synth", cfg.synth.seed);
      manifest.note("graph", "generated from the synth settings");
      net.graph = std::move(synth.graph);
      net.cascades = std::move(synth.cascades);
      net.truth = std::move(synth.truth);
      return net;
    }
    const fs::path dir = cfg.graph;
    net.graph = load_graph(dir);
    for (const char* f : {"nodes.tsv", "links.tsv", "topics.json", "user_attrs.json", "post_attrs.json"})
      manifest.add_input(dir / f);

    const fs::path cascades = cfg.cascades.empty() ? dir / "cascades.json" : fs::path(cfg.cascades);
    if (need_cascades || !cfg.cascades.empty()) {
      if (!fs::exists(cascades)) throw ConfigError("input.cascades: " + cascades.string() + " does not exist");
      net.cascades = load_cascades(net.graph, cascades);
      manifest.add_input(cascades);
    }
    const fs::path truth = cfg.truth.empty() ? dir / "ground_truth.json" : fs::path(cfg.truth);
    if (!cfg.truth.empty() && !fs::exists(truth)) throw ConfigError("input.truth: " + truth.string() + " does not exist");
    if (fs::exists(truth)) {
      net.truth = load_ground_truth(net.graph, truth);
      manifest.add_input(truth);
    }
    return net;
  }

  fs::path output(const std::string& name) {
    const fs::path p = out / name;
    manifest.add_output(p);
    return p;
  }
};

// --- subcommands ---------------------------------------------------------

void cmd_synth(Context& ctx) {
  const SyntheticNetwork net = generate_network(ctx.cfg.synth);
  const fs::path dir = ctx.out / "graph";
  save_network(net, dir);
  ctx.manifest.add_seed("root", ctx.cfg.seed);
  ctx.manifest.add_seed("synth", ctx.cfg.synth.seed);
  for (const char* f : {"nodes.tsv", "links.tsv", "topics.json", "user_attrs.json", "post_attrs.json", "cascades.json",
                        "ground_truth.json"})
    ctx.manifest.add_output(dir / f);
  ctx.manifest.note("nodes", net.graph.num_nodes());
  ctx.manifest.note("links", net.graph.links().size());
}

void cmd_embed(Context& ctx) {
  const TrainConfig& t = ctx.cfg.train;
  const Network net = ctx.network(t.task == Task::kDiffusion);
  const FeatureMatrix features = combined_features(net.graph, build_vocab(net.graph));
  const ProximityStack stack = graph_proximity(net.graph, t.max_order);
  const TrainResult r = train(net.graph, features, stack, net.cascades ? &*net.cascades : nullptr, t);

  nlohmann::json meta = {{"task", std::string(to_string(t.task))},
                         {"k", t.k},
                         {"scaler", scaler_to_json(r.scaler)},
                         {"epochs_run", r.history.back().epoch},
                         {"converged", r.converged}};
  save_checkpoint(r.model, ctx.output("checkpoint.json"), meta);
  std::vector<std::string> header{"id"};
  for (Index c = 0; c < r.embedding.cols(); ++c) header.push_back("z" + std::to_string(c));
  write_rows(ctx.output("embeddings.tsv"), header, node_ids(net.graph, net.graph.num_nodes()), r.embedding);
  write_loss_csv(r.history, ctx.output("loss.csv"));
  ctx.manifest.note("epochs_run", r.history.back().epoch);
  ctx.manifest.note("converged", r.converged);
}

void write_communities(Context& ctx, const HetGraph& g, const CommunityRun& run, nlohmann::json extra) {
  std::ofstream out = open_out(ctx.output("assignment.tsv"));
  out << "id\tcommunity\n";
  for (std::size_t u = 0; u < g.num_users(); ++u) out << g.node(u).id << "\t" << run.assignment.labels[u] << "\n";
  extra["k"] = run.assignment.k;
  extra["sizes"] = run.assignment.sizes();
  extra["metrics"] = to_json(run.metrics);
  write_json(ctx.output("communities.json"), extra);
}

void cmd_communities(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Network net = ctx.network(false);
  const CommunityAssignment* truth = net.truth ? &*net.truth : nullptr;

  if (!cfg.checkpoint.empty()) {
    nlohmann::json meta;
    const AutoencoderModel model = load_checkpoint(cfg.checkpoint, &meta);
    ctx.manifest.add_input(cfg.checkpoint);
    if (!meta.contains("scaler")) throw Error("checkpoint " + cfg.checkpoint + " has no feature scaler");
    const FeatureMatrix features = combined_features(net.graph, build_vocab(net.graph));
    const Matrix z = encode(model, scaler_from_json(meta.at("scaler")).apply(features.values));
    const ProximityStack stack = graph_proximity(net.graph, cfg.train.max_order);
    const CommunityRun run = cluster_embedding(z, net.graph, stack, cfg.train.k, cfg.seed, truth);
    write_communities(ctx, net.graph, run, {{"source", "checkpoint"}});
    return;
  }

  if (cfg.c_grid.empty()) {
    const CommunityRun run = run_community(net.graph, cfg.train, truth);
    write_communities(ctx, net.graph, run, {{"source", "trained"}, {"c", cfg.train.c}});
    return;
  }

  // Grid search over c by NDBI, keeping every run so the winner is not retrained.
  std::map<double, CommunityRun> runs;
  std::mutex runs_mutex;
  const double best = grid_search_c(
      cfg.c_grid,
      [&](double c) {
        TrainConfig t = cfg.train;
        t.c = c;
        CommunityRun run = run_community(net.graph, t, truth);
        const double score = run.metrics.ndbi;
        std::lock_guard lock(runs_mutex);
        runs.emplace(c, std::move(run));
        return score;
      },
      cfg.jobs);
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& [c, run] : runs) grid.push_back({{"c", c}, {"ndbi", run.metrics.ndbi}});
  write_communities(ctx, net.graph, runs.at(best), {{"source", "trained"}, {"c", best}, {"c_grid", grid}});
}

void cmd_diffusion(Context& ctx) {
  const Network net = ctx.network(true);
  ctx.manifest.add_seed("cv_split", ctx.cfg.seed + 1);
  const DiffusionRun run = run_diffusion(net.graph, *net.cascades, ctx.cfg.train, ctx.cfg.diffusion, ctx.cfg.jobs);
  write_json(ctx.output("diffusion.json"), to_json(run));
}

void cmd_sweep(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const SweepConfig& sweep = cfg.sweep;
  if (sweep.values.empty()) throw ConfigError("sweep.values: must list at least one value");
  if (sweep.axis == SweepAxis::kK)
    for (double v : sweep.values)
      if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw ConfigError("sweep.values: k must be a positive integer, got " + number(v));

  const bool diffusion = sweep.axis == SweepAxis::kRatio;
  const Network net = ctx.network(diffusion);
  const CommunityAssignment* truth = net.truth ? &*net.truth : nullptr;
  const std::size_t points = sweep.values.size();
  const std::size_t repeats = sweep.repeats;
  std::vector<std::vector<double>> metrics(points * repeats);

  parallel_for(points * repeats, cfg.jobs, [&](std::size_t i) {
    const double value = sweep.values[i / repeats];
    TrainConfig t = cfg.train;
    t.seed = cfg.seed + i % repeats;
    if (diffusion) {
      DiffusionConfig d = cfg.diffusion;
      d.sample_ratio = value;
      const DiffusionRun run = run_diffusion(net.graph, *net.cascades, t, d);
      metrics[i] = {run.mean_auc, run.mean_precision};
      return;
    }
    if (sweep.axis == SweepAxis::kK) {
      t.k = static_cast<std::size_t>(value);
    } else {
      t.c = value;
    }
    const CommunityMetrics m = run_community(net.graph, t, truth).metrics;
    metrics[i] = {m.ndbi, m.silhouette, m.density, m.entropy};
  });

  for (std::size_t r = 0; r < repeats; ++r) ctx.manifest.add_seed("repeat_" + std::to_string(r), cfg.seed + r);
  std::ofstream out = open_out(ctx.output("sweep.csv"));
  out << to_string(sweep.axis) << (diffusion ? ",auc,precision_at_k\n" : ",ndbi,silhouette,density,entropy\n");
  for (std::size_t p = 0; p < points; ++p) {
    std::vector<double> mean(metrics[p * repeats].size(), 0.0);
    for (std::size_t r = 0; r < repeats; ++r)
      for (std::size_t m = 0; m < mean.size(); ++m) mean[m] += metrics[p * repeats + r][m] / static_cast<double>(repeats);
    out << number(sweep.values[p]);
    for (double v : mean) out << "," << number(v);
    out << "\n";
  }
}

void cmd_eval(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Task task = cfg.train.task;
  const Network net = ctx.network(task == Task::kDiffusion);
  const CommunityAssignment* truth = net.truth ? &*net.truth : nullptr;
  nlohmann::json j;
  j["config"] = to_json(cfg);
  j["task"] = std::string(to_string(task));
  if (task == Task::kDiffusion) {
    j["metrics"] = to_json(run_diffusion(net.graph, *net.cascades, cfg.train, cfg.diffusion, cfg.jobs));
  } else if (task == Task::kCommunity) {
    j["metrics"] = to_json(run_community(net.graph, cfg.train, truth).metrics);
  } else {
    // Pure embedding, clustered into train.k communities.
    const FeatureMatrix features = combined_features(net.graph, build_vocab(net.graph));
    const ProximityStack stack = graph_proximity(net.graph, cfg.train.max_order);
    const TrainResult r = train(net.graph, features, stack, nullptr, cfg.train);
    j["metrics"] = to_json(cluster_embedding(r.embedding, net.graph, stack, cfg.train.k, cfg.seed, truth).metrics);
  }
  write_json(ctx.output("eval.json"), j);
}

void cmd_features_dump(Context& ctx) {
  const Network net = ctx.network(false);
  const FeatureSchema schema = build_vocab(net.graph);
  const FeatureMatrix features = combined_features(net.graph, schema);
  std::vector<std::string> header{"id"};
  for (const FeatureBlock& b : features.blocks)
    for (std::size_t i = 0; i < b.width; ++i) header.push_back(b.name + ":" + std::to_string(i));
  write_rows(ctx.output("features.tsv"), header, features.ids, features.values);

  auto blocks = [](const std::vector<FeatureBlock>& bs) {
    nlohmann::json out = nlohmann::json::array();
    for (const FeatureBlock& b : bs) out.push_back({{"name", b.name}, {"offset", b.offset}, {"width", b.width}});
    return out;
  };
  write_json(ctx.output("features_schema.json"),
             {{"columns", features.values.cols()},
              {"user_blocks", blocks(schema.user_blocks)},
              {"post_blocks", blocks(schema.post_blocks)},
              {"name_vocab", schema.name_vocab},
              {"gender_vocab", schema.gender_vocab},
              {"hometown_vocab", schema.hometown_vocab},
              {"location_vocab", schema.location_vocab},
              {"word_vocab", schema.word_vocab},
              {"topics", schema.num_topics}});
}

void cmd_proximity_dump(Context& ctx) {
  const Network net = ctx.network(false);
  const std::size_t order = ctx.cfg.order;
  const ProximityStack stack = graph_proximity(net.graph, order);
  const std::vector<std::string> ids = node_ids(net.graph, net.graph.num_nodes());
  std::vector<std::string> header{"id"};
  header.insert(header.end(), ids.begin(), ids.end());
  write_rows(ctx.output("proximity_order" + std::to_string(order) + ".tsv"), header, ids, stack.power(order));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latte: task-aware embedding of heterogeneous social networks"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "root seed for every random component");
  app.add_option("--out-dir", out_dir, "directory for outputs and the run manifest");
  app.add_option("--jobs", jobs, "worker threads for folds, grid points and sweep points");
  app.add_option("--set", overrides, "override one config key, as key=value (repeatable)");

  std::vector<std::pair<std::string, std::string>> flag_keys;
  auto key_option = [&flag_keys](CLI::App* sub, const std::string& flag, const std::string& key,
                                 const std::string& help) {
    sub->add_option_function<std::string>(
        flag, [&flag_keys, key](const std::string& v) { flag_keys.emplace_back(key, v); }, help);
  };

  using Command = void (*)(Context&);
  std::vector<std::pair<CLI::App*, Command>> commands;
  auto add = [&](CLI::App* parent, const std::string& name, const std::string& help, Command fn) {
    CLI::App* sub = parent->add_subcommand(name, help);
    sub->fallthrough();
    commands.emplace_back(sub, fn);
    return sub;
  };
  add(&app, "synth", "generate a planted-partition network bundle with cascades", cmd_synth);
  add(&app, "embed", "train an embedding; writes checkpoint, embeddings and loss curve", cmd_embed);
  CLI::App* communities = add(&app, "communities", "detect communities and score them", cmd_communities);
  key_option(communities, "--checkpoint", "input.checkpoint", "cluster a trained checkpoint instead of training");
  key_option(communities, "--k", "train.k", "number of communities");
  add(&app, "diffusion", "cross-validated diffusion-link prediction", cmd_diffusion);
  CLI::App* sweep = add(&app, "sweep", "metrics across values of k, c or the sample ratio", cmd_sweep);
  key_option(sweep, "--axis", "sweep.axis", "k, c or ratio");
  key_option(sweep, "--values", "sweep.values", "bracketed or comma-separated list");
  key_option(sweep, "--repeats", "sweep.repeats", "seeds averaged per point");
  add(&app, "eval", "run the configured task and write its metrics", cmd_eval);
  CLI::App* features = app.add_subcommand("features", "raw feature tools");
  features->require_subcommand(1)->fallthrough();
  add(features, "dump", "write the raw feature matrix and its schema", cmd_features_dump);
  CLI::App* proximity = app.add_subcommand("proximity", "proximity matrix tools");
  proximity->require_subcommand(1)->fallthrough();
  CLI::App* pdump = add(proximity, "dump", "write one proximity matrix power", cmd_proximity_dump);
  key_option(pdump, "--order", "proximity.order", "power of the transition matrix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigExit;
  }

  Command command = nullptr;
  std::string name;
  for (const auto& [sub, fn] : commands)
    if (sub->parsed()) {
      command = fn;
      name = sub->get_parent() == &app ? sub->get_name() : sub->get_parent()->get_name() + " " + sub->get_name();
    }

  RunConfig cfg;
  try {
    ConfigFile file = config_path.empty() ? ConfigFile() : ConfigFile::load(config_path);
    for (const std::string& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set: expected key=value, got '" + o + "'");
      file.set(o.substr(0, eq), o.substr(eq + 1));
    }
    for (auto [key, value] : flag_keys) {
      if (key == "sweep.values" && value.find('[') == std::string::npos) value = "[" + value + "]";
      file.set(key, value);
    }
    if (seed) file.set("seed", std::to_string(*seed));
    if (jobs) file.set("jobs", std::to_string(*jobs));
    if (!out_dir.empty()) file.set("out_dir", out_dir);
    cfg = build_run_config(file);
  } catch (const ConfigError& e) {
    std::cerr << "config error:\n" << e.what() << "\n";
    return kConfigExit;
  }

  try {
    fs::create_directories(cfg.out_dir);
    Context ctx{cfg, cfg.out_dir, RunManifest(name, to_json(cfg))};
    if (!config_path.empty()) ctx.manifest.add_input(config_path);
    command(ctx);
    const fs::path manifest = ctx.manifest.write(ctx.out);
    std::cout << name << ": wrote " << manifest.string() << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error:\n" << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeExit;
  }
  return 0;
}
