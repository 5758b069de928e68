#include "sgnn/analysis.hpp"
#include "sgnn/config.hpp"
#include "sgnn/experiments.hpp"
#include "sgnn/sampler.hpp"
#include "sgnn/synth.hpp"
#include "sgnn/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace sgnn;

namespace {

using ordered_json = nlohmann::ordered_json;

std::ofstream open_out(const fs::path& path)
{
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const fs::path& path)
{
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return in;
}

/// Leftover `--key value` / `--key=value` arguments become config overrides.
void apply_overrides(Settings& s, const std::vector<std::string>& extras)
{
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw Error("unexpected argument '" + arg + "'");
    arg = arg.substr(2);
    std::string value;
    if (const auto eq = arg.find('='); eq != std::string::npos) {
      value = arg.substr(eq + 1);
      arg = arg.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw Error("missing value for '--" + arg + "'");
      value = extras[++i];
    }
    s.set(arg, value);
  }
}

Settings load_settings(const std::string& config, const std::vector<std::string>& extras)
{
  Settings s;
  if (!config.empty()) s.apply(ConfigFile::load(config));
  apply_overrides(s, extras);
  s.finalize();
  return s;
}

RunManifest manifest_for(const std::string& command, const Settings& s)
{
  RunManifest m;
  m.command = command;
  m.config = s.resolved();
  m.seed = s.seed;
  return m;
}

fs::path patterns_path(const fs::path& graph) { return graph.string() + ".patterns"; }
fs::path split_path(const fs::path& graph) { return graph.string() + ".split"; }

void write_ids(std::ostream& out, const std::string& name, const std::vector<NodeId>& ids)
{
  out << name << ' ' << ids.size();
  for (auto v : ids) out << ' ' << v;
  out << '\n';
}

std::vector<NodeId> read_ids(std::istream& in, const std::string& name)
{
  std::string got;
  std::size_t n = 0;
  if (!(in >> got >> n) || got != name) throw Error("split file: expected '" + name + "'");
  std::vector<NodeId> ids(n);
  for (auto& v : ids)
    if (!(in >> v)) throw Error("split file: truncated '" + name + "'");
  return ids;
}

struct LoadedGraph
{
  StructuredGraph graph;
  std::optional<PatternSet> patterns;
  std::optional<std::pair<std::vector<NodeId>, std::vector<NodeId>>> split;
};

LoadedGraph load_all(const fs::path& path)
{
  LoadedGraph g;
  auto in = open_in(path);
  g.graph = load_graph(in);
  if (fs::exists(patterns_path(path))) {
    auto pin = open_in(patterns_path(path));
    g.patterns = load_patterns(pin);
  }
  if (fs::exists(split_path(path))) {
    auto sin = open_in(split_path(path));
    auto train = read_ids(sin, "train");
    auto test = read_ids(sin, "test");
    g.split.emplace(std::move(train), std::move(test));
  }
  return g;
}

int cmd_gen(const std::string& config, const fs::path& out, const std::vector<std::string>& extras)
{
  const auto s = load_settings(config, extras);
  auto m = manifest_for("gen", s);
  m.outputs = {{"graph", out.string()},
               {"patterns", patterns_path(out).string()},
               {"split", split_path(out).string()}};
  m.write(out.string() + ".manifest.json");

  const auto patterns = generate_patterns(s.gen);
  const auto data = generate_graph(patterns, s.gen);
  auto g = open_out(out);
  save_graph(data.graph, g);
  auto p = open_out(patterns_path(out));
  save_patterns(patterns, p);
  auto sp = open_out(split_path(out));
  write_ids(sp, "train", data.train.ids);
  write_ids(sp, "test", data.test.ids);
  std::cerr << "gen: " << data.graph.node_count() << " nodes, " << data.graph.edge_count() << " edges -> " << out
            << '\n';
  return 0;
}

int cmd_train(const fs::path& graph_path, const std::string& config, const fs::path& out_dir, bool no_prune,
              bool trace, const std::vector<std::string>& extras)
{
  auto s = load_settings(config, extras);
  if (no_prune) {
    s.train.beta = 0.0;
    s.finalize();
  }
  auto m = manifest_for("train", s);
  m.outputs = {{"outcome", (out_dir / "outcome.jsonl").string()},
               {"checkpoint", (out_dir / "checkpoint.txt").string()}};
  if (trace) m.outputs["trace"] = (out_dir / "trace.csv").string();
  fs::create_directories(out_dir);
  m.write((out_dir / "manifest.json").string());

  const auto loaded = load_all(graph_path);
  LabeledSubset train;
  LabeledSubset test;
  if (loaded.split) {
    train = LabeledSubset::make(loaded.graph, loaded.split->first);
    test = LabeledSubset::make(loaded.graph, loaded.split->second);
  } else {
    Rng rng(derive_seed(s.seed, {stream::split}));
    std::tie(train, test) = balanced_split(loaded.graph, s.gen.train_size, rng);
  }
  const PatternSet* patterns = loaded.patterns ? &*loaded.patterns : nullptr;
  if (trace && !patterns) throw Error("--trace-projections needs the graph's .patterns file");

  ProjectionTrace tr;
  TrainHook hook;
  if (trace) hook = projection_hook(tr, *patterns, false);
  const auto result = run_algorithm1(loaded.graph, train.ids, test.ids, s.train, patterns, hook);

  auto o = open_out(out_dir / "outcome.jsonl");
  o << to_json_line(result.outcome) << '\n';
  auto c = open_out(out_dir / "checkpoint.txt");
  save_checkpoint(result.model, c);
  if (trace) {
    auto t = open_out(out_dir / "trace.csv");
    tr.write_csv(t);
  }
  std::cerr << "train: success=" << result.outcome.success << " iterations=" << result.outcome.iterations
            << " test_error=" << result.outcome.test_error << '\n';
  return 0;
}

int cmd_sweep(const std::string& config, const fs::path& out_dir, int jobs, const std::vector<std::string>& extras)
{
  auto s = load_settings(config, extras);
  s.sweep.jobs = jobs;
  auto m = manifest_for("sweep", s);
  m.outputs = {{"sweep", (out_dir / "sweep.csv").string()},
               {"summary", (out_dir / "summary.csv").string()},
               {"fit", (out_dir / "fit.json").string()}};
  fs::create_directories(out_dir);
  m.write((out_dir / "manifest.json").string());

  const auto result = run_sweep(s.sweep);
  auto a = open_out(out_dir / "sweep.csv");
  write_sweep_csv(result, a);
  auto b = open_out(out_dir / "summary.csv");
  write_summary_csv(result, b);
  auto c = open_out(out_dir / "fit.json");
  c << fit_json(result) << '\n';
  return 0;
}

int cmd_analyze(const fs::path& checkpoint, const fs::path& graph_path, const std::string& config,
                const fs::path& out_dir, const std::vector<std::string>& extras)
{
  const auto s = load_settings(config, extras);
  auto m = manifest_for("analyze", s);
  m.outputs = {{"lucky", (out_dir / "lucky.json").string()}, {"scatter", (out_dir / "scatter.csv").string()}};
  fs::create_directories(out_dir);
  m.write((out_dir / "manifest.json").string());

  const auto loaded = load_all(graph_path);
  if (!loaded.patterns) throw Error("analyze needs the graph's .patterns file");
  auto cin = open_in(checkpoint);
  const auto model = load_checkpoint(cin);
  const double sigma = loaded.graph.sigma();
  const auto L = static_cast<double>(loaded.patterns->count());
  const auto K = static_cast<double>(model.W.cols());
  const double eps = epsilon_K(L, K, s.lucky_q);
  const auto report = detect_lucky(model, *loaded.patterns, sigma, eps);

  ordered_json j;
  j["width"] = report.width;
  j["surviving_positive"] = report.class_positive;
  j["surviving_negative"] = report.class_negative;
  j["lucky_positive"] = report.positive;
  j["lucky_negative"] = report.negative;
  j["fraction_positive"] = report.fraction_positive;
  j["fraction_negative"] = report.fraction_negative;
  j["sigma"] = sigma;
  j["L"] = L;
  j["q"] = s.lucky_q;
  j["epsilon_K"] = eps;
  j["coarse_lucky_bound"] = report.coarse_lucky_bound;
  j["lucky_fraction_bound"] = report.lucky_fraction_bound;
  auto out = open_out(out_dir / "lucky.json");
  out << j.dump(2) << '\n';
  auto sc = open_out(out_dir / "scatter.csv");
  write_scatter_csv(neuron_scatter(model, *loaded.patterns), sc);
  return 0;
}

int cmd_vc(int L, bool include_center, const fs::path& out)
{
  Settings s;
  s.finalize();
  auto m = manifest_for("vc", s);
  m.config["vc.L"] = std::to_string(L);
  m.config["vc.include_center"] = include_center ? "true" : "false";
  m.outputs = {{"vc", out.string()}};
  m.write(out.string() + ".manifest.json");

  const auto summary = vc_verify(L, include_center);
  ordered_json j;
  j["L"] = L;
  j["include_center"] = include_center;
  j["points"] = summary.points;
  j["labelings"] = summary.labelings;
  j["realized"] = summary.realized;
  j["verified"] = summary.verified;
  auto o = open_out(out);
  o << j.dump(2) << '\n';
  return summary.verified ? 0 : 1;
}

int cmd_alpha(const fs::path& graph_path, const std::string& config, const fs::path& out,
              const std::vector<std::string>& extras)
{
  const auto s = load_settings(config, extras);
  auto m = manifest_for("alpha", s);
  m.outputs = {{"alpha", out.string()}};
  m.write(out.string() + ".manifest.json");

  const auto loaded = load_all(graph_path);
  const auto& g = loaded.graph;
  std::vector<NodeId> nodes;
  for (NodeId v = 0; v < g.node_count(); ++v)
    if (g.tagged() && !is_class_relevant(g.tag(v))) nodes.push_back(v);
  const auto& st = s.train.sampling;
  Rng rng(derive_seed(s.seed, {stream::alpha}));
  const auto est = estimate_alpha(st, g, nodes, s.alpha_reps, rng);

  // Bounds are quoted at the modal degree of the measured nodes.
  std::map<int, int> degrees;
  for (auto v : nodes) ++degrees[g.degree(v)];
  int R = 0;
  int best = -1;
  for (auto [deg, count] : degrees)
    if (count > best) std::tie(R, best) = std::pair{deg, count};
  const double r = std::min(st.fanout, R);

  ordered_json j;
  j["kind"] = to_string(st.kind);
  j["fanout"] = st.fanout;
  j["gamma"] = st.gamma;
  j["lambda"] = st.lambda;
  j["nodes"] = nodes.size();
  j["reps"] = s.alpha_reps;
  j["alpha_hat"] = est.mean;
  j["std_error"] = est.std_error;
  j["node_min"] = est.node_min;
  j["degree"] = R;
  ordered_json bounds;
  if (st.kind == SamplingKind::Uniform) {
    const auto b = alpha_bound_uniform(1.0, R, r);
    bounds["uniform_lower"] = b.lower;
    bounds["uniform_upper"] = b.upper;
    bounds["uniform_nominal"] = r / R;
  } else if (st.kind == SamplingKind::TwoTier) {
    const auto b = st.important == ImportantSet::RelevantOnly ? alpha_bound_importance(st.gamma, R, r)
                                                              : alpha_bound_partial(st.gamma, st.lambda, R, r);
    bounds["importance_lower"] = b.exact;
    bounds["importance_lower_large_R"] = b.large_R;
    bounds["two_tier_exact"] = two_tier_single_alpha(st.gamma, R, r);
  }
  j["bounds"] = bounds;
  auto o = open_out(out);
  o << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Sampled, pruned max-pooling GNN toolkit"};
  app.set_version_flag("--version", std::string(tool_version) + " (config schema " +
                                        std::to_string(config_schema_version) + ")");
  app.require_subcommand(1);

  std::string config;
  fs::path out;
  fs::path graph;
  fs::path checkpoint;
  int jobs = 1;
  int L = 4;
  bool no_prune = false;
  bool trace = false;
  bool include_center = false;
  std::string kind;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic graph");
  gen->add_option("-c,--config", config, "Config file");
  gen->add_option("-o,--out", out, "Graph file")->required();
  gen->allow_extras();

  auto* train = app.add_subcommand("train", "Run prune-and-retrain on a graph");
  train->add_option("-g,--graph", graph, "Graph file")->required()->check(CLI::ExistingFile);
  train->add_option("-c,--config", config, "Config file");
  train->add_option("-o,--out", out, "Output directory")->required();
  train->add_flag("--no-prune", no_prune, "Force beta = 0");
  train->add_flag("--trace-projections", trace, "Write per-iteration pattern projections");
  train->allow_extras();

  auto* sweep = app.add_subcommand("sweep", "Run an experiment sweep");
  sweep->add_option("-c,--config", config, "Sweep config")->required();
  sweep->add_option("-o,--out", out, "Output directory")->required();
  sweep->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep->allow_extras();

  auto* analyze = app.add_subcommand("analyze", "Lucky-neuron report and norm/angle scatter");
  analyze->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  analyze->add_option("-g,--graph", graph, "Graph file")->required()->check(CLI::ExistingFile);
  analyze->add_option("-c,--config", config, "Config file");
  analyze->add_option("-o,--out", out, "Output directory")->required();
  analyze->allow_extras();

  auto* vc = app.add_subcommand("vc", "Verify the shattering construction");
  vc->add_option("L", L, "Number of patterns (even, 4..8)")->required();
  vc->add_flag("--include-center", include_center, "Include the center node in the weights");
  vc->add_option("-o,--out", out, "Output JSON")->default_val("vc.json");

  auto* alpha = app.add_subcommand("alpha", "Estimate the sampling probability alpha");
  alpha->add_option("-g,--graph", graph, "Graph file")->required()->check(CLI::ExistingFile);
  alpha->add_option("-c,--config", config, "Config file");
  alpha->add_option("--kind", kind, "Sampling kind (full, uniform, two_tier)");
  alpha->add_option("-o,--out", out, "Output JSON")->default_val("alpha.json");
  alpha->allow_extras();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(config, out, gen->remaining());
    if (*train) return cmd_train(graph, config, out, no_prune, trace, train->remaining());
    if (*sweep) return cmd_sweep(config, out, jobs, sweep->remaining());
    if (*analyze) return cmd_analyze(checkpoint, graph, config, out, analyze->remaining());
    if (*vc) return cmd_vc(L, include_center, out);
    if (*alpha) {
      auto extras = alpha->remaining();
      if (!kind.empty()) {
        extras.push_back("--sampling.kind");
        extras.push_back(kind);
      }
      return cmd_alpha(graph, config, out, extras);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
