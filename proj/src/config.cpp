#include "sgnn/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace sgnn {

namespace {

std::string_view trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename Int>
Int parse_int(std::string_view text)
{
  Int v{};
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) throw Error("not an integer: '" + std::string(text) + "'");
  return v;
}

std::string fmt(double v) { return format_exact(v); }

struct Field
{
  std::function<std::string(const Settings&)> get;
  std::function<void(Settings&, std::string_view)> set;
};

const std::map<std::string, Field, std::less<>>& fields()
{
  static const std::map<std::string, Field, std::less<>> table = [] {
    std::map<std::string, Field, std::less<>> t;
    auto num = [&](std::string key, auto member_of) {
      t[std::move(key)] = Field{
          [member_of](const Settings& s) {
            const auto& v = member_of(const_cast<Settings&>(s));
            if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) return fmt(v);
            else return std::to_string(v);
          },
          [member_of](Settings& s, std::string_view text) {
            auto& v = member_of(s);
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_floating_point_v<T>) v = parse_double(text);
            else v = parse_int<T>(text);
          }};
    };
    auto enm = [&](std::string key, auto member_of, auto parse) {
      t[std::move(key)] = Field{
          [member_of](const Settings& s) { return std::string(to_string(member_of(const_cast<Settings&>(s)))); },
          [member_of, parse](Settings& s, std::string_view text) { member_of(s) = parse(text); }};
    };

    num("seed", [](Settings& s) -> auto& { return s.seed; });

    num("gen.d", [](Settings& s) -> auto& { return s.gen.d; });
    num("gen.L", [](Settings& s) -> auto& { return s.gen.L; });
    num("gen.n", [](Settings& s) -> auto& { return s.gen.n; });
    num("gen.degree", [](Settings& s) -> auto& { return s.gen.degree; });
    num("gen.relevant_fraction", [](Settings& s) -> auto& { return s.gen.relevant_fraction; });
    num("gen.relevant_degree", [](Settings& s) -> auto& { return s.gen.relevant_degree; });
    num("gen.sigma", [](Settings& s) -> auto& { return s.gen.sigma; });
    enm("gen.noise", [](Settings& s) -> auto& { return s.gen.noise; }, parse_noise_mode);
    enm("gen.pattern_mode", [](Settings& s) -> auto& { return s.gen.pattern_mode; }, parse_pattern_mode);
    num("gen.train_size", [](Settings& s) -> auto& { return s.gen.train_size; });
    num("gen.outlier_fraction", [](Settings& s) -> auto& { return s.gen.outlier_fraction; });

    num("train.step_size", [](Settings& s) -> auto& { return s.train.step_size; });
    num("train.init_scale", [](Settings& s) -> auto& { return s.train.init_scale; });
    num("train.width", [](Settings& s) -> auto& { return s.train.width; });
    num("train.beta", [](Settings& s) -> auto& { return s.train.beta; });
    t["train.pretrain_iters"] = Field{
        [](const Settings& s) { return s.train.pretrain_iters ? std::to_string(*s.train.pretrain_iters) : "auto"; },
        [](Settings& s, std::string_view text) {
          if (text == "auto") s.train.pretrain_iters.reset();
          else s.train.pretrain_iters = parse_int<int>(text);
        }};
    num("train.max_iters", [](Settings& s) -> auto& { return s.train.max_iters; });
    enm("train.batch", [](Settings& s) -> auto& { return s.train.batch; }, parse_batch_mode);
    num("train.batch_size", [](Settings& s) -> auto& { return s.train.batch_size; });
    enm("train.stop", [](Settings& s) -> auto& { return s.train.stop; }, parse_stop_rule);
    enm("train.prune_mode", [](Settings& s) -> auto& { return s.train.prune_mode; }, parse_prune_mode);
    enm("train.prune_kind", [](Settings& s) -> auto& { return s.train.prune_kind; }, parse_prune_kind);
    enm("train.step_rule", [](Settings& s) -> auto& { return s.train.step_rule; }, parse_step_rule);
    enm("train.norm", [](Settings& s) -> auto& { return s.train.norm; }, parse_norm_mode);

    enm("sampling.kind", [](Settings& s) -> auto& { return s.train.sampling.kind; }, parse_sampling_kind);
    num("sampling.fanout", [](Settings& s) -> auto& { return s.train.sampling.fanout; });
    enm("sampling.important", [](Settings& s) -> auto& { return s.train.sampling.important; },
        parse_important_set);
    num("sampling.gamma", [](Settings& s) -> auto& { return s.train.sampling.gamma; });
    num("sampling.lambda", [](Settings& s) -> auto& { return s.train.sampling.lambda; });
    num("sampling.lambda_seed", [](Settings& s) -> auto& { return s.train.sampling.lambda_seed; });

    enm("sweep.experiment", [](Settings& s) -> auto& { return s.sweep.kind; }, parse_experiment);
    enm("sweep.param", [](Settings& s) -> auto& { return s.sweep.param; }, parse_sweep_param);
    enm("sweep.param2", [](Settings& s) -> auto& { return s.sweep.param2; }, parse_sweep_param);
    t["sweep.grid"] = Field{[](const Settings& s) { return format_list(s.sweep.grid); },
                            [](Settings& s, std::string_view text) { s.sweep.grid = parse_list(text); }};
    t["sweep.grid2"] = Field{[](const Settings& s) { return format_list(s.sweep.grid2); },
                             [](Settings& s, std::string_view text) { s.sweep.grid2 = parse_list(text); }};
    num("sweep.compare_beta", [](Settings& s) -> auto& { return s.sweep.compare_beta; });
    num("sweep.trials", [](Settings& s) -> auto& { return s.sweep.trials; });
    num("sweep.d_min", [](Settings& s) -> auto& { return s.sweep.d_min; });
    num("sweep.d_max", [](Settings& s) -> auto& { return s.sweep.d_max; });
    num("sweep.success_target", [](Settings& s) -> auto& { return s.sweep.success_target; });
    t["sweep.alpha_target"] = Field{
        [](const Settings& s) { return s.sweep.alpha_target ? fmt(*s.sweep.alpha_target) : "none"; },
        [](Settings& s, std::string_view text) {
          if (text == "none") s.sweep.alpha_target.reset();
          else s.sweep.alpha_target = parse_double(text);
        }};
    num("sweep.alpha_reps", [](Settings& s) -> auto& { return s.sweep.alpha_reps; });
    num("sweep.jobs", [](Settings& s) -> auto& { return s.sweep.jobs; });

    num("analyze.q", [](Settings& s) -> auto& { return s.lucky_q; });
    num("alpha.reps", [](Settings& s) -> auto& { return s.alpha_reps; });
    return t;
  }();
  return table;
}

// Jobs never change results, so they stay out of the resolved config and hash.
bool hashed(std::string_view key) { return key != "sweep.jobs"; }

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in, std::string_view source)
{
  ConfigFile f;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw Error(std::string(source) + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const auto key = trim(s.substr(0, eq));
    if (key.empty()) throw Error(std::string(source) + ":" + std::to_string(lineno) + ": empty key");
    f.values[std::string(key)] = std::string(trim(s.substr(eq + 1)));
  }
  return f;
}

ConfigFile ConfigFile::load(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  return parse(in, path);
}

void Settings::set(std::string_view key, std::string_view value)
{
  const auto it = fields().find(key);
  if (it == fields().end()) throw Error("unknown config key '" + std::string(key) + "'");
  try {
    it->second.set(*this, trim(value));
  } catch (const std::exception& e) {
    throw Error("bad value for '" + std::string(key) + "': " + e.what());
  }
}

void Settings::apply(const ConfigFile& file)
{
  for (const auto& [k, v] : file.values) set(k, v);
}

void Settings::finalize()
{
  gen.seed = seed;
  train.seed = seed;
  sweep.seed = seed;
  sweep.gen = gen;
  sweep.train = train;
}

std::map<std::string, std::string> Settings::resolved() const
{
  std::map<std::string, std::string> out;
  for (const auto& [k, f] : fields())
    if (hashed(k)) out[k] = f.get(*this);
  return out;
}

std::vector<std::string> Settings::keys()
{
  std::vector<std::string> out;
  for (const auto& [k, f] : fields()) out.push_back(k);
  return out;
}

std::uint64_t RunManifest::config_hash() const
{
  // FNV-1a over "key=value\n" in key order, finished with mix64.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  feed(command);
  feed("\n");
  for (const auto& [k, v] : config) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  return mix64(h);
}

std::string RunManifest::to_json() const
{
  nlohmann::ordered_json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["config_schema"] = config_schema_version;
  j["seed"] = seed;
  std::ostringstream hash;
  hash << std::hex << config_hash();
  j["config_hash"] = hash.str();
  j["config"] = config;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const
{
  if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty())
    std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << to_json();
}

std::vector<double> parse_list(std::string_view text)
{
  std::vector<double> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = trim(text.substr(start, comma == std::string_view::npos ? text.size() - start : comma - start));
    if (item.empty()) throw Error("empty list element in '" + std::string(text) + "'");
    out.push_back(parse_double(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_list(const std::vector<double>& values)
{
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += format_exact(values[i]);
  }
  return s;
}

}  // namespace sgnn
