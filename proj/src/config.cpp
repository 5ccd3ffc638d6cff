#include "arw/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace arw::cli {

namespace {

KeySpec req(std::string name, std::string help) { return {std::move(name), std::nullopt, false, std::move(help)}; }
KeySpec opt(std::string name, std::string fallback, std::string help) {
  return {std::move(name), std::move(fallback), false, std::move(help)};
}

const std::vector<Schema>& schemas() {
  static const std::vector<Schema> all{
      {"simulate",
       "run independent replicas of one system",
       {req("graph", "cycle:L | torus:L:dim | treeball:d:r | complete:k"),
        req("law", "poisson:z | bern:p | det:k"),
        opt("paths", "srw", "srw | hold:r | kernel:w1,...,wd:r"),
        opt("rule", "standard", "standard | crowding:R:strength"),
        req("lambda", "sleep rate"),
        opt("stop", "absorbed", "absorbed | time:T | events:M"),
        opt("budget", "10000000", "event budget for stop=absorbed"),
        opt("seed", "0", "replica r runs with seed + r"),
        opt("reps", "1", "number of replicas"),
        opt("out", "-", "CSV path, - for stdout")}},
      {"sweep",
       "absorption statistics over a (zeta, lambda, L) grid",
       {opt("graph", "cycle", "cycle | torus:dim"),
        opt("law", "poisson", "poisson | bern | det"),
        opt("paths", "srw", "path distribution"),
        req("zeta", "comma-separated densities"),
        req("lambda", "comma-separated sleep rates"),
        req("L", "comma-separated side lengths"),
        opt("reps", "10", "replicas per cell"),
        opt("budget", "1000000", "event budget per replica"),
        opt("seed", "0", "master seed"),
        opt("out", "-", "CSV path, - for stdout"),
        opt("svg", "", "optional heatmap path")}},
      {"critical",
       "order-parameter curve and critical density estimate",
       {opt("graph", "cycle", "cycle | torus:dim"),
        opt("paths", "srw", "path distribution"),
        req("lambda", "sleep rate"),
        opt("L", "256", "side length"),
        opt("reps", "20", "replicas per density"),
        opt("budget", "200000", "event budget per replica"),
        opt("K", "50", "events per particle marking a density active"),
        opt("iters", "6", "bisection steps"),
        opt("grid", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1,1.1,1.2", "initial densities"),
        opt("seed", "0", "master seed"),
        opt("out", "-", "CSV path, - for stdout")}},
      {"oracle",
       "exact absorption time of a small system, optionally against Monte Carlo",
       {req("graph", "graph descriptor"),
        req("place", "comma-separated starting vertices"),
        req("lambda", "sleep rate"),
        opt("paths", "srw", "path distribution"),
        opt("cap", "20000", "state cap"),
        opt("mc_reps", "0", "Monte Carlo replicas, 0 to skip"),
        opt("budget", "10000000", "event budget per replica"),
        opt("seed", "0", "master seed"),
        opt("out", "-", "CSV path, - for stdout")}},
      {"gadget",
       "candidate and mark statistics on a torus",
       {req("graph", "cycle:L | torus:L:dim"),
        opt("law", "poisson:0.5", "initial law"),
        opt("paths", "srw", "path distribution"),
        opt("rule", "standard", "standard | crowding:R:strength"),
        req("lambda", "sleep rate"),
        req("T", "candidate horizon"),
        req("k", "jumps required by T"),
        req("Tlong", "look-ahead horizon, >= T"),
        req("n", "mark count"),
        opt("reps", "100", "replicas"),
        opt("budget", "100000000", "event budget per replica"),
        opt("seed", "0", "master seed"),
        opt("out", "-", "CSV path, - for stdout")}},
      {"report",
       "heatmap from a sweep CSV, or self-checks with --check",
       {{"check", std::string("false"), true, "run the self-checks; exit 3 on failure"},
        opt("in", "", "sweep CSV to plot"),
        opt("svg", "", "heatmap output path"),
        opt("metric", "mean_events_pp", "sweep column to color by"),
        opt("fault", "1", "sleep-rate multiplier injected into the oracle self-check"),
        opt("seed", "0", "master seed for the self-checks"),
        opt("out", "-", "check log path, - for stdout")}},
  };
  return all;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    parts.push_back(trim(s.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc{} && ptr == s.data() + s.size();
}

double to_real(std::string_view key, std::string_view s) {
  double v = 0.0;
  if (!parse_number(s, v)) {
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

// Integers also accept integral reals such as 1e6.
std::int64_t to_integer(std::string_view key, std::string_view s) {
  std::int64_t v = 0;
  if (parse_number(s, v)) return v;
  double d = 0.0;
  if (parse_number(s, d) && std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e18) {
    return static_cast<std::int64_t>(d);
  }
  throw ConfigError("key '" + std::string(key) + "': expected an integer, got '" + std::string(s) + "'");
}

}  // namespace

const KeySpec* Schema::find(std::string_view key) const {
  for (const auto& k : keys) {
    if (k.name == key) return &k;
  }
  return nullptr;
}

const Schema& schema_for(std::string_view subcommand) {
  for (const auto& s : schemas()) {
    if (s.subcommand == subcommand) return s;
  }
  throw ConfigError("unknown subcommand '" + std::string(subcommand) + "'");
}

std::span<const Schema> all_schemas() { return schemas(); }

Config::Config(const Schema& schema, std::vector<std::pair<std::string, std::string>> values)
    : schema_(&schema), values_(std::move(values)) {}

bool Config::has(std::string_view key) const {
  return std::any_of(values_.begin(), values_.end(), [&](const auto& kv) { return kv.first == key; });
}

const std::string& Config::text(std::string_view key) const {
  for (const auto& [k, v] : values_) {
    if (k == key) return v;
  }
  throw ConfigError("key '" + std::string(key) + "' is not set");
}

double Config::real(std::string_view key) const { return to_real(key, text(key)); }

std::int64_t Config::integer(std::string_view key) const { return to_integer(key, text(key)); }

std::uint64_t Config::unsigned_integer(std::string_view key) const {
  const std::string& s = text(key);
  std::uint64_t v = 0;
  if (parse_number(s, v)) return v;
  const auto i = to_integer(key, s);
  if (i < 0) throw ConfigError("key '" + std::string(key) + "': must be >= 0, got '" + s + "'");
  return static_cast<std::uint64_t>(i);
}

bool Config::boolean(std::string_view key) const {
  const std::string& s = text(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true or false, got '" + s + "'");
}

std::vector<double> Config::real_list(std::string_view key) const {
  std::vector<double> out;
  for (const auto part : split_commas(text(key))) out.push_back(to_real(key, part));
  return out;
}

std::vector<std::int64_t> Config::integer_list(std::string_view key) const {
  std::vector<std::int64_t> out;
  for (const auto part : split_commas(text(key))) out.push_back(to_integer(key, part));
  return out;
}

std::string Config::echo() const {
  std::string line = "subcommand=" + schema_->subcommand;
  for (const auto& [k, v] : values_) line += " " + k + "=" + v;
  return line;
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view body,
                                                                   std::string_view origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= body.size()) {
    const auto end = std::min(body.find('\n', start), body.size());
    std::string_view line = body.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
    }
    out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

Config parse_config(std::span<const std::string> args) {
  if (args.empty()) throw ConfigError("missing subcommand");
  const Schema& schema = schema_for(args[0]);

  std::vector<std::pair<std::string, std::string>> flags;
  std::optional<std::string> file;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& arg = args[i];
    if (!arg.starts_with("--") || arg.size() == 2) {
      throw ConfigError("unexpected argument '" + arg + "'");
    }
    std::string key = arg.substr(2);
    std::optional<std::string> value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    }
    const KeySpec* spec = schema.find(key);
    if (key != "config" && !spec) throw ConfigError("unknown key '" + key + "' for " + schema.subcommand);
    if (!value) {
      const bool next_is_value = i + 1 < args.size() && !args[i + 1].starts_with("--");
      if (spec && spec->flag && !next_is_value) {
        value = "true";
      } else if (!next_is_value) {
        throw ConfigError("key '" + key + "' needs a value");
      } else {
        value = args[++i];
      }
    }
    if (key == "config") {
      file = *value;
    } else {
      flags.emplace_back(std::move(key), std::move(*value));
    }
  }

  std::vector<std::pair<std::string, std::string>> given;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("key 'config': cannot read '" + *file + "'");
    std::ostringstream body;
    body << in.rdbuf();
    for (auto& [k, v] : parse_config_text(body.str(), *file)) {
      if (!schema.find(k)) throw ConfigError("unknown key '" + k + "' in " + *file);
      given.emplace_back(std::move(k), std::move(v));
    }
  }
  for (auto& kv : flags) given.push_back(std::move(kv));  // later entries win

  std::vector<std::pair<std::string, std::string>> resolved;
  for (const auto& spec : schema.keys) {
    std::optional<std::string> value = spec.fallback;
    bool set = false;
    for (const auto& [k, v] : given) {
      if (k == spec.name) {
        value = v;
        set = true;
      }
    }
    if (!value) throw ConfigError("missing required key '" + spec.name + "' for " + schema.subcommand);
    if (set && value->empty() && !spec.fallback) {
      throw ConfigError("key '" + spec.name + "' is empty");
    }
    resolved.emplace_back(spec.name, std::move(*value));
  }
  return Config(schema, std::move(resolved));
}

}  // namespace arw::cli
