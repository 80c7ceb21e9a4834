#include "metriplex/cli.hpp"
#include "metriplex/systems.hpp"
#include "metriplex/types.hpp"

#include <fmt/format.h>

#include <map>

namespace metriplex::cli {

namespace {

using nlohmann::json;

enum class Kind { number, integer, string, object, numbers, integers };

struct Key {
  Kind kind;
  std::map<std::string, Key> children = {};
};

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::number: return "a number";
    case Kind::integer: return "an integer";
    case Kind::string: return "a string";
    case Kind::object: return "an object";
    case Kind::numbers: return "a list of numbers";
    case Kind::integers: return "a list of integers";
  }
  return "";
}

bool matches(const json& v, Kind k) {
  switch (k) {
    case Kind::number: return v.is_number();
    case Kind::integer: return v.is_number_integer();
    case Kind::string: return v.is_string();
    case Kind::object: return v.is_object();
    case Kind::numbers:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!e.is_number()) return false;
      return true;
    case Kind::integers:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!e.is_number_integer()) return false;
      return true;
  }
  return false;
}

void check(const json& obj, const std::map<std::string, Key>& schema,
           const std::string& prefix) {
  for (const auto& [key, value] : obj.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    auto it = schema.find(key);
    if (it == schema.end())
      throw ConfigError(fmt::format("unknown key '{}'", path));
    if (!matches(value, it->second.kind))
      throw ConfigError(
          fmt::format("key '{}' must be {}", path, kind_name(it->second.kind)));
    if (it->second.kind == Kind::object) check(value, it->second.children, path);
  }
}

const Key kSystem{Kind::object,
                  {{"name", {Kind::string}},
                   {"K", {Kind::integer}},
                   {"c", {Kind::number}},
                   {"file", {Kind::string}}}};
const Key kGrid{Kind::object,
                {{"min", {Kind::numbers}},
                 {"max", {Kind::numbers}},
                 {"cells", {Kind::integers}}}};
const Key kInitial{Kind::object,
                   {{"mean", {Kind::numbers}}, {"std", {Kind::numbers}}}};

std::map<std::string, Key> schema_for(const std::string& scenario) {
  std::map<std::string, Key> s = {
      {"schema", {Kind::string}},
      {"scenario", {Kind::string}},
      {"seed", {Kind::integer}},
      {"system", kSystem},
  };
  if (scenario == "fpe") {
    s["grid"] = kGrid;
    s["D"] = {Kind::number};
    s["beta_mode"] = {Kind::string};
    s["dt"] = {Kind::number};
    s["t_end"] = {Kind::number};
    s["mu"] = {Kind::numbers};
    s["initial"] = kInitial;
    s["output"] = {Kind::object, {{"dir", {Kind::string}}, {"every", {Kind::integer}}}};
  } else if (scenario == "sde") {
    s["D"] = {Kind::number};
    s["beta_mode"] = {Kind::string};
    s["dt"] = {Kind::number};
    s["steps"] = {Kind::integer};
    s["particles"] = {Kind::integer};
    s["adapt_every"] = {Kind::integer};
    s["initial"] = kInitial;
    s["density_grid"] = kGrid;
    s["output"] = {Kind::object,
                   {{"dir", {Kind::string}},
                    {"every", {Kind::integer}},
                    {"snapshot", {Kind::string}}}};
  } else if (scenario == "chm-integrate") {
    s["dt"] = {Kind::number};
    s["steps"] = {Kind::integer};
    s["initial"] = {Kind::object, {{"norm", {Kind::number}}}};
    s["output"] = {Kind::object, {{"dir", {Kind::string}}, {"every", {Kind::integer}}}};
  } else if (scenario == "chm-thermalize") {
    s["D"] = {Kind::number};
    s["beta"] = {Kind::number};
    s["mu"] = {Kind::number};
    s["dt"] = {Kind::number};
    s["steps"] = {Kind::integer};
    s["particles"] = {Kind::integer};
    s["sample_every"] = {Kind::integer};
    s["quench"] = {Kind::object, {{"beta", {Kind::number}}, {"steps", {Kind::integer}}}};
    s["output"] = {Kind::object, {{"dir", {Kind::string}}, {"every", {Kind::integer}}}};
  } else {
    throw ConfigError(fmt::format(
        "unknown scenario '{}' (expected fpe, sde, chm-integrate or "
        "chm-thermalize)",
        scenario));
  }
  return s;
}

// Fill missing keys of `out` from `defaults`, recursing into objects.
void merge_defaults(json& out, const json& defaults) {
  for (const auto& [k, v] : defaults.items()) {
    if (!out.contains(k)) out[k] = v;
    else if (v.is_object() && out[k].is_object()) merge_defaults(out[k], v);
  }
}

json default_grid(int n) {
  const double w = n == 2 ? 7.0 : 4.0;
  const int cells = n == 2 ? 128 : 24;
  return {{"min", std::vector<double>(n, -w)},
          {"max", std::vector<double>(n, w)},
          {"cells", std::vector<int>(n, cells)}};
}

// Off-centre start so default runs show relaxation.
std::vector<double> sde_default_mean(int n) {
  std::vector<double> m(n, 0.0);
  m[0] = 1.0;
  return m;
}

void require_length(const json& cfg, const std::string& path, int n) {
  const json* v = &cfg;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    v = &(*v)[path.substr(start, dot - start)];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (static_cast<int>(v->size()) != n)
    throw ConfigError(fmt::format("key '{}' needs {} entries (system dimension)", path, n));
}

void positive(const json& cfg, const char* key) {
  if (!(cfg[key].get<double>() > 0.0))
    throw ConfigError(fmt::format("key '{}' must be positive", key));
}

}  // namespace

json normalize_config(const json& config) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  if (!config.contains("schema"))
    throw ConfigError(fmt::format("missing key 'schema' (expected \"{}\")", kSchema));
  if (!config["schema"].is_string() || config["schema"] != kSchema)
    throw ConfigError(fmt::format("key 'schema' must be \"{}\"", kSchema));
  if (!config.contains("scenario") || !config["scenario"].is_string())
    throw ConfigError("missing key 'scenario'");
  const std::string scenario = config["scenario"];
  check(config, schema_for(scenario), "");

  json cfg = config;
  const bool is_chm = scenario.rfind("chm", 0) == 0;
  merge_defaults(cfg, {{"seed", 1},
                       {"system",
                        {{"name", is_chm ? "chm" : "canonical-2d"},
                         {"K", scenario == "chm-integrate" ? 3 : 2},
                         {"c", 0.0}}}});
  if (is_chm && cfg["system"]["name"] != "chm")
    throw ConfigError("key 'system.name' must be \"chm\" for chm scenarios");
  if (cfg["system"]["K"].get<int>() < 1)
    throw ConfigError("key 'system.K' must be at least 1");

  int n = 0;
  if (!is_chm) {
    SystemParams sp;
    sp.file = cfg["system"].value("file", "");
    n = make_system(cfg["system"]["name"], sp).dimension();
  }

  if (scenario == "fpe") {
    merge_defaults(cfg, {{"grid", default_grid(n)},
                         {"D", 0.2},
                         {"beta_mode", "adaptive"},
                         {"t_end", 10.0},
                         {"mu", json::array()},
                         {"initial",
                          {{"mean", std::vector<double>(n, 0.0)},
                           {"std", std::vector<double>(n, n == 2 ? 1.0 : 0.6)}}},
                         {"output", {{"dir", "out"}, {"every", 100}}}});
    for (const char* k : {"grid.min", "grid.max", "grid.cells", "initial.mean", "initial.std"})
      require_length(cfg, k, n);
    if (cfg.contains("dt")) positive(cfg, "dt");
  } else if (scenario == "sde") {
    merge_defaults(cfg, {{"D", 0.2},
                         {"beta_mode", "fixed:1"},
                         {"dt", 0.02},
                         {"steps", 1000},
                         {"particles", 10000},
                         {"adapt_every", 10},
                         {"initial",
                          {{"mean", sde_default_mean(n)},
                           {"std", std::vector<double>(n, 0.5)}}},
                         {"output", {{"dir", "out"}, {"every", 50}, {"snapshot", "binary"}}}});
    for (const char* k : {"initial.mean", "initial.std"}) require_length(cfg, k, n);
    if (cfg.contains("density_grid"))
      for (const char* k : {"density_grid.min", "density_grid.max", "density_grid.cells"})
        require_length(cfg, k, n);
    const std::string snap = cfg["output"]["snapshot"];
    if (snap != "binary" && snap != "csv")
      throw ConfigError("key 'output.snapshot' must be \"binary\" or \"csv\"");
    positive(cfg, "dt");
  } else if (scenario == "chm-integrate") {
    merge_defaults(cfg, {{"dt", 1e-3},
                         {"steps", 1000},
                         {"initial", {{"norm", 1.0}}},
                         {"output", {{"dir", "out"}, {"every", 10}}}});
    positive(cfg, "dt");
  } else if (scenario == "chm-thermalize") {
    merge_defaults(cfg, {{"D", 500.0},
                         {"beta", 1.0},
                         {"mu", 1.0},
                         {"dt", 0.005},
                         {"steps", 1000},
                         {"particles", 10000},
                         {"sample_every", 10},
                         {"quench", {{"beta", 0.25}, {"steps", 200}}},
                         {"output", {{"dir", "out"}, {"every", 10}}}});
    positive(cfg, "dt");
  }
  if (cfg["output"]["every"].get<long>() < 1)
    throw ConfigError("key 'output.every' must be at least 1");
  if (cfg.contains("steps") && cfg["steps"].get<long>() < 1)
    throw ConfigError("key 'steps' must be at least 1");
  return cfg;
}

}  // namespace metriplex::cli
