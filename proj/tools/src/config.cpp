#include "orbit/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "orbit/errors.hpp"
#include "orbit/io.hpp"

namespace orbit::cli {

namespace {

Json from_toml(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    Json j = Json::object();
    for (const auto& [key, value] : *t) j[std::string(key.str())] = from_toml(value);
    return j;
  }
  if (const auto* a = node.as_array()) {
    Json j = Json::array();
    for (const auto& value : *a) j.push_back(from_toml(value));
    return j;
  }
  if (const auto* v = node.as_integer()) return Json(v->get());
  if (const auto* v = node.as_floating_point()) return Json(v->get());
  if (const auto* v = node.as_boolean()) return Json(v->get());
  if (const auto* v = node.as_string()) return Json(v->get());
  throw ConfigError("unsupported TOML value (dates and times are not accepted)");
}

std::string dotted(std::string_view path) { return std::string(path); }

const Json* walk(const Json& cfg, std::string_view path) {
  const Json* cur = &cfg;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto dot = path.find('.', start);
    const auto key = std::string(path.substr(start, dot == std::string_view::npos ? path.npos : dot - start));
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &(*cur)[key];
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return cur;
}

std::int64_t as_int(const Json& v, std::string_view what) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e18) return static_cast<std::int64_t>(d);
  }
  throw ConfigError("'" + dotted(what) + "' must be an integer");
}

double as_double(const Json& v, std::string_view what) {
  if (v.is_number()) return v.get<double>();
  throw ConfigError("'" + dotted(what) + "' must be a number");
}

}  // namespace

Json parse_config_text(std::string_view text, bool as_json) {
  if (as_json) {
    try {
      Json j = Json::parse(text.begin(), text.end());
      if (!j.is_object()) throw ConfigError("config root must be an object");
      return j;
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("config JSON: ") + e.what());
    }
  }
  try {
    return from_toml(toml::parse(text));
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config TOML: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(msg.str());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json load_config_file(const std::string& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool as_json = path.ends_with(".json") || (first != std::string::npos && text[first] == '{');
  return parse_config_text(text, as_json);
}

Json default_config(const std::string& command) {
  Json d;
  d["seed"] = 0;
  d["threads"] = 1;
  d["format"] = "json";
  d["out"] = "";
  if (command == "rank-table") {
    d["rank_table"] = {{"mode", "auto"}, {"degree", 3}, {"points", 1}};
  } else if (command == "hessian-test") {
    d["hessian_test"] = {{"degree", 3}, {"attempts", 5}};
  } else if (command == "count") {
    d["count"] = {{"p_max", 200}};
  } else if (command == "estimate") {
    d["estimate"] = {{"max_order", 3}, {"delta", 1e-3}, {"blocks", 0}};
  } else if (command == "recover") {
    d["recover"] = {{"n", 0}, {"delta", 1e-3}, {"blocks", 0}, {"starts", 20}, {"max_evaluations", 4000},
                    {"tolerance", 1e-8}, {"assume_identifiable", false}, {"signal_out", ""}};
  } else if (command == "sigma-scaling") {
    d["sigma_scaling"] = {{"epsilon", 0.1}, {"trials", 20}, {"confirm", 2}, {"delta", 1e-3}};
  }
  d["signal"] = {{"scale", 1.0}};
  return d;
}

void merge_into(Json& base, const Json& over) {
  if (!over.is_object()) {
    base = over;
    return;
  }
  if (!base.is_object()) base = Json::object();
  for (const auto& [key, value] : over.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      merge_into(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

Json resolve_config(const std::string& command, const Json& file, const Overrides& flags) {
  Json cfg = default_config(command);
  merge_into(cfg, file);
  if (flags.seed) cfg["seed"] = *flags.seed;
  if (flags.threads) cfg["threads"] = *flags.threads;
  if (flags.out) cfg["out"] = *flags.out;
  if (flags.format) cfg["format"] = *flags.format;
  cfg["command"] = command;
  const auto format = get_string(cfg, "format");
  if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
  if (get_int(cfg, "threads") < 1) throw ConfigError("threads must be positive");
  if (!cfg.contains("signal") || !cfg["signal"].contains("seed")) cfg["signal"]["seed"] = cfg["seed"];
  return cfg;
}

const Json* find(const Json& cfg, std::string_view path) { return walk(cfg, path); }

const Json& require(const Json& cfg, std::string_view path) {
  const Json* v = walk(cfg, path);
  if (v == nullptr || v->is_null()) throw ConfigError("missing config value '" + dotted(path) + "'");
  return *v;
}

std::int64_t get_int(const Json& cfg, std::string_view path) { return as_int(require(cfg, path), path); }

double get_double(const Json& cfg, std::string_view path) { return as_double(require(cfg, path), path); }

std::string get_string(const Json& cfg, std::string_view path) {
  const Json& v = require(cfg, path);
  if (!v.is_string()) throw ConfigError("'" + dotted(path) + "' must be a string");
  return v.get<std::string>();
}

bool get_bool(const Json& cfg, std::string_view path) {
  const Json& v = require(cfg, path);
  if (!v.is_boolean()) throw ConfigError("'" + dotted(path) + "' must be true or false");
  return v.get<bool>();
}

std::vector<std::int64_t> int_list(const Json& value, std::string_view what) {
  std::vector<std::int64_t> out;
  if (value.is_array()) {
    for (const auto& v : value) out.push_back(as_int(v, what));
  } else if (value.is_object()) {
    const auto from = as_int(require(value, "from"), what);
    const auto to = as_int(require(value, "to"), what);
    const auto step = value.contains("step") ? as_int(value["step"], what) : 1;
    if (step <= 0) throw ConfigError("'" + dotted(what) + "' step must be positive");
    for (auto v = from; v <= to; v += step) out.push_back(v);
  } else {
    out.push_back(as_int(value, what));
  }
  if (out.empty()) throw ConfigError("'" + dotted(what) + "' grid is empty");
  return out;
}

std::vector<double> number_list(const Json& value, std::string_view what) {
  std::vector<double> out;
  if (value.is_array()) {
    for (const auto& v : value) out.push_back(as_double(v, what));
  } else {
    out.push_back(as_double(value, what));
  }
  if (out.empty()) throw ConfigError("'" + dotted(what) + "' grid is empty");
  return out;
}

std::vector<std::int64_t> n_grid(const Json& value) {
  std::vector<std::int64_t> out;
  if (value.is_object()) {
    const double from = as_double(require(value, "from"), "n_grid.from");
    const double to = as_double(require(value, "to"), "n_grid.to");
    const double factor = value.contains("factor") ? as_double(value["factor"], "n_grid.factor") : 2.0;
    if (!(from >= 1) || !(to >= from) || !(factor > 1.0)) throw ConfigError("n_grid needs 1 <= from <= to, factor > 1");
    for (double n = from; n <= to * (1 + 1e-12); n *= factor) {
      const auto r = static_cast<std::int64_t>(std::llround(n));
      if (out.empty() || r > out.back()) out.push_back(r);
    }
  } else {
    for (const auto& v : value) out.push_back(as_int(v, "n_grid"));
    if (!std::is_sorted(out.begin(), out.end()) || std::adjacent_find(out.begin(), out.end()) != out.end()) {
      throw ConfigError("n_grid must be strictly increasing");
    }
  }
  if (out.empty()) throw ConfigError("n_grid is empty");
  if (out.front() < 1) throw ConfigError("n_grid values must be positive");
  return out;
}

ProblemSpec spec_from_config(const Json& cfg, const Json& cell_overrides) {
  Json spec = cfg.contains("spec") ? cfg["spec"] : Json::object();
  if (!spec.is_object()) throw ConfigError("[spec] must be a table");
  for (const auto& [key, value] : cell_overrides.items()) {
    if (key != "degree") spec[key] = value;
  }
  if (!spec.contains("group")) throw ConfigError("missing config value 'spec.group'");
  // K without explicit weights means uniform weights
  if (spec.contains("K") && spec.contains("weights") && spec["weights"].size() != spec["K"].get<std::size_t>() &&
      cell_overrides.contains("K")) {
    spec.erase("weights");
  }
  try {
    return io::spec_from_json(spec.dump());
  } catch (const SpecError& e) {
    throw ConfigError(std::string("[spec]: ") + e.what());
  }
}

std::vector<Json> expand_grid(const Json& cfg) {
  static const std::vector<std::string> keys{"p", "shells", "frequencies", "K", "degree"};
  std::vector<Json> cells{Json::object()};
  const Json* grid = find(cfg, "grid");
  if (grid == nullptr) return cells;
  if (!grid->is_object()) throw ConfigError("[grid] must be a table");
  for (const auto& [key, value] : grid->items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown grid key '" + key + "'");
  }
  for (const auto& key : keys) {
    if (!grid->contains(key)) continue;
    const auto values = int_list((*grid)[key], "grid." + key);
    std::vector<Json> next;
    for (const auto& cell : cells) {
      for (auto v : values) {
        Json c = cell;
        c[key] = v;
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

NoiseModel noise_from_config(const Json& cfg, int max_order) {
  const Json* moments = find(cfg, "noise.moments");
  if (moments == nullptr) return NoiseModel::gaussian(max_order);
  NoiseModel model;
  model.moments = number_list(*moments, "noise.moments");
  if (model.max_order() < 2 * max_order) {
    throw ConfigError("noise.moments must list E[xi^k] for k = 0.." + std::to_string(2 * max_order));
  }
  return model;
}

Signal signal_from_config(const Json& cfg, const ProblemSpec& spec) {
  if (const Json* file = find(cfg, "signal.file"); file != nullptr && !file->is_null()) {
    if (!file->is_string()) throw ConfigError("'signal.file' must be a path");
    try {
      auto [file_spec, theta] = io::signal_from_json(read_file(file->get<std::string>()));
      if (file_spec.ambient_dim() != spec.ambient_dim() || theta.size() != spec.heterogeneity) {
        throw ConfigError("signal file does not match [spec]");
      }
      return theta;
    } catch (const SpecError& e) {
      throw ConfigError(std::string("signal file: ") + e.what());
    }
  }
  Rng rng(static_cast<std::uint64_t>(get_int(cfg, "signal.seed")), 0x5167'6e61'6cULL);
  return random_signal(spec, rng, get_double(cfg, "signal.scale"));
}

}  // namespace orbit::cli
