#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "orbit/estimation.hpp"
#include "orbit/problem.hpp"

namespace orbit::cli {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  std::optional<std::string> format;
};

/// TOML text, or JSON when `as_json` is set.
Json parse_config_text(std::string_view text, bool as_json);

/// Reads a .toml or .json file (JSON also detected by a leading '{').
Json load_config_file(const std::string& path);

/// Built-in defaults for a command, before any file or flag.
Json default_config(const std::string& command);

/// defaults < file < flags. Objects merge recursively; other values replace.
Json resolve_config(const std::string& command, const Json& file, const Overrides& flags);

/// Recursive merge of `over` into `base`.
void merge_into(Json& base, const Json& over);

// Typed accessors; missing keys or wrong types raise ConfigError naming the dotted path.
const Json& require(const Json& cfg, std::string_view path);
const Json* find(const Json& cfg, std::string_view path);
std::int64_t get_int(const Json& cfg, std::string_view path);
double get_double(const Json& cfg, std::string_view path);
std::string get_string(const Json& cfg, std::string_view path);
bool get_bool(const Json& cfg, std::string_view path);

/// A list of integers, or an inclusive range {from, to} (optional step).
std::vector<std::int64_t> int_list(const Json& value, std::string_view what);

/// A list of numbers.
std::vector<double> number_list(const Json& value, std::string_view what);

/// Sample-size grid: a list, or {from, to, factor} with geometric spacing (rounded, deduplicated).
std::vector<std::int64_t> n_grid(const Json& value);

/// The [spec] block as a ProblemSpec, with optional field overrides from a grid cell.
ProblemSpec spec_from_config(const Json& cfg, const Json& cell_overrides = Json::object());

/// Cartesian product of [grid] entries in the fixed key order p, shells, frequencies, K, degree.
/// Returns one object per cell in row-major grid order; an absent grid gives one empty cell.
std::vector<Json> expand_grid(const Json& cfg);

/// Gaussian unless [noise] moments are given.
NoiseModel noise_from_config(const Json& cfg, int max_order);

/// Ground-truth signal: [signal] file, else random_signal with [signal] seed and scale.
Signal signal_from_config(const Json& cfg, const ProblemSpec& spec);

/// Raw bytes of a file; ConfigError when it cannot be read.
std::string read_file(const std::string& path);

}  // namespace orbit::cli
