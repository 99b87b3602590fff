#include "orbit/cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "orbit/algebra_tests.hpp"
#include "orbit/cli/experiments.hpp"
#include "orbit/counting.hpp"
#include "orbit/errors.hpp"
#include "orbit/io.hpp"

namespace orbit::cli {

namespace {

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::uint64_t seed_of(const Json& cfg) { return static_cast<std::uint64_t>(get_int(cfg, "seed")); }
int threads_of(const Json& cfg) { return static_cast<int>(get_int(cfg, "threads")); }

Json spec_params(const ProblemSpec& spec) {
  const bool finite = spec.is_finite();
  return Json::array({to_string(spec.family), finite ? Json(spec.p) : Json(nullptr),
                      finite ? Json(nullptr) : Json(spec.shells), finite ? Json(nullptr) : Json(spec.frequencies),
                      to_string(spec.projection), spec.heterogeneity});
}

std::vector<std::string> spec_header() { return {"group", "p", "shells", "frequencies", "projection", "K"}; }

int cell_degree(const Json& cell, const Json& cfg, const std::string& section) {
  const auto d = cell.contains("degree") ? cell["degree"].get<std::int64_t>() : get_int(cfg, section + ".degree");
  if (d < 1 || d > 3) throw ConfigError("degree must be 1, 2 or 3");
  return static_cast<int>(d);
}

ProblemSpec cell_spec(const Json& cfg, const Json& cell) {
  ProblemSpec spec = spec_from_config(cfg, cell);
  return spec;
}

std::optional<int> safe_trdeg(const ProblemSpec& spec) {
  try {
    return trdeg_ring(spec);
  } catch (const Error&) {
    return std::nullopt;
  }
}

Json opt(const std::optional<int>& v) { return v ? Json(*v) : Json(nullptr); }

std::int64_t cell_value(const Json& cell, const Json& cfg, const std::string& key) {
  if (cell.contains(key)) return cell[key].get<std::int64_t>();
  return get_int(cfg, "spec." + key);
}

void require_sigma(const Json& cfg) {
  const Json* s = find(cfg, "spec.sigma");
  if (s == nullptr || s->is_null()) throw ConfigError("missing config value 'spec.sigma'");
}

SampleSet load_samples(const std::string& path) {
  try {
    if (path.ends_with(".omnt")) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw ConfigError("cannot read file '" + path + "'");
      return io::read_samples_binary(in);
    }
    return io::samples_from_json(read_file(path)).second;
  } catch (const SpecError& e) {
    throw ConfigError("samples file '" + path + "': " + e.what());
  }
}

EstimateOptions estimate_options(const Json& cfg, const std::string& section) {
  EstimateOptions o;
  if (find(cfg, section + ".max_order") != nullptr) o.max_order = static_cast<int>(get_int(cfg, section + ".max_order"));
  o.delta = get_double(cfg, section + ".delta");
  o.blocks = static_cast<int>(get_int(cfg, section + ".blocks"));
  o.threads = threads_of(cfg);
  if (!(o.delta > 0 && o.delta < 1)) throw ConfigError(section + ".delta must lie in (0, 1)");
  if (o.blocks < 0) throw ConfigError(section + ".blocks must be nonnegative");
  return o;
}

Json candidates_json(const ProblemSpec& spec, const RecoveryResult& r) {
  return Json::parse(io::recovery_result_to_json(spec, r));
}

void write_candidates(const std::string& path, const ProblemSpec& spec, const std::vector<Signal>& candidates) {
  if (path.empty()) return;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::string target = path;
    if (i > 0) {
      const auto dot = path.rfind('.');
      const std::string stem = dot == std::string::npos ? path : path.substr(0, dot);
      const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
      target = stem + "." + std::to_string(i) + ext;
    }
    write_file(target, io::signal_to_json(spec, candidates[i]) + "\n");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

CommandOutput cmd_rank_table(const Json& cfg) {
  const auto cells = expand_grid(cfg);
  const auto mode_name = get_string(cfg, "rank_table.mode");
  if (mode_name != "auto" && mode_name != "exact" && mode_name != "numeric") {
    throw ConfigError("rank_table.mode must be auto, exact or numeric");
  }
  const int points = static_cast<int>(get_int(cfg, "rank_table.points"));
  if (points < 1) throw ConfigError("rank_table.points must be positive");
  std::vector<ProblemSpec> specs;
  std::vector<int> degrees;
  for (const auto& cell : cells) {
    specs.push_back(cell_spec(cfg, cell));
    degrees.push_back(cell_degree(cell, cfg, "rank_table"));
    if (mode_name == "exact" && !specs.back().is_finite()) throw ConfigError("exact rank mode needs a finite group");
  }

  CommandOutput out;
  out.table.header = spec_header();
  for (const char* h : {"degree", "mode", "rows", "cols", "rank", "trdeg", "gap_ratio", "verdict"}) {
    out.table.header.emplace_back(h);
  }
  std::vector<std::vector<Json>> rows(cells.size());
  parallel_for(cells.size(), threads_of(cfg), [&](std::size_t i) {
    const auto& spec = specs[i];
    Rng rng(seed_of(cfg), i);
    const auto basis = invariant_basis_up_to(spec, degrees[i]);
    const RankMode mode = mode_name == "numeric" || (mode_name == "auto" && !(spec.is_finite() && basis.has_exact()))
                              ? RankMode::Numeric
                              : RankMode::Exact;
    std::vector<Json> row = spec_params(spec);
    row.emplace_back(degrees[i]);
    row.emplace_back(to_string(mode));
    try {
      const auto r = points > 1 ? jacobian_rank_consensus(basis, spec, rng, mode, points)
                                : jacobian_rank(basis, spec, rng, mode);
      for (Json v : {Json(r.rows), Json(r.cols), Json(r.rank), opt(safe_trdeg(spec)), num(r.gap_ratio),
                     Json(to_string(r.verdict))}) {
        row.push_back(std::move(v));
      }
    } catch (const InconclusiveError&) {
      for (Json v : {Json(nullptr), Json(nullptr), Json(nullptr), opt(safe_trdeg(spec)), Json(nullptr),
                     Json(to_string(Verdict::Inconclusive))}) {
        row.push_back(std::move(v));
      }
    }
    rows[i] = std::move(row);
  });
  int inconclusive = 0;
  for (auto& row : rows) {
    if (row.back() == to_string(Verdict::Inconclusive)) ++inconclusive;
    out.table.add(std::move(row));
  }
  out.results["cells"] = cells.size();
  out.results["inconclusive"] = inconclusive;
  out.exit_code = inconclusive > 0 ? kExitVerdict : kExitOk;
  return out;
}

CommandOutput cmd_hessian_test(const Json& cfg) {
  const auto cells = expand_grid(cfg);
  const int attempts = static_cast<int>(get_int(cfg, "hessian_test.attempts"));
  std::vector<ProblemSpec> specs;
  std::vector<int> degrees;
  for (const auto& cell : cells) {
    specs.push_back(cell_spec(cfg, cell));
    degrees.push_back(cell_degree(cell, cfg, "hessian_test"));
    if (specs.back().heterogeneity < 1) throw ConfigError("hessian test needs K >= 1");
  }
  CommandOutput out;
  out.table.header = spec_header();
  for (const char* h : {"degree", "members", "unknowns", "jacobian_rank", "expected_jacobian_rank", "hessian_rank",
                        "expected_hessian_rank", "status", "note"}) {
    out.table.header.emplace_back(h);
  }
  std::vector<std::vector<Json>> rows(cells.size());
  parallel_for(cells.size(), threads_of(cfg), [&](std::size_t i) {
    const auto& spec = specs[i];
    const int K = spec.heterogeneity;
    Rng rng(seed_of(cfg), i);
    const auto base = invariant_basis_up_to(spec.base(), degrees[i]);
    const int unknowns = K * spec.base().ambient_dim() + K - 1;
    std::vector<Json> row = spec_params(spec);
    row.emplace_back(degrees[i]);
    row.emplace_back(base.size());
    row.emplace_back(unknowns);
    try {
      const auto r = hessian_test(spec, base, K, rng, attempts);
      for (Json v : {Json(r.jacobian_rank), Json(r.expected_jacobian_rank), Json(r.hessian_rank),
                     Json(r.expected_hessian_rank), Json(r.passed ? "pass" : "fail"), Json("")}) {
        row.push_back(std::move(v));
      }
    } catch (const PreconditionError& e) {
      for (Json v : {Json(nullptr), Json(nullptr), Json(nullptr), Json(nullptr), Json("skip"), Json(e.what())}) {
        row.push_back(std::move(v));
      }
    }
    rows[i] = std::move(row);
  });
  int failed = 0;
  for (auto& row : rows) {
    if (row[row.size() - 2] == "fail") ++failed;
    out.table.add(std::move(row));
  }
  out.results["cells"] = cells.size();
  out.results["failed"] = failed;
  out.exit_code = failed > 0 ? kExitVerdict : kExitOk;
  return out;
}

CommandOutput cmd_count(const Json& cfg) {
  const auto kind = get_string(cfg, "count.kind");
  const auto cells = expand_grid(cfg);
  CommandOutput out;
  auto value = [&](const Json& cell, const std::string& key) { return static_cast<int>(cell_value(cell, cfg, key)); };
  if (kind == "het_mra") {
    out.table.header = {"p", "K", "distinct", "needed", "trdeg", "feasible"};
    for (const auto& cell : cells) {
      const auto c = count_het_mra(value(cell, "p"), value(cell, "K"));
      out.table.add({c.p, c.K, c.distinct, c.needed, opt(safe_trdeg(ProblemSpec::cyclic(c.p).with_heterogeneity(c.K))),
                     c.feasible});
    }
  } else if (kind == "het_mra_threshold") {
    const int p_max = static_cast<int>(get_int(cfg, "count.p_max"));
    out.table.header = {"K", "min_p"};
    for (const auto& cell : cells) {
      const int K = value(cell, "K");
      Json min_p = nullptr;
      for (int p = 1; p <= p_max; ++p) {
        if (count_het_mra(p, K).feasible) {
          min_p = p;
          break;
        }
      }
      out.table.add({K, min_p});
    }
  } else if (kind == "cryo") {
    out.table.header = {"S", "F", "K", "dim_u2", "classes", "relations", "dim_u3", "trdeg", "feasible"};
    for (const auto& cell : cells) {
      const auto c = count_cryo(value(cell, "shells"), value(cell, "frequencies"), value(cell, "K"));
      out.table.add({c.S, c.F, c.K, c.dim_u2, c.classes, c.relations, c.dim_u3, c.trdeg, c.feasible});
    }
  } else if (kind == "so3_dim") {
    out.table.header = {"S", "F", "degree", "dim"};
    for (const auto& cell : cells) {
      const int S = value(cell, "shells");
      const int F = value(cell, "frequencies");
      const int d = cell.contains("degree") ? cell["degree"].get<int>() : static_cast<int>(get_int(cfg, "count.degree"));
      std::vector<int> freqs;
      for (int s = 0; s < S; ++s)
        for (int l = 1; l <= F; ++l) freqs.push_back(l);
      out.table.add({S, F, d, so3_invariant_dim(freqs, d)});
    }
  } else if (kind == "molien") {
    out.table.header = {"group", "p", "degree", "dim"};
    const int d_max = static_cast<int>(get_int(cfg, "count.degree"));
    for (const auto& cell : cells) {
      Json c = cell;
      c.erase("degree");
      const auto spec = cell_spec(cfg, c);
      if (!spec.is_finite()) throw ConfigError("molien counts need a finite group");
      const auto series = molien_series_finite(spec, d_max);
      for (int d = 0; d <= d_max; ++d) {
        out.table.add({to_string(spec.family), spec.p, d, series.coefficients[static_cast<std::size_t>(d)]});
      }
    }
  } else {
    throw ConfigError("count.kind must be het_mra, het_mra_threshold, cryo, so3_dim or molien");
  }
  out.results["kind"] = kind;
  out.results["cells"] = cells.size();
  return out;
}

CommandOutput cmd_simulate(const Json& cfg) {
  require_sigma(cfg);
  const auto spec = spec_from_config(cfg);
  const auto n = get_int(cfg, "simulate.n");
  if (n < 1) throw ConfigError("simulate.n must be positive");
  const auto path = get_string(cfg, "simulate.samples");
  const auto theta = signal_from_config(cfg, spec);
  auto samples = simulate(spec, theta, n, seed_of(cfg), threads_of(cfg));
  samples.truth = theta;
  if (path.ends_with(".omnt")) {
    std::ostringstream bytes;
    io::write_samples_binary(bytes, samples);
    write_file(path, bytes.str());
  } else {
    write_file(path, io::samples_to_json(spec, samples) + "\n");
  }
  if (const Json* truth = find(cfg, "simulate.truth_out"); truth != nullptr && truth->is_string()) {
    write_file(truth->get<std::string>(), io::signal_to_json(spec, theta) + "\n");
  }
  CommandOutput out;
  out.results["samples"] = path;
  out.results["n"] = samples.n();
  out.results["q"] = samples.q();
  out.results["sigma"] = samples.sigma;
  out.results["samples_hash"] = git_blob_hash(read_file(path));
  out.results["truth"] = Json::parse(io::signal_to_json(spec, theta));
  return out;
}

CommandOutput cmd_estimate(const Json& cfg) {
  auto options = estimate_options(cfg, "estimate");
  if (options.max_order < 1 || options.max_order > 3) throw ConfigError("estimate.max_order must be 1..3");
  MomentEstimate est;
  if (const Json* file = find(cfg, "estimate.samples"); file != nullptr && file->is_string()) {
    const auto samples = load_samples(file->get<std::string>());
    est = estimate_moments(samples, noise_from_config(cfg, options.max_order), options);
  } else {
    require_sigma(cfg);
    const auto spec = spec_from_config(cfg);
    const auto n = get_int(cfg, "estimate.n");
    if (n < 1) throw ConfigError("estimate.n must be positive");
    est = estimate_moments_streaming(spec, signal_from_config(cfg, spec), n, seed_of(cfg),
                                     noise_from_config(cfg, options.max_order), options);
  }
  const std::string text = io::moment_estimate_to_json(est);
  if (const Json* path = find(cfg, "estimate.moments_out"); path != nullptr && path->is_string()) {
    write_file(path->get<std::string>(), text + "\n");
  }
  CommandOutput out;
  out.results = Json::parse(text);
  out.table.header = {"order", "index", "est", "var"};
  for (std::size_t d = 0; d < est.tensors.size(); ++d) {
    const auto& t = est.tensors[d];
    for (std::size_t i = 0; i < t.size(); ++i) {
      out.table.add({t.order(), io::multi_index_key(t.multi_indices()[i]), num(t.values()[i]), num(est.variance[d][i])});
    }
  }
  return out;
}

CommandOutput cmd_recover(const Json& cfg) {
  require_sigma(cfg);
  const auto spec = spec_from_config(cfg);
  const auto n = get_int(cfg, "recover.n");
  if (n < 0) throw ConfigError("recover.n must be nonnegative");
  PipelineOptions options;
  options.n = n;
  options.seed = seed_of(cfg);
  options.estimate = estimate_options(cfg, "recover");
  options.estimate.max_order = 3;
  options.demix.lsq.starts = static_cast<int>(get_int(cfg, "recover.starts"));
  options.demix.lsq.max_evaluations = static_cast<int>(get_int(cfg, "recover.max_evaluations"));
  options.demix.lsq.tolerance = get_double(cfg, "recover.tolerance");
  options.demix.lsq.threads = threads_of(cfg);
  options.demix.assume_identifiable = get_bool(cfg, "recover.assume_identifiable");
  Rng rng(seed_of(cfg), 0x7265'636f'7665'72ULL);

  CommandOutput out;
  RecoveryResult recovery;
  std::optional<double> distance;
  std::int64_t used_n = n;
  std::vector<Signal> exported;
  const Json* moments_file = find(cfg, "recover.moments");
  if (moments_file != nullptr && moments_file->is_string()) {
    MomentEstimate est;
    try {
      est = io::moment_estimate_from_json(read_file(moments_file->get<std::string>()));
    } catch (const SpecError& e) {
      throw ConfigError(std::string("moments file: ") + e.what());
    }
    if (est.tensors.size() < 3) throw ConfigError("moments file needs orders 1..3");
    used_n = est.n;
    if (spec.heterogeneity == 1) {
      recovery = recover_from_moments(est.tensors, spec, rng, options.demix.lsq);
      exported = recovery.candidates;
    } else {
      const auto dm = demix_then_recover(est.tensors, spec, rng, options.demix);
      recovery = dm.mixed;
      exported = recovery.candidates;
    }
    if (const Json* truth = find(cfg, "signal.file"); truth != nullptr && truth->is_string() && !exported.empty()) {
      const auto theta = signal_from_config(cfg, spec);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : exported) best = std::min(best, signal_distance(spec, theta, c));
      distance = best;
    }
  } else {
    const auto theta = signal_from_config(cfg, spec);
    const auto result = run_pipeline(spec, theta, noise_from_config(cfg, 3), options, rng);
    recovery = result.recovery;
    distance = result.distance;
    exported = spec.heterogeneity == 1 ? recovery.candidates : std::vector<Signal>{result.best};
    if (result.demix) {
      Json comps = Json::array();
      for (const auto& c : result.demix->components) comps.push_back(candidates_json(spec.base(), c));
      out.results["components"] = std::move(comps);
      out.results["component_weights"] = result.demix->weights;
    }
  }
  write_candidates(get_string(cfg, "recover.signal_out"), spec, exported);
  out.results["recovery"] = candidates_json(spec, recovery);
  out.results["distance"] = distance ? num(*distance) : Json(nullptr);
  out.table.header = {"method", "success", "residual", "iterations", "candidates", "n", "sigma", "distance"};
  out.table.add({recovery.method, recovery.success, num(recovery.residual), recovery.iterations,
                 recovery.candidates.size(), used_n, spec.sigma, distance ? num(*distance) : Json(nullptr)});
  out.exit_code = recovery.success ? kExitOk : kExitSolver;
  return out;
}

CommandOutput cmd_sigma_scaling(const Json& cfg) {
  SigmaScalingOptions o;
  o.spec = spec_from_config(cfg);
  o.truth = signal_from_config(cfg, o.spec);
  o.sigmas = number_list(require(cfg, "sigma_scaling.sigmas"), "sigma_scaling.sigmas");
  if (o.sigmas.size() < 2) throw ConfigError("sigma_scaling.sigmas needs at least two values (slope undefined)");
  for (double s : o.sigmas) {
    if (!(s > 0)) throw ConfigError("sigma_scaling.sigmas must be positive");
  }
  o.n_grid = n_grid(require(cfg, "sigma_scaling.n_grid"));
  o.epsilon = get_double(cfg, "sigma_scaling.epsilon");
  o.trials = static_cast<int>(get_int(cfg, "sigma_scaling.trials"));
  o.confirm = static_cast<int>(get_int(cfg, "sigma_scaling.confirm"));
  o.delta = get_double(cfg, "sigma_scaling.delta");
  o.seed = seed_of(cfg);
  o.threads = threads_of(cfg);
  if (!(o.epsilon > 0) || o.trials < 1 || o.confirm < 1) {
    throw ConfigError("sigma_scaling needs epsilon > 0, trials >= 1, confirm >= 1");
  }
  const auto r = sigma_scaling(o);

  CommandOutput out;
  out.table.header = {"sigma", "n_star", "status", "blocks", "evaluated", "median_distance", "success_fraction"};
  Json curves = Json::array();
  bool exhausted = false;
  for (const auto& c : r.cells) {
    const std::size_t k = c.median_distance.size();
    std::size_t at = k - 1;
    if (c.n_star) {
      for (std::size_t j = 0; j < k; ++j) {
        if (o.n_grid[j] == *c.n_star) at = j;
      }
    }
    exhausted = exhausted || c.exhausted();
    out.table.add({c.sigma, c.n_star ? Json(*c.n_star) : Json(nullptr), c.exhausted() ? "budget_exhausted" : "ok",
                   c.blocks, k, k ? num(c.median_distance[at]) : Json(nullptr),
                   k ? Json(c.success_fraction[at]) : Json(nullptr)});
    Json med = Json::array();
    for (double d : c.median_distance) med.push_back(num(d));
    curves.push_back({{"sigma", c.sigma},
                      {"n", std::vector<std::int64_t>(o.n_grid.begin(), o.n_grid.begin() + static_cast<long>(k))},
                      {"median_distance", std::move(med)},
                      {"success_fraction", c.success_fraction}});
  }
  out.results["slope"] = r.slope ? Json(*r.slope) : Json(nullptr);
  out.results["intercept"] = r.intercept ? Json(*r.intercept) : Json(nullptr);
  out.results["curves"] = std::move(curves);
  out.exit_code = exhausted || !r.slope ? kExitVerdict : kExitOk;
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"rank-table", "hessian-test", "count",        "simulate",
                                              "estimate",   "recover",      "sigma-scaling"};
  return names;
}

std::string command_for_pipeline(const std::string& pipeline) {
  if (pipeline == "hessian") return "hessian-test";
  if (pipeline == "simulate-recover") return "recover";
  for (const auto& name : command_names()) {
    if (name == pipeline) return name;
  }
  throw ConfigError("unknown pipeline '" + pipeline + "'");
}

CommandOutput run_command(const std::string& command, const Json& cfg) {
  if (command == "rank-table") return cmd_rank_table(cfg);
  if (command == "hessian-test") return cmd_hessian_test(cfg);
  if (command == "count") return cmd_count(cfg);
  if (command == "simulate") return cmd_simulate(cfg);
  if (command == "estimate") return cmd_estimate(cfg);
  if (command == "recover") return cmd_recover(cfg);
  if (command == "sigma-scaling") return cmd_sigma_scaling(cfg);
  throw ConfigError("unknown command '" + command + "'");
}

std::vector<std::string> input_files(const Json& cfg) {
  std::vector<std::string> files;
  for (const char* key : {"signal.file", "estimate.samples", "recover.moments"}) {
    const Json* v = find(cfg, key);
    if (v == nullptr || v->is_null()) continue;
    if (!v->is_string()) throw ConfigError(std::string("'") + key + "' must be a path");
    const auto path = v->get<std::string>();
    if (!std::ifstream(path)) throw ConfigError("referenced file '" + path + "' does not exist");
    files.push_back(path);
  }
  return files;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"orbit-moments: method-of-moments experiments for orbit recovery"};
  app.set_help_all_flag("--help-all");
  std::string config_path;
  Overrides flags;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_path, format;
  app.add_option("--config", config_path, "TOML or JSON experiment config");
  auto* seed_opt = app.add_option("--seed", seed, "base random seed");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out_path, "report path (stdout when omitted)");
  auto* format_opt = app.add_option("--format", format, "report format")->check(CLI::IsMember({"csv", "json"}));
  const std::map<std::string, std::string> blurbs{
      {"rank-table", "Jacobian rank and transcendence degree over a spec grid"},
      {"hessian-test", "de-mixing Hessian test for heterogeneous specs"},
      {"count", "closed-form counts (thresholds, classes, dimensions)"},
      {"simulate", "draw noisy observations to a sample file"},
      {"estimate", "unbiased moment estimates from samples"},
      {"recover", "recover a signal from moments or simulated data"},
      {"sigma-scaling", "sample complexity n* versus noise level"},
  };
  for (const auto& name : command_names()) app.add_subcommand(name, blurbs.at(name))->fallthrough();
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  if (*seed_opt) flags.seed = seed;
  if (*threads_opt) flags.threads = threads;
  if (*out_opt) flags.out = out_path;
  if (*format_opt) flags.format = format;

  try {
    const Json file = config_path.empty() ? Json::object() : load_config_file(config_path);
    std::string command;
    if (!app.get_subcommands().empty()) {
      command = app.get_subcommands().front()->get_name();
    } else if (file.contains("pipeline") && file["pipeline"].is_string()) {
      command = command_for_pipeline(file["pipeline"].get<std::string>());
    } else {
      err << "no subcommand given and config has no pipeline\n" << app.help();
      return kExitConfig;
    }
    const Json cfg = resolve_config(command, file, flags);
    Json hashed = cfg;
    for (const char* volatile_key : {"threads", "out", "format"}) hashed.erase(volatile_key);
    const auto hash = input_hash(hashed, input_files(cfg));
    const CommandOutput result = run_command(command, cfg);
    write_output(cfg, make_report(cfg, hash, result), result.table, out);
    return result.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SpecError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InconclusiveError& e) {
    err << "inconclusive: " << e.what() << '\n';
    return kExitVerdict;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace orbit::cli
