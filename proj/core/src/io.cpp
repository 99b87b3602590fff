#include "orbit/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "orbit/errors.hpp"

namespace orbit::io {

using Json = nlohmann::ordered_json;

namespace {

Json parse(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    throw SpecError(std::string("malformed JSON: ") + e.what());
  }
}

template <class T>
T get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SpecError(std::string("missing JSON field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw SpecError(std::string("bad JSON field '") + key + "': " + e.what());
  }
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Json spec_json(const ProblemSpec& spec) {
  Json j;
  j["group"] = to_string(spec.family);
  j["p"] = spec.p;
  j["shells"] = spec.shells;
  j["frequencies"] = spec.frequencies;
  j["projection"] = to_string(spec.projection);
  j["K"] = spec.heterogeneity;
  j["weights"] = spec.weights;
  j["sigma"] = spec.sigma;
  j["symmetry"] = spec.symmetry ? Json(*spec.symmetry) : Json(nullptr);
  return j;
}

ProblemSpec spec_from(const Json& j) {
  ProblemSpec s;
  s.family = parse_group_family(get<std::string>(j, "group"));
  s.p = j.value("p", 1);
  s.shells = j.value("shells", 0);
  s.frequencies = j.value("frequencies", 0);
  s.projection = parse_projection(j.value("projection", std::string("none")));
  s.heterogeneity = j.value("K", 1);
  s.weights = j.contains("weights") ? get<std::vector<double>>(j, "weights")
                                    : std::vector<double>(static_cast<std::size_t>(s.heterogeneity),
                                                          1.0 / s.heterogeneity);
  s.sigma = j.value("sigma", 0.0);
  if (j.contains("symmetry") && !j["symmetry"].is_null()) s.symmetry = get<int>(j, "symmetry");
  s.validate();
  return s;
}

Json signal_json(const Signal& theta) {
  Json comps = Json::array();
  for (const auto& c : theta.components) comps.push_back(vector_json(c));
  return comps;
}

Signal signal_from(const Json& comps, const ProblemSpec& spec) {
  if (!comps.is_array()) throw SpecError("signal components must be an array");
  Signal theta;
  for (const auto& c : comps) theta.components.push_back(vector_from(c));
  if (theta.size() != spec.heterogeneity) throw SpecError("signal has wrong component count");
  for (const auto& c : theta.components) {
    if (c.size() != spec.ambient_dim()) throw SpecError("signal component has wrong dimension");
  }
  return theta;
}

template <class T>
void put_le(std::array<unsigned char, 64>& buf, std::size_t offset, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  std::memcpy(buf.data() + offset, bytes.data(), sizeof(T));
}

template <class T>
T get_le(const unsigned char* src) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

std::string multi_index_key(const std::vector<int>& index) {
  std::string key;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (i) key += ',';
    key += std::to_string(index[i]);
  }
  return key;
}

std::string spec_to_json(const ProblemSpec& spec) { return spec_json(spec).dump(); }

ProblemSpec spec_from_json(std::string_view text) { return spec_from(parse(text)); }

std::string signal_to_json(const ProblemSpec& spec, const Signal& theta) {
  Json j;
  j["spec"] = spec_json(spec);
  j["components"] = signal_json(theta);
  return j.dump();
}

std::pair<ProblemSpec, Signal> signal_from_json(std::string_view text) {
  const Json j = parse(text);
  if (!j.contains("spec") || !j.contains("components")) throw SpecError("signal JSON needs spec and components");
  auto spec = spec_from(j["spec"]);
  auto theta = signal_from(j["components"], spec);
  return {std::move(spec), std::move(theta)};
}

std::string samples_to_json(const ProblemSpec& spec, const SampleSet& samples) {
  Json j;
  j["spec"] = spec_json(spec);
  j["n"] = samples.n();
  j["q"] = samples.q();
  j["sigma"] = samples.sigma;
  j["seed"] = samples.seed;
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < samples.observations.rows(); ++i) {
    const auto row = samples.observations.row(i);
    rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  j["observations"] = std::move(rows);
  if (samples.truth) j["truth"] = signal_json(*samples.truth);
  return j.dump();
}

std::pair<ProblemSpec, SampleSet> samples_from_json(std::string_view text) {
  const Json j = parse(text);
  auto spec = spec_from(j.at("spec"));
  SampleSet s;
  s.sigma = get<double>(j, "sigma");
  s.seed = get<std::uint64_t>(j, "seed");
  const auto n = get<std::int64_t>(j, "n");
  const auto q = get<int>(j, "q");
  const auto& rows = j.at("observations");
  if (!rows.is_array() || static_cast<std::int64_t>(rows.size()) != n) throw SpecError("observation count mismatch");
  s.observations.resize(n, q);
  for (std::int64_t i = 0; i < n; ++i) {
    const auto row = rows[static_cast<std::size_t>(i)].get<std::vector<double>>();
    if (static_cast<int>(row.size()) != q) throw SpecError("observation row has wrong length");
    for (int c = 0; c < q; ++c) s.observations(i, c) = row[static_cast<std::size_t>(c)];
  }
  if (j.contains("truth")) s.truth = signal_from(j["truth"], spec);
  return {std::move(spec), std::move(s)};
}

void write_samples_binary(std::ostream& out, const SampleSet& samples) {
  std::array<unsigned char, 64> header{};
  std::memcpy(header.data(), "OMNT", 4);
  put_le<std::uint32_t>(header, 4, kSampleFormatVersion);
  put_le<std::uint64_t>(header, 8, static_cast<std::uint64_t>(samples.n()));
  put_le<std::uint32_t>(header, 16, static_cast<std::uint32_t>(samples.q()));
  put_le<double>(header, 24, samples.sigma);
  put_le<std::uint64_t>(header, 32, samples.seed);
  out.write(reinterpret_cast<const char*>(header.data()), 64);
  const auto count = static_cast<std::size_t>(samples.observations.size());
  std::vector<unsigned char> body(count * 8);
  for (std::size_t i = 0; i < count; ++i) {
    std::array<unsigned char, 64> tmp{};
    put_le<double>(tmp, 0, samples.observations.data()[i]);
    std::memcpy(body.data() + 8 * i, tmp.data(), 8);
  }
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw SpecError("failed to write sample file");
}

SampleSet read_samples_binary(std::istream& in) {
  std::array<unsigned char, 64> header{};
  if (!in.read(reinterpret_cast<char*>(header.data()), 64)) throw SpecError("sample file shorter than header");
  if (std::memcmp(header.data(), "OMNT", 4) != 0) throw SpecError("bad sample file magic");
  const auto version = get_le<std::uint32_t>(header.data() + 4);
  if (version != kSampleFormatVersion) throw SpecError("unsupported sample file version " + std::to_string(version));
  const auto n = get_le<std::uint64_t>(header.data() + 8);
  const auto q = get_le<std::uint32_t>(header.data() + 16);
  SampleSet s;
  s.sigma = get_le<double>(header.data() + 24);
  s.seed = get_le<std::uint64_t>(header.data() + 32);
  if (q == 0 || n > (std::uint64_t{1} << 40) / q) throw SpecError("implausible sample file dimensions");
  s.observations.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
  std::vector<unsigned char> body(static_cast<std::size_t>(n) * q * 8);
  if (!in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()))) {
    throw SpecError("sample file truncated");
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(n) * q; ++i) {
    s.observations.data()[i] = get_le<double>(body.data() + 8 * i);
  }
  return s;
}

std::string basis_to_json(const InvariantBasis& basis) {
  Json out = Json::array();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& member = basis.members[i];
    const Polynomial poly = member.poly.is_zero() ? basis.materialize(i) : member.poly;
    Json terms = Json::array();
    for (const auto& t : poly.terms()) {
      Json exps = Json::array();
      for (const auto& [var, power] : t.mono.exponents()) exps.push_back(Json::array({var, power}));
      terms.push_back(Json{{"exponents", std::move(exps)}, {"coeff", t.coeff}});
    }
    out.push_back(Json{{"label", member.label}, {"degree", member.degree}, {"terms", std::move(terms)}});
  }
  return out.dump();
}

std::string rank_report_to_json(const RankReport& r) {
  Json j;
  j["mode"] = to_string(r.mode);
  j["rows"] = r.rows;
  j["cols"] = r.cols;
  j["rank"] = r.rank;
  j["target"] = r.target;
  j["verdict"] = to_string(r.verdict);
  j["gap_ratio"] = finite_or_null(r.gap_ratio);
  j["singular_values"] = r.singular_values;
  j["point"] = r.point;
  j["exact_point"] = r.exact_point;
  j["labels"] = r.labels;
  return j.dump();
}

std::string hessian_report_to_json(const HessianReport& r) {
  Json j;
  j["K"] = r.K;
  j["passed"] = r.passed;
  j["jacobian_rank"] = r.jacobian_rank;
  j["expected_jacobian_rank"] = r.expected_jacobian_rank;
  j["cone_dim"] = r.cone_dim;
  j["hessian_rank"] = r.hessian_rank;
  j["expected_hessian_rank"] = r.expected_hessian_rank;
  j["hessian_singular_values"] = r.hessian_singular_values;
  j["attempts"] = r.attempts;
  j["kernel"] = vector_json(r.kernel);
  j["points"] = r.points;
  return j.dump();
}

std::string moment_estimate_to_json(const MomentEstimate& e) {
  Json j;
  j["n"] = e.n;
  j["sigma"] = e.sigma;
  j["blocks"] = e.blocks;
  Json orders = Json::array();
  for (std::size_t d = 0; d < e.tensors.size(); ++d) {
    const auto& t = e.tensors[d];
    Json entries = Json::object();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double var = d < e.variance.size() && i < e.variance[d].size() ? e.variance[d][i] : 0.0;
      entries[multi_index_key(t.multi_indices()[i])] = Json{{"est", t.values()[i]}, {"var", var}};
    }
    orders.push_back(Json{{"order", t.order()}, {"dim", t.dim()}, {"entries", std::move(entries)}});
  }
  j["orders"] = std::move(orders);
  return j.dump();
}

MomentEstimate moment_estimate_from_json(std::string_view text) {
  const Json j = parse(text);
  MomentEstimate e;
  e.n = get<std::int64_t>(j, "n");
  e.sigma = get<double>(j, "sigma");
  e.blocks = get<int>(j, "blocks");
  for (const auto& o : j.at("orders")) {
    MomentTensor t(get<int>(o, "order"), get<int>(o, "dim"));
    t.provenance = Provenance::Estimated;
    t.samples = e.n;
    t.sigma = e.sigma;
    std::vector<double> var(t.size(), 0.0);
    const auto& entries = o.at("entries");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto key = multi_index_key(t.multi_indices()[i]);
      if (!entries.contains(key)) throw SpecError("moment estimate misses entry " + key);
      t.values()[i] = get<double>(entries[key], "est");
      var[i] = get<double>(entries[key], "var");
    }
    e.tensors.push_back(std::move(t));
    e.variance.push_back(std::move(var));
  }
  return e;
}

std::string recovery_result_to_json(const ProblemSpec& spec, const RecoveryResult& r) {
  Json j;
  j["method"] = r.method;
  j["success"] = r.success;
  j["residual"] = finite_or_null(r.residual);
  j["iterations"] = r.iterations;
  j["gauge_note"] = r.gauge_note;
  j["weights"] = r.weights;
  Json cands = Json::array();
  for (const auto& c : r.candidates) cands.push_back(Json{{"spec", spec_json(spec)}, {"components", signal_json(c)}});
  j["candidates"] = std::move(cands);
  return j.dump();
}

}  // namespace orbit::io
