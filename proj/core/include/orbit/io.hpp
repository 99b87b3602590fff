#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>

#include "orbit/algebra_tests.hpp"
#include "orbit/estimation.hpp"
#include "orbit/invariants.hpp"
#include "orbit/problem.hpp"
#include "orbit/recovery.hpp"

/// JSON and binary serialization. JSON payloads are deterministic (insertion-ordered keys,
/// shortest round-trip doubles, no timestamps). Parsers throw SpecError on malformed input.
namespace orbit::io {

std::string spec_to_json(const ProblemSpec& spec);
ProblemSpec spec_from_json(std::string_view text);

/// {"spec": ..., "components": [[...], ...]}
std::string signal_to_json(const ProblemSpec& spec, const Signal& theta);
std::pair<ProblemSpec, Signal> signal_from_json(std::string_view text);

/// {"spec", "n", "q", "sigma", "seed", "observations": [[...]], "truth"?}
std::string samples_to_json(const ProblemSpec& spec, const SampleSet& samples);
std::pair<ProblemSpec, SampleSet> samples_from_json(std::string_view text);

/// Little-endian f64 rows after a 64-byte header:
/// magic "OMNT", u32 version, u64 n, u32 q, u32 reserved, f64 sigma, u64 seed, zero padding.
inline constexpr std::uint32_t kSampleFormatVersion = 1;
void write_samples_binary(std::ostream& out, const SampleSet& samples);
SampleSet read_samples_binary(std::istream& in);

/// [{"label", "degree", "terms": [{"exponents": [[var, power], ...], "coeff"}]}]
std::string basis_to_json(const InvariantBasis& basis);

std::string rank_report_to_json(const RankReport& report);
std::string hessian_report_to_json(const HessianReport& report);

/// Entries keyed by the sorted multi-index "i,j,k" with {"est", "var"} values.
std::string moment_estimate_to_json(const MomentEstimate& estimate);
MomentEstimate moment_estimate_from_json(std::string_view text);

std::string recovery_result_to_json(const ProblemSpec& spec, const RecoveryResult& result);

/// "0,1,2" for a sorted multi-index.
std::string multi_index_key(const std::vector<int>& index);

}  // namespace orbit::io
