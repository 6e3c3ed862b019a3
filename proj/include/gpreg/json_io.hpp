#pragma once

#include "gpreg/gp_sampler.hpp"
#include "gpreg/numeric_verify.hpp"
#include "gpreg/path_stats.hpp"
#include "gpreg/regularity.hpp"

#include <json.hpp>

#include <string>

/// JSON encodings of the reports; field layout is documented in docs/schemas.md.
namespace gpreg::json {

using Json = nlohmann::ordered_json;

[[nodiscard]] Json order(const Order& o);
[[nodiscard]] Json regularity(const Regularity& r);
[[nodiscard]] Json report(const RegularityReport& r);
[[nodiscard]] Json fit(const ExponentFit& f);
[[nodiscard]] Json verification(const VerifyReport& r);
[[nodiscard]] Json estimate(const PathEstimate& e, const std::string& kernel, const std::string& axis);
[[nodiscard]] Json sample_metadata(const PathSamples& s);

/// Writes via a temporary file in the same directory and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

} // namespace gpreg::json
