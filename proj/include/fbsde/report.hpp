// SPDX-License-Identifier: MIT
#pragma once

#include "fbsde/classifier.hpp"
#include "fbsde/dominating.hpp"
#include "fbsde/oracle.hpp"
#include "fbsde/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace fbsde {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.3.0";

/// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

json to_json(const Interval& iv);
json to_json(const CoefficientBox& box);
json to_json(const Event& e);
json to_json(const Classification& c);
/// Events and y(0) values; with `samples` > 0 also every k-th trajectory point.
json to_json(const DominatingSolution& d, int samples = 0);
json to_json(const FieldDiagnostics& d);
json to_json(const PathStats& s);
json to_json(const SolveReport& r);

/// Wraps a result. Timestamps and the tool version live under "meta" so the
/// rest of the document is byte-stable for identical inputs.
json run_report(const std::string& command, const std::string& spec_hash, json result);

/// Directory for cached fields: $FBSDE_CACHE_DIR or ./.fbsde-cache.
std::filesystem::path cache_dir();
std::optional<DecouplingField> load_cached_field(const std::string& key);
void store_cached_field(const std::string& key, const DecouplingField& field);

} // namespace fbsde
