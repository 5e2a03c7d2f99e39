#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "magflow/dynamics.hpp"
#include "magflow/integrals.hpp"
#include "magflow/poisson.hpp"

namespace magflow {

using Json = nlohmann::json;

/// FNV-1a over the canonical config text; hex string used to cross-reference
/// every output file with its manifest.
std::string fnv1a64_hex(const std::string& text);

// --- algebra and phase-point serialization ------------------------------------------

/// { "family": "so"|"su", "n": k } or
/// { "name": ..., "rank": r, "basis": [matrix, ...] } with complex entries
/// as [re, im] pairs, matrices row-major.
std::shared_ptr<const LieAlgebraSpec> algebra_from_json(const Json& j);

Json phase_point_to_json(const LieAlgebraSpec& spec, const PhasePoint& pt,
                         const std::string& algebra_id);
PhasePoint phase_point_from_json(const LieAlgebraSpec& spec, const Json& j);

// --- reports ------------------------------------------------------------------------

std::string family_kind_name(FamilyKind kind);

Json drift_report_to_json(const std::vector<MemberDrift>& drifts);
Json completeness_to_json(const CompletenessReport& rep);

// --- file writers ---------------------------------------------------------------------

/// CSV contract: first line "# manifest_hash <hex>", then the header
/// t,x_1..x_d,p_1..p_d,H,res_orbit,res_cotangent and one row per state.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          int algebra_dim, const std::string& manifest_hash);

void write_matrix_csv(const std::filesystem::path& path, const Mat& m,
                      const std::string& manifest_hash);

void write_json_file(const std::filesystem::path& path, const Json& j);

Json read_json_file(const std::filesystem::path& path);

} // namespace magflow
