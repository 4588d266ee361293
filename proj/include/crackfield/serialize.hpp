#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "crackfield/analysis.hpp"
#include "crackfield/studies.hpp"
#include "crackfield/synthfield.hpp"

namespace crackfield {

using Json = nlohmann::ordered_json;

/// FNV-1a 64-bit, rendered as 16 hex digits.
std::string fnv1a64(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

/// Material file: {model, E, nu, plane_state, C?, ramberg_osgood?}. SI units.
Material material_from_json(const Json& j);
Json to_json(const Material& material);
Material load_material(const std::filesystem::path& path);

/// Lengths in the document are multiplied by `to_meters`.
MaskRegion mask_from_json(const Json& j, double to_meters = 1.0);
Json to_json(const MaskRegion& mask);

/// {polyline: [[x,y],...]} or {mouth: [x,y], tip: [x,y]}, optional
/// q_angle_deg / q_angle (rad) and mask.
CrackDefinition crack_from_json(const Json& j, double to_meters = 1.0);
Json to_json(const CrackDefinition& crack);

SyntheticSpec synthetic_spec_from_json(const Json& j);
Json to_json(const SyntheticSpec& spec);

Json to_json(const GridReport& report);
Json to_json(const PlateauStats& plateau, const ContourSeries& series);
Json to_json(const ContourSeries& series);
/// "elastic", "ramberg-osgood" or "deformation_plasticity".
ConstitutiveModel parse_constitutive_model(std::string_view text);

/// Keys: model, contours, plateau{window_min, rel_tol, skip, window:[first,
/// last] contour numbers}, pseudo_mode, mode3, tol, max_iter. Missing keys
/// keep the values of `base`.
AnalysisOptions analysis_options_from_json(const Json& j, AnalysisOptions base = {});
Json to_json(const AnalysisOptions& options);

/// Result payload shared by the CLI summary and the service job record.
Json result_json(const AnalysisResult& result);
ContourSeries series_from_json(const Json& j);
/// Inverse of result_json; plateau statistics are recomputed over the stored window.
AnalysisResult result_from_json(const Json& j);

Json to_json(const QuantityValues& values);
Json to_json(const StudyPoint& point, StudyKind kind);
Json to_json(const StudyResult& study);
Json to_json(const QSuggestion& suggestion);

/// {"error": {kind, module, message}}
Json error_json(const Error& error);
Json error_json(std::string_view kind, std::string_view module, std::string_view message);

}  // namespace crackfield
