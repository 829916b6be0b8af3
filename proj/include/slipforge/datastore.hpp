#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "slipforge/calibration.hpp"
#include "slipforge/dataset.hpp"
#include "slipforge/evaluation.hpp"
#include "slipforge/matcher.hpp"

namespace slipforge {

// Every document is line-delimited JSON. The first line is a header carrying
// "format" and "format_version"; numbers are written in the shortest decimal
// form that parses back to the identical double.

inline constexpr int kModelVersion = 1;
inline constexpr int kParamsVersion = 1;
inline constexpr int kReportVersion = 1;

nlohmann::json params_to_json(const PhysicsParams& p);
PhysicsParams params_from_json(const nlohmann::json& j);  // throws ParseError / ParameterError

/// Header line, then one "fragment" line per fragment, then one "pair" line
/// per ground-truth pair.
std::string serialize_manifest(const DatasetManifest& m);
/// Throws ParseError, VersionError or InvariantError; never returns a partial manifest.
DatasetManifest parse_manifest(const std::string& text);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Header (layer_dims, margin, training meta), one line per layer, and an
/// "end" trailer holding the layer count and an FNV-1a digest of the lines above.
std::string serialize_model(const EmbeddingModel& m);
/// Throws IntegrityError for truncated or corrupt content and ShapeError when
/// a layer disagrees with the header's layer_dims.
EmbeddingModel parse_model(const std::string& text);
void save_model(const std::filesystem::path& path, const EmbeddingModel& m);
EmbeddingModel load_model(const std::filesystem::path& path);

/// Single-line params document; optionally carries calibration provenance.
std::string serialize_params(const PhysicsParams& p, const CalibrationResult* calibration = nullptr);
PhysicsParams parse_params(const std::string& text);
void save_params(const std::filesystem::path& path, const PhysicsParams& p,
                 const CalibrationResult* calibration = nullptr);
PhysicsParams load_params(const std::filesystem::path& path);

nlohmann::json report_to_json(const TopKReport& r);
TopKReport report_from_json(const nlohmann::json& j);
/// Header line then one line per report.
void save_reports(const std::filesystem::path& path, std::span<const TopKReport> reports);
std::vector<TopKReport> load_reports(const std::filesystem::path& path);

nlohmann::json matrix_to_json(const SimilarityMatrix& m);
void save_matrix(const std::filesystem::path& path, const SimilarityMatrix& m);

std::string read_file(const std::filesystem::path& path);  // throws StorageError
/// Writes via a temporary file and rename.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace slipforge
