#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "crackfield/analysis.hpp"
#include "crackfield/serialize.hpp"
#include "crackfield/studies.hpp"

namespace crackfield {

/// contour,radius_m,J,K_I,K_II,K_II_pseudo,K_III,J_III,J_total with empty
/// cells for quantities that were not computed.
void write_results_csv(const ContourSeries& series, std::ostream& out);

/// One row per study point and quantity.
void write_study_csv(const StudyResult& study, std::ostream& out);

struct SvgOptions {
  bool timestamp = true;  // adds a generation-time comment
};

/// J (top) and K (bottom) against contour index with the plateau band.
void write_series_svg(const AnalysisResult& result, std::ostream& out, const SvgOptions& options = {});

/// Line plots for q sweeps and noise studies, error heatmaps for tip offsets.
void write_study_svg(const StudyResult& study, std::ostream& out, const SvgOptions& options = {});

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Creates `dir` (and parents) or throws IoError.
void ensure_directory(const std::filesystem::path& dir);

struct ReportFiles {
  std::filesystem::path results_csv;
  std::filesystem::path summary_json;
  std::filesystem::path plot_svg;
};

/// results.csv, summary.json and contours.svg in `outdir`. `summary` is the
/// full summary document (result payload plus provenance).
ReportFiles emit_report(const AnalysisResult& result, const Json& summary, const std::filesystem::path& outdir,
                        const SvgOptions& options = {});

}  // namespace crackfield
