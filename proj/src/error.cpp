#include "crackfield/error.hpp"

#include <spdlog/spdlog.h>

namespace crackfield {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::MixedColumnCounts: return "MixedColumnCounts";
    case ErrorKind::IrregularGrid: return "IrregularGrid";
    case ErrorKind::DegenerateGrid: return "DegenerateGrid";
    case ErrorKind::DuplicatePoints: return "DuplicatePoints";
    case ErrorKind::CropTooSmall: return "CropTooSmall";
    case ErrorKind::CropOutOfBounds: return "CropOutOfBounds";
    case ErrorKind::MaskCoversAllNodes: return "MaskCoversAllNodes";
    case ErrorKind::InvalidMask: return "InvalidMask";
    case ErrorKind::InvalidMaterial: return "InvalidMaterial";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularStiffness: return "SingularStiffness";
    case ErrorKind::InvalidCrack: return "InvalidCrack";
    case ErrorKind::TipOutsideGrid: return "TipOutsideGrid";
    case ErrorKind::PolylineNotSnappable: return "PolylineNotSnappable";
    case ErrorKind::CrackTouchesBoundaryTip: return "CrackTouchesBoundaryTip";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::InvalidContourCount: return "InvalidContourCount";
    case ErrorKind::ContourHitsMaskOnly: return "ContourHitsMaskOnly";
    case ErrorKind::ElastoplasticSolution: return "ElastoplasticSolution";
    case ErrorKind::NoOutOfPlaneData: return "NoOutOfPlaneData";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::InvalidStudy: return "InvalidStudy";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

void Diagnostics::warn(std::string message) {
  spdlog::warn("{}", message);
  warnings.push_back(std::move(message));
}

}  // namespace crackfield
