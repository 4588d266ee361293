#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crackfield {

enum class ErrorKind {
  // field_io
  MalformedRow,
  EmptyFile,
  MixedColumnCounts,
  IrregularGrid,
  DegenerateGrid,
  DuplicatePoints,
  CropTooSmall,
  CropOutOfBounds,
  MaskCoversAllNodes,
  InvalidMask,
  // material
  InvalidMaterial,
  NotPositiveDefinite,
  SingularStiffness,
  // mesh
  InvalidCrack,
  TipOutsideGrid,
  PolylineNotSnappable,
  CrackTouchesBoundaryTip,
  // solver
  SingularSystem,
  NonFiniteInput,
  NoConvergence,
  // fracture
  InvalidContourCount,
  ContourHitsMaskOnly,
  ElastoplasticSolution,
  NoOutOfPlaneData,
  LengthMismatch,
  SeriesTooShort,
  // studies
  InvalidStudy,
  // front ends
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the engine. `module()` names the subsystem that
/// detected it so front ends can report "<module>: <kind>: <message>".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message)
      : std::runtime_error(message), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

/// Non-fatal conditions collected along a run (mask empty, contour series
/// truncated, plateau not found, ...). Messages are also forwarded to the log.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message);
};

}  // namespace crackfield
