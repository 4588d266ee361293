#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "crackfield/analysis.hpp"
#include "crackfield/synthfield.hpp"

namespace crackfield {

enum class StudyKind { q_sweep, noise, tip_offset };
std::string_view to_string(StudyKind kind);

/// J, K_I, K_II, K_III at one study point. NaN marks "not available".
/// J is the total J when the mode-III pipeline ran.
struct QuantityValues {
  double J;
  double K_I;
  double K_II;
  double K_III;

  QuantityValues();
  static constexpr int size = 4;
  double& operator[](int i);
  double operator[](int i) const;
};

extern const char* const kQuantityNames[QuantityValues::size];

struct StudyPoint {
  double axis = 0.0;  // q angle (rad) or noise fraction
  int dx = 0;         // tip offset in nodes
  int dy = 0;
  QuantityValues mean;         // plateau mean (averaged over realisations)
  QuantityValues plateau_std;  // within-window std (RMS over realisations)
  QuantityValues spread;       // std of the plateau mean over realisations
  QuantityValues error;        // normalised error of `mean`, (estimate - truth)/truth
  QuantityValues error_rms;    // RMS over realisations of the normalised error
  QuantityValues error_envelope;  // largest |normalised error| over realisations
  int realisations = 1;
  bool no_plateau = false;
};

struct StudyResult {
  StudyKind kind = StudyKind::q_sweep;
  std::vector<StudyPoint> points;
  std::optional<QuantityValues> truth;
  int window_start = -1;  // fixed plateau window, when one was used
  int window_end = -1;
};

/// Ground truth of a synthetic spec. J is j_from_k; a zero K gives NaN so no
/// normalised error is formed for it.
QuantityValues synthetic_truth(const SyntheticSpec& spec);

/// Straight crack from the grid edge behind the tip to the tip, with a square
/// mask of half-width `mask_half_nodes` lattice pitches around the tip
/// (no mask when 0).
CrackDefinition synthetic_crack(const SyntheticSpec& spec, int mask_half_nodes = 2);

/// Plateau values of one analysis as study quantities.
QuantityValues plateau_means(const AnalysisResult& result);
QuantityValues plateau_stds(const AnalysisResult& result);

StudyResult q_sweep(const DisplacementField& field, const CrackDefinition& crack, const Material& material,
                    const std::vector<double>& angles, const AnalysisOptions& options = {});

/// Sweep over an already solved problem.
StudyResult q_sweep(const PreparedProblem& problem, const std::vector<double>& angles);

struct QSuggestion {
  double angle = 0.0;
  int discrete_index = -1;
  bool flat = false;             // every J within the plateau std of the others
  bool range_exhausted = false;  // maximum at a sweep end
};

/// Angle of maximum J with parabolic refinement through the discrete maximum
/// and its neighbours. `crack_angle` is returned for a flat sweep.
QSuggestion suggest_q_direction(const StudyResult& sweep, double crack_angle = 0.0);

/// Default q angles: -60 deg .. 60 deg in 10 deg steps about `centre`.
std::vector<double> default_sweep_angles(double centre = 0.0, double half_range_deg = 60.0,
                                         double step_deg = 10.0);

struct NoiseStudyOptions {
  std::vector<double> fractions;  // empty -> default_noise_fractions()
  int trials = 5;
  std::uint64_t seed = 1;
  NoiseDistribution distribution = NoiseDistribution::gaussian;
  /// Each trial is a +/- pair of the same draw.
  bool antithetic = true;
  /// Use the noise-free plateau window for every realisation.
  bool fixed_window = true;
  int mask_half_nodes = 2;
};

/// 1e-6 .. 1e-2, two points per decade.
std::vector<double> default_noise_fractions();

StudyResult noise_study(const SyntheticSpec& spec, const NoiseStudyOptions& study,
                        const AnalysisOptions& options = {});

struct TipStudyOptions {
  std::vector<int> dx;  // empty -> -3..3
  std::vector<int> dy;
  bool fixed_window = true;
  int mask_half_nodes = 2;
};

/// Assumed tip (with mask and seam) moved by (dx, dy) nodes; the mouth moves
/// by dy along the grid edge. The field keeps its true tip.
StudyResult tip_offset_study(const SyntheticSpec& spec, const TipStudyOptions& study,
                             const AnalysisOptions& options = {});

/// Points with dx == dy, in increasing dx.
std::vector<StudyPoint> diagonal_profile(const StudyResult& result);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace crackfield
