#include "crackfield/studies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace crackfield {
namespace {

constexpr const char* kModule = "studies";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, kModule, message);
}

double total_or_inplane(const std::optional<MeanStd>& total, const MeanStd& j, bool want_std) {
  if (total) return want_std ? total->std : total->mean;
  return want_std ? j.std : j.mean;
}

double opt_value(const std::optional<MeanStd>& v, bool want_std) {
  if (!v) return kNaN;
  return want_std ? v->std : v->mean;
}

/// Aggregates plateau values of several realisations into one study point.
class PointAccumulator {
 public:
  explicit PointAccumulator(const std::optional<QuantityValues>& truth) : truth_(truth) {}

  void add(const AnalysisResult& r) {
    means_.push_back(plateau_means(r));
    stds_.push_back(plateau_stds(r));
    no_plateau_ = no_plateau_ || r.plateau.no_plateau;
  }

  StudyPoint finish() const {
    StudyPoint p;
    const auto n = static_cast<double>(means_.size());
    p.realisations = static_cast<int>(means_.size());
    p.no_plateau = no_plateau_;
    for (int q = 0; q < QuantityValues::size; ++q) {
      double sum = 0.0, sq_std = 0.0;
      for (std::size_t r = 0; r < means_.size(); ++r) {
        sum += means_[r][q];
        sq_std += stds_[r][q] * stds_[r][q];
      }
      const double mean = sum / n;
      p.mean[q] = mean;
      p.plateau_std[q] = std::sqrt(sq_std / n);
      double var = 0.0;
      for (const auto& m : means_) var += (m[q] - mean) * (m[q] - mean);
      p.spread[q] = means_.size() > 1 ? std::sqrt(var / (n - 1.0)) : (std::isnan(mean) ? kNaN : 0.0);
      if (truth_ && std::isfinite((*truth_)[q]) && (*truth_)[q] != 0.0 && std::isfinite(mean)) {
        const double t = (*truth_)[q];
        p.error[q] = (mean - t) / t;
        double sq = 0.0, worst = 0.0;
        for (const auto& m : means_) {
          const double e = (m[q] - t) / t;
          sq += e * e;
          worst = std::max(worst, std::abs(e));
        }
        p.error_rms[q] = std::sqrt(sq / n);
        p.error_envelope[q] = worst;
      }
    }
    return p;
  }

 private:
  std::optional<QuantityValues> truth_;
  std::vector<QuantityValues> means_;
  std::vector<QuantityValues> stds_;
  bool no_plateau_ = false;
};

AnalysisOptions with_window(AnalysisOptions options, const PlateauStats& baseline, std::size_t series_size) {
  const int last = static_cast<int>(series_size) - 1;
  options.plateau.window = std::make_pair(std::min(baseline.start, last), std::min(baseline.end, last));
  return options;
}

}  // namespace

std::string_view to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::q_sweep: return "q_sweep";
    case StudyKind::noise: return "noise";
    case StudyKind::tip_offset: return "tip_offset";
  }
  return "unknown";
}

QuantityValues::QuantityValues() : J(kNaN), K_I(kNaN), K_II(kNaN), K_III(kNaN) {}

double& QuantityValues::operator[](int i) {
  switch (i) {
    case 0: return J;
    case 1: return K_I;
    case 2: return K_II;
    default: return K_III;
  }
}

double QuantityValues::operator[](int i) const { return const_cast<QuantityValues&>(*this)[i]; }

const char* const kQuantityNames[QuantityValues::size] = {"J", "K_I", "K_II", "K_III"};

QuantityValues synthetic_truth(const SyntheticSpec& spec) {
  QuantityValues t;
  const EffectiveConstants eff = effective_constants(spec.material);
  t.J = j_from_k(spec.K_I, spec.K_II, spec.K_III, eff);
  auto nonzero = [](double k) { return k != 0.0 ? k : kNaN; };
  t.K_I = nonzero(spec.K_I);
  t.K_II = nonzero(spec.K_II);
  t.K_III = nonzero(spec.K_III);
  if (t.J == 0.0) t.J = kNaN;
  return t;
}

CrackDefinition synthetic_crack(const SyntheticSpec& spec, int mask_half_nodes) {
  Vec2 back(std::cos(spec.crack_angle + std::numbers::pi), std::sin(spec.crack_angle + std::numbers::pi));
  for (int a = 0; a < 2; ++a)
    if (std::abs(back[a]) < 1e-12) back[a] = 0.0;
  const Vec2 upper = spec.lower + Vec2((spec.nx - 1) * spec.spacing, (spec.ny - 1) * spec.spacing);
  double t = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 2; ++a) {
    if (back[a] == 0.0) continue;
    const double bound = back[a] > 0 ? upper[a] : spec.lower[a];
    t = std::min(t, (bound - spec.tip[a]) / back[a]);
  }
  if (!std::isfinite(t) || t <= 0.0) fail(ErrorKind::InvalidStudy, "synthetic tip is not inside the grid");
  CrackDefinition crack = CrackDefinition::straight(spec.tip + t * back, spec.tip);
  if (mask_half_nodes > 0) {
    const double half = mask_half_nodes * spec.spacing;
    crack.mask = MaskRegion::rectangle(spec.tip - Vec2(half, half), spec.tip + Vec2(half, half));
  }
  return crack;
}

QuantityValues plateau_means(const AnalysisResult& r) {
  QuantityValues v;
  v.J = total_or_inplane(r.plateau.J_total, r.plateau.J, false);
  v.K_I = opt_value(r.plateau.K_I, false);
  v.K_II = opt_value(r.plateau.K_II, false);
  v.K_III = opt_value(r.plateau.K_III, false);
  return v;
}

QuantityValues plateau_stds(const AnalysisResult& r) {
  QuantityValues v;
  v.J = total_or_inplane(r.plateau.J_total, r.plateau.J, true);
  v.K_I = opt_value(r.plateau.K_I, true);
  v.K_II = opt_value(r.plateau.K_II, true);
  v.K_III = opt_value(r.plateau.K_III, true);
  return v;
}

StudyResult q_sweep(const DisplacementField& field, const CrackDefinition& crack, const Material& material,
                    const std::vector<double>& angles, const AnalysisOptions& options) {
  if (angles.empty()) fail(ErrorKind::InvalidStudy, "q sweep needs at least one angle");
  return q_sweep(prepare_problem(field, crack, material, options), angles);
}

StudyResult q_sweep(const PreparedProblem& problem, const std::vector<double>& angles) {
  if (angles.empty()) fail(ErrorKind::InvalidStudy, "q sweep needs at least one angle");
  for (std::size_t i = 1; i < angles.size(); ++i) {
    if (!(angles[i] > angles[i - 1])) fail(ErrorKind::InvalidStudy, "q sweep angles must be strictly increasing");
  }
  StudyResult out;
  out.kind = StudyKind::q_sweep;
  for (double angle : angles) {
    const AnalysisResult r = summarize(problem, evaluate_series(problem, angle), angle);
    PointAccumulator acc(std::nullopt);
    acc.add(r);
    StudyPoint p = acc.finish();
    p.axis = angle;
    out.points.push_back(p);
  }
  return out;
}

QSuggestion suggest_q_direction(const StudyResult& sweep, double crack_angle) {
  const auto& pts = sweep.points;
  if (pts.size() < 3) fail(ErrorKind::InvalidStudy, "q direction suggestion needs at least 3 angles");
  std::size_t best = 0;
  double noise = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].mean.J > pts[best].mean.J) best = i;
    if (std::isfinite(pts[i].plateau_std.J)) noise = std::max(noise, pts[i].plateau_std.J);
  }
  QSuggestion s;
  s.discrete_index = static_cast<int>(best);
  const double jmax = pts[best].mean.J;
  const bool flat = std::all_of(pts.begin(), pts.end(), [&](const StudyPoint& p) { return jmax - p.mean.J <= noise; });
  if (flat) {
    s.flat = true;
    s.angle = crack_angle;
    return s;
  }
  if (best == 0 || best + 1 == pts.size()) {
    s.range_exhausted = true;
    s.angle = pts[best].axis;
    return s;
  }
  const double x0 = pts[best - 1].axis, x1 = pts[best].axis, x2 = pts[best + 1].axis;
  const double y0 = pts[best - 1].mean.J, y1 = pts[best].mean.J, y2 = pts[best + 1].mean.J;
  const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
  const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
  s.angle = den != 0.0 ? x1 - 0.5 * num / den : x1;
  s.angle = std::clamp(s.angle, x0, x2);
  return s;
}

std::vector<double> default_sweep_angles(double centre, double half_range_deg, double step_deg) {
  if (!(step_deg > 0.0) || half_range_deg < 0.0) fail(ErrorKind::InvalidStudy, "invalid sweep range");
  std::vector<double> out;
  const int n = static_cast<int>(std::floor(half_range_deg / step_deg + 1e-9));
  for (int i = -n; i <= n; ++i) out.push_back(centre + i * step_deg * std::numbers::pi / 180.0);
  return out;
}

std::vector<double> default_noise_fractions() {
  std::vector<double> out;
  for (int i = 0; i <= 8; ++i) out.push_back(std::pow(10.0, -6.0 + 0.5 * i));
  return out;
}

StudyResult noise_study(const SyntheticSpec& spec, const NoiseStudyOptions& study, const AnalysisOptions& options) {
  const std::vector<double> fractions = study.fractions.empty() ? default_noise_fractions() : study.fractions;
  if (study.trials < 1) fail(ErrorKind::InvalidStudy, "noise study needs at least one trial");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] >= 0.0)) fail(ErrorKind::InvalidStudy, "noise fractions must be nonnegative");
    if (i > 0 && !(fractions[i] > fractions[i - 1])) fail(ErrorKind::InvalidStudy, "noise fractions must be increasing");
  }
  spec.validate();
  const DisplacementField field = generate_williams_field(spec);
  const CrackDefinition crack = synthetic_crack(spec, study.mask_half_nodes);

  StudyResult out;
  out.kind = StudyKind::noise;
  out.truth = synthetic_truth(spec);
  AnalysisOptions run = options;
  if (study.fixed_window && !options.plateau.window) {
    const AnalysisResult base = run_analysis(field, crack, spec.material, options);
    run = with_window(options, base.plateau, base.series.size());
  }
  if (run.plateau.window) {
    out.window_start = run.plateau.window->first;
    out.window_end = run.plateau.window->second;
  }

  for (double fraction : fractions) {
    PointAccumulator acc(out.truth);
    for (int t = 0; t < study.trials; ++t) {
      // Same seed for every fraction: the draws differ only in scale.
      const NoiseSample noise = draw_noise(field, fraction, study.seed + static_cast<std::uint64_t>(t), study.distribution);
      acc.add(run_analysis(apply_noise(field, noise, 1.0), crack, spec.material, run));
      if (study.antithetic) acc.add(run_analysis(apply_noise(field, noise, -1.0), crack, spec.material, run));
    }
    StudyPoint p = acc.finish();
    p.axis = fraction;
    out.points.push_back(p);
  }
  return out;
}

StudyResult tip_offset_study(const SyntheticSpec& spec, const TipStudyOptions& study, const AnalysisOptions& options) {
  const std::vector<int> def{-3, -2, -1, 0, 1, 2, 3};
  const std::vector<int>& dxs = study.dx.empty() ? def : study.dx;
  const std::vector<int>& dys = study.dy.empty() ? def : study.dy;
  for (const auto* axis : {&dxs, &dys}) {
    for (std::size_t i = 1; i < axis->size(); ++i) {
      if ((*axis)[i] <= (*axis)[i - 1]) fail(ErrorKind::InvalidStudy, "tip offsets must be strictly increasing");
    }
  }
  spec.validate();
  const DisplacementField field = generate_williams_field(spec);

  auto crack_at = [&](int dx, int dy) {
    SyntheticSpec moved = spec;
    const Eigen::Matrix2d R = crack_frame(spec.crack_angle).transpose();
    moved.tip = spec.tip + R * Vec2(dx * spec.spacing, dy * spec.spacing);
    return synthetic_crack(moved, study.mask_half_nodes);
  };

  StudyResult out;
  out.kind = StudyKind::tip_offset;
  out.truth = synthetic_truth(spec);
  AnalysisOptions run = options;
  if (study.fixed_window && !options.plateau.window) {
    const AnalysisResult base = run_analysis(field, crack_at(0, 0), spec.material, options);
    run = with_window(options, base.plateau, base.series.size());
  }
  if (run.plateau.window) {
    out.window_start = run.plateau.window->first;
    out.window_end = run.plateau.window->second;
  }
  for (int dy : dys) {
    for (int dx : dxs) {
      PointAccumulator acc(out.truth);
      acc.add(run_analysis(field, crack_at(dx, dy), spec.material, run));
      StudyPoint p = acc.finish();
      p.dx = dx;
      p.dy = dy;
      out.points.push_back(p);
    }
  }
  return out;
}

std::vector<StudyPoint> diagonal_profile(const StudyResult& result) {
  std::vector<StudyPoint> out;
  for (const auto& p : result.points) {
    if (p.dx == p.dy) out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const StudyPoint& a, const StudyPoint& b) { return a.dx < b.dx; });
  return out;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::InvalidStudy, "spearman needs two equal series of length >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace crackfield
