// crackfield command-line front end.
#include <algorithm>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "crackfield/analysis.hpp"
#include "crackfield/report.hpp"
#include "crackfield/serialize.hpp"
#include "crackfield/service.hpp"
#include "crackfield/studies.hpp"
#include "crackfield/synthfield.hpp"

namespace fs = std::filesystem;
using namespace crackfield;

namespace {

constexpr const char* kModule = "cli";
constexpr const char* kVersion = "0.3.0";
constexpr double kDeg = std::numbers::pi / 180.0;

enum ExitCode { kOk = 0, kAnalysisError = 1, kConfigError = 2, kIoError = 3 };

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError:
      return kIoError;
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidMaterial:
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::InvalidCrack:
    case ErrorKind::InvalidMask:
    case ErrorKind::InvalidStudy:
    case ErrorKind::InvalidContourCount:
      return kConfigError;
    default:
      return kAnalysisError;
  }
}

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorKind::ConfigError, kModule, message); }

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("crackfield");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("CRACKFIELD_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(env));
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    config_error(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Configuration: a JSON document from --config, patched by the flags.

struct Flags {
  std::string config;
  std::string input;
  std::string units;
  std::string delimiter;
  std::string material;
  std::string plane_state;
  std::vector<double> tip, mouth, mask;
  std::optional<double> q_angle_deg;
  int rotate = 0;
  std::vector<int> crop;
  std::string model;
  std::optional<int> contours;
  std::vector<int> window;
  std::string pseudo_mode;
  bool no_mode3 = false;
  std::string outdir;
  bool serial = false;
  bool no_timestamp = false;
  // synthetic spec
  std::optional<double> K_I, K_II, K_III, E, nu, spacing;
  std::optional<int> nx, ny;
  bool paper_mu = false;
  // studies
  std::vector<double> angles_deg;
  std::optional<double> half_range_deg, step_deg;
  std::vector<double> fractions;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::string distribution;
  bool no_antithetic = false;
  bool adaptive_window = false;
  std::vector<int> dx, dy;
  std::optional<int> mask_half_nodes;
};

void add_input_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config, "JSON run configuration");
  cmd->add_option("-i,--input", f.input, "displacement CSV (4 or 6 columns)");
  cmd->add_option("-u,--units", f.units, "length unit of the input: m, mm or um");
  cmd->add_option("--delimiter", f.delimiter, "column delimiter (default: detect)");
  cmd->add_option("-m,--material", f.material, "material JSON file");
  cmd->add_option("--plane-state", f.plane_state, "plane_strain or plane_stress");
  cmd->add_option("--tip", f.tip, "crack tip x y")->expected(2);
  cmd->add_option("--mouth", f.mouth, "crack mouth x y")->expected(2);
  cmd->add_option("--mask", f.mask, "mask rectangle x0 y0 x1 y1")->expected(4);
  cmd->add_option("--q-angle-deg", f.q_angle_deg, "virtual crack extension direction");
  cmd->add_option("--rotate", f.rotate, "quarter turns counterclockwise before analysis");
  cmd->add_option("--crop", f.crop, "node rectangle i0 j0 i1 j1 after rotation")->expected(4);
  cmd->add_option("--model", f.model, "elastic or ramberg-osgood");
  cmd->add_option("-n,--contours", f.contours, "number of contours");
  cmd->add_option("--window", f.window, "explicit plateau window: first last contour")->expected(2);
  cmd->add_option("--pseudo-mode", f.pseudo_mode, "mode-III pseudo problem: plane_stress or plane_strain");
  cmd->add_flag("--no-mode3", f.no_mode3, "skip the mode-III pipeline");
  cmd->add_flag("--serial", f.serial, "serial reference kernels");
}

void add_output_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("-o,--outdir", f.outdir, "output directory");
  cmd->add_flag("--no-timestamp", f.no_timestamp, "omit the generation comment from SVG output");
}

void add_synth_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config, "JSON configuration with a 'synthetic' object");
  cmd->add_option("--K-I", f.K_I, "mode I SIF, MPa*sqrt(m) (default 3 when no K is given)");
  cmd->add_option("--K-II", f.K_II, "mode II SIF, MPa*sqrt(m) (default 1)");
  cmd->add_option("--K-III", f.K_III, "mode III SIF, MPa*sqrt(m) (default 5)");
  cmd->add_option("--E", f.E, "Young's modulus, Pa");
  cmd->add_option("--nu", f.nu, "Poisson's ratio");
  cmd->add_option("--plane-state", f.plane_state, "plane_strain or plane_stress");
  cmd->add_option("--nx", f.nx, "nodes along x");
  cmd->add_option("--ny", f.ny, "nodes along y");
  cmd->add_option("--spacing", f.spacing, "node pitch in --units");
  cmd->add_option("-u,--units", f.units, "length unit for --spacing");
  cmd->add_flag("--paper-mu", f.paper_mu, "shear modulus from the plane-strain modulus E'");
}

fs::path resolve_against(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

/// Config file (relative paths resolved against its directory) with the
/// flags patched on top.
Json merged_config(const Flags& f) {
  Json cfg = Json::object();
  if (!f.config.empty()) {
    cfg = read_json_file(f.config);
    if (!cfg.is_object()) config_error("configuration must be a JSON object");
    const fs::path base = fs::path(f.config).parent_path();
    if (cfg.contains("input") && cfg["input"].is_string()) cfg["input"] = resolve_against(base, cfg["input"]).string();
    if (cfg.contains("material") && cfg["material"].is_string()) {
      cfg["material"] = resolve_against(base, cfg["material"]).string();
    }
  }
  Json patch = Json::object();
  if (!f.input.empty()) patch["input"] = f.input;
  if (!f.units.empty()) patch["units"] = f.units;
  if (!f.delimiter.empty()) patch["delimiter"] = f.delimiter;
  if (!f.material.empty()) patch["material"] = f.material;
  if (!f.plane_state.empty()) patch["plane_state"] = f.plane_state;
  if (f.rotate != 0) patch["rotate"] = f.rotate;
  if (!f.crop.empty()) patch["crop"] = f.crop;
  if (!f.outdir.empty()) patch["outdir"] = f.outdir;
  if (!f.tip.empty() || !f.mouth.empty()) {
    if (cfg.contains("crack") && cfg["crack"].contains("polyline")) {
      Json& crack = cfg["crack"];
      const Json& poly = crack["polyline"];
      if (!crack.contains("mouth") && !poly.empty()) crack["mouth"] = poly.front();
      if (!crack.contains("tip") && !poly.empty()) crack["tip"] = poly.back();
      crack.erase("polyline");
    }
  }
  if (!f.tip.empty()) patch["crack"]["tip"] = f.tip;
  if (!f.mouth.empty()) patch["crack"]["mouth"] = f.mouth;
  if (!f.mask.empty()) {
    patch["crack"]["mask"] = {{"kind", "rectangle"}, {"min", {f.mask[0], f.mask[1]}}, {"max", {f.mask[2], f.mask[3]}}};
  }
  if (f.q_angle_deg) patch["crack"]["q_angle_deg"] = *f.q_angle_deg;
  if (!f.model.empty()) patch["options"]["model"] = f.model;
  if (f.contours) patch["options"]["contours"] = *f.contours;
  if (!f.window.empty()) patch["options"]["plateau"]["window"] = f.window;
  if (!f.pseudo_mode.empty()) patch["options"]["pseudo_mode"] = f.pseudo_mode;
  if (f.no_mode3) patch["options"]["mode3"] = false;
  if (!f.angles_deg.empty()) patch["angles_deg"] = f.angles_deg;
  if (f.half_range_deg) patch["sweep"]["half_range_deg"] = *f.half_range_deg;
  if (f.step_deg) patch["sweep"]["step_deg"] = *f.step_deg;

  const double to_m = f.units.empty() ? 1.0 : meters_per(parse_length_unit(f.units));
  if (f.K_I) patch["synthetic"]["K_I"] = *f.K_I * 1e6;
  if (f.K_II) patch["synthetic"]["K_II"] = *f.K_II * 1e6;
  if (f.K_III) patch["synthetic"]["K_III"] = *f.K_III * 1e6;
  if (f.E) patch["synthetic"]["E"] = *f.E;
  if (f.nu) patch["synthetic"]["nu"] = *f.nu;
  if (f.nx) patch["synthetic"]["nx"] = *f.nx;
  if (f.ny) patch["synthetic"]["ny"] = *f.ny;
  if (f.spacing) patch["synthetic"]["spacing"] = *f.spacing * to_m;
  if (f.paper_mu) patch["synthetic"]["paper_mu"] = true;
  if (!f.fractions.empty()) patch["study"]["fractions"] = f.fractions;
  if (f.trials) patch["study"]["trials"] = *f.trials;
  if (f.seed) patch["study"]["seed"] = *f.seed;
  if (!f.distribution.empty()) patch["study"]["distribution"] = f.distribution;
  if (f.no_antithetic) patch["study"]["antithetic"] = false;
  if (f.adaptive_window) patch["study"]["fixed_window"] = false;
  if (!f.dx.empty()) patch["study"]["dx"] = f.dx;
  if (!f.dy.empty()) patch["study"]["dy"] = f.dy;
  if (f.mask_half_nodes) patch["study"]["mask_half_nodes"] = *f.mask_half_nodes;
  cfg.merge_patch(patch);
  return cfg;
}

std::string get_string(const Json& cfg, const char* key, const std::string& fallback = "") {
  if (!cfg.contains(key) || cfg.at(key).is_null()) return fallback;
  if (!cfg.at(key).is_string()) config_error(std::string("'") + key + "' must be a string");
  return cfg.at(key).get<std::string>();
}

Material material_from_config(const Json& cfg) {
  if (!cfg.contains("material")) config_error("no material given (--material or 'material')");
  const Json& m = cfg.at("material");
  Material material = m.is_string() ? load_material(m.get<std::string>()) : material_from_json(m);
  if (cfg.contains("plane_state")) material.plane_state = parse_plane_state(get_string(cfg, "plane_state"));
  return material;
}

AnalysisOptions options_from_config(const Json& cfg, bool serial) {
  AnalysisOptions o = cfg.contains("options") ? analysis_options_from_json(cfg.at("options")) : AnalysisOptions{};
  if (serial) o.solver.policy = ExecPolicy::serial;
  return o;
}

// ---------------------------------------------------------------------------
// analyze / qsweep

struct LoadedRun {
  Json cfg;
  fs::path input;
  LengthUnit units = LengthUnit::m;
  DisplacementField field;
  GridReport grid;
  std::string hash;
  CrackDefinition crack;
  Material material;
  AnalysisOptions options;
  Diagnostics diag;
};

LoadedRun load_run(const Flags& f) {
  LoadedRun run;
  run.cfg = merged_config(f);
  const Json& cfg = run.cfg;
  const std::string input = get_string(cfg, "input");
  if (input.empty()) config_error("no input file given (--input or 'input')");
  run.input = input;
  run.units = parse_length_unit(get_string(cfg, "units", "m"));
  std::optional<char> delim;
  const std::string d = get_string(cfg, "delimiter");
  if (!d.empty()) {
    if (d == "\\t" || d == "tab") delim = '\t';
    else if (d.size() == 1) delim = d[0];
    else config_error("delimiter must be a single character");
  }
  run.material = material_from_config(cfg);
  run.options = options_from_config(cfg, f.serial);
  if (run.options.model == ConstitutiveModel::deformation_plasticity && !run.material.ro) {
    config_error("model ramberg-osgood needs 'ramberg_osgood' parameters in the material");
  }
  if (!cfg.contains("crack")) config_error("no crack given (--tip/--mouth or 'crack')");
  run.crack = crack_from_json(cfg.at("crack"), meters_per(run.units));

  run.hash = file_hash(run.input);
  const PointCloud points = read_points(run.input, run.units, delim);
  run.grid = validate_grid(points);
  run.field = to_field(points, run.grid, &run.diag);
  const int rotate = cfg.value("rotate", 0);
  std::optional<IndexRect> crop;
  if (cfg.contains("crop")) {
    const auto c = cfg.at("crop").get<std::vector<int>>();
    if (c.size() != 4) config_error("crop must be [i0, j0, i1, j1]");
    crop = IndexRect{c[0], c[1], c[2], c[3]};
  }
  if (rotate % 4 != 0 || crop) run.field = transform_field(run.field, rotate, crop);

  if (!run.field.has_out_of_plane) {
    const Json opts = cfg.value("options", Json::object());
    for (const char* key : {"pseudo_mode", "mode3"}) {
      if (opts.contains(key) && !(std::string(key) == "mode3" && !opts.at(key).get<bool>())) {
        run.diag.warn(std::string("option '") + key +
                      "' needs 6-column stereo data; the input has no Uz, mode-III outputs omitted");
      }
    }
  }
  return run;
}

Json input_json(const LoadedRun& run) {
  const auto& d = run.field;
  return Json{{"path", run.input.string()},
              {"hash", run.hash},
              {"units", to_string(run.units)},
              {"grid", to_json(run.grid)},
              {"nx", d.nx},
              {"ny", d.ny},
              {"has_out_of_plane", d.has_out_of_plane},
              {"out_of_flatness", d.out_of_flatness}};
}

fs::path outdir_of(const Json& cfg) { return get_string(cfg, "outdir", "crackfield-out"); }

AnalysisResult with_load_warnings(AnalysisResult r, const Diagnostics& load) {
  r.warnings.insert(r.warnings.begin(), load.warnings.begin(), load.warnings.end());
  return r;
}

Json summary_json(const LoadedRun& run, const AnalysisResult& result) {
  return Json{{"format", "crackfield-summary"},
              {"version", kVersion},
              {"input", input_json(run)},
              {"material", to_json(run.material)},
              {"crack", to_json(run.crack)},
              {"options", to_json(run.options)},
              {"result", result_json(result)}};
}

void print_headline(const AnalysisResult& r) {
  const auto& p = r.plateau;
  std::ostringstream s;
  s << "plateau contours " << r.series.ring[p.start] << ".." << r.series.ring[p.end]
    << (p.no_plateau ? " (no plateau)" : "") << ": J = " << p.J.mean << " J/m^2";
  if (p.K_I) s << ", K_I = " << p.K_I->mean / 1e6 << ", K_II = " << p.K_II->mean / 1e6;
  if (p.K_III) s << ", K_III = " << p.K_III->mean / 1e6;
  if (p.K_I) s << " MPa*sqrt(m)";
  if (p.J_total) s << ", J_total = " << p.J_total->mean << " J/m^2";
  std::cout << s.str() << "\n";
}

int cmd_analyze(const Flags& f) {
  LoadedRun run = load_run(f);
  const AnalysisResult result =
      with_load_warnings(run_analysis(run.field, run.crack, run.material, run.options), run.diag);
  const fs::path outdir = outdir_of(run.cfg);
  emit_report(result, summary_json(run, result), outdir, SvgOptions{!f.no_timestamp});
  print_headline(result);
  std::cout << "wrote " << (outdir / "summary.json").string() << "\n";
  return kOk;
}

Json study_document(const StudyResult& study) {
  return Json{{"format", "crackfield-study"}, {"version", kVersion}, {"study", to_json(study)}};
}

void emit_study(const StudyResult& study, Json doc, const fs::path& outdir, bool timestamp) {
  ensure_directory(outdir);
  std::ostringstream csv, svg;
  write_study_csv(study, csv);
  write_study_svg(study, svg, SvgOptions{timestamp});
  write_file_atomic(outdir / "study.csv", csv.str());
  write_file_atomic(outdir / "study.json", doc.dump(2) + "\n");
  write_file_atomic(outdir / "study.svg", svg.str());
}

int cmd_qsweep(const Flags& f) {
  LoadedRun run = load_run(f);
  const PreparedProblem problem = prepare_problem(run.field, run.crack, run.material, run.options);
  const double crack_angle = problem.crack.crack_direction();
  std::vector<double> angles;
  if (run.cfg.contains("angles_deg")) {
    for (double a : run.cfg.at("angles_deg").get<std::vector<double>>()) angles.push_back(a * kDeg);
  } else {
    const Json sweep = run.cfg.value("sweep", Json::object());
    angles = default_sweep_angles(crack_angle, sweep.value("half_range_deg", 60.0), sweep.value("step_deg", 10.0));
  }
  const StudyResult study = q_sweep(problem, angles);
  const QSuggestion suggestion = suggest_q_direction(study, crack_angle);
  Json doc = study_document(study);
  doc["input"] = input_json(run);
  doc["material"] = to_json(run.material);
  doc["crack"] = to_json(run.crack);
  doc["options"] = to_json(run.options);
  doc["suggestion"] = to_json(suggestion);
  doc["warnings"] = problem.diagnostics.warnings;
  const fs::path outdir = outdir_of(run.cfg);
  emit_study(study, doc, outdir, !f.no_timestamp);
  std::cout << "suggested q angle: " << suggestion.angle / kDeg << " deg"
            << (suggestion.flat ? " (flat sweep)" : "") << (suggestion.range_exhausted ? " (at sweep end)" : "")
            << "\nwrote " << (outdir / "study.json").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// synth / studies

// Without any K the validation crack is used: K = (3, 1, 5) MPa*sqrt(m).
SyntheticSpec spec_from_config(const Json& cfg) {
  Json j = cfg.value("synthetic", Json::object());
  if (j.is_object() && !j.contains("K_I") && !j.contains("K_II") && !j.contains("K_III")) {
    j["K_I"] = 3e6;
    j["K_II"] = 1e6;
    j["K_III"] = 5e6;
  }
  return synthetic_spec_from_json(j);
}

int cmd_synth(const Flags& f, const std::string& out, std::optional<double> noise, std::uint64_t seed,
              int mask_half_nodes) {
  const Json cfg = merged_config(f);
  const SyntheticSpec spec = spec_from_config(cfg);
  DisplacementField field = generate_williams_field(spec);
  if (noise && *noise > 0.0) field = add_noise(field, *noise, seed);
  const fs::path csv_path(out);
  std::ostringstream csv;
  write_field_csv(field, csv);
  if (csv_path.has_parent_path()) ensure_directory(csv_path.parent_path());
  write_file_atomic(csv_path, csv.str());

  // The sidecar doubles as an analyze/qsweep configuration.
  Json sidecar{{"format", "crackfield-synth"},
               {"version", kVersion},
               {"input", csv_path.filename().string()},
               {"units", "m"},
               {"material", to_json(spec.material)},
               {"crack", to_json(synthetic_crack(spec, mask_half_nodes))},
               {"options", Json::object()},
               {"synthetic", to_json(spec)},
               {"noise", {{"fraction", noise.value_or(0.0)}, {"seed", seed}}}};
  sidecar["crack"].erase("crack_angle");
  sidecar["crack"].erase("q_angle");
  fs::path json_path = csv_path;
  json_path.replace_extension(".json");
  write_file_atomic(json_path, sidecar.dump(2) + "\n");
  std::cout << "wrote " << csv_path.string() << " and " << json_path.string() << "\n";
  return kOk;
}

NoiseStudyOptions noise_options(const Json& cfg) {
  NoiseStudyOptions o;
  const Json s = cfg.value("study", Json::object());
  try {
    if (s.contains("fractions")) o.fractions = s.at("fractions").get<std::vector<double>>();
    o.trials = s.value("trials", o.trials);
    o.seed = s.value("seed", o.seed);
    const std::string dist = s.value("distribution", std::string("gaussian"));
    if (dist == "gaussian") o.distribution = NoiseDistribution::gaussian;
    else if (dist == "uniform") o.distribution = NoiseDistribution::uniform;
    else config_error("unknown noise distribution '" + dist + "'");
    o.antithetic = s.value("antithetic", o.antithetic);
    o.fixed_window = s.value("fixed_window", o.fixed_window);
    o.mask_half_nodes = s.value("mask_half_nodes", o.mask_half_nodes);
  } catch (const Json::exception& e) {
    config_error(std::string("invalid study options: ") + e.what());
  }
  return o;
}

TipStudyOptions tip_options(const Json& cfg) {
  TipStudyOptions o;
  const Json s = cfg.value("study", Json::object());
  try {
    if (s.contains("dx")) o.dx = s.at("dx").get<std::vector<int>>();
    if (s.contains("dy")) o.dy = s.at("dy").get<std::vector<int>>();
    o.fixed_window = s.value("fixed_window", o.fixed_window);
    o.mask_half_nodes = s.value("mask_half_nodes", o.mask_half_nodes);
  } catch (const Json::exception& e) {
    config_error(std::string("invalid study options: ") + e.what());
  }
  return o;
}

Json noise_trend(const StudyResult& study) {
  std::vector<double> x;
  for (const auto& p : study.points) x.push_back(p.axis);
  Json trend;
  for (int q = 0; q < QuantityValues::size; ++q) {
    std::vector<double> env, sd;
    for (const auto& p : study.points) {
      env.push_back(p.error_envelope[q]);
      sd.push_back(p.plateau_std[q]);
    }
    const bool has = std::all_of(env.begin(), env.end(), [](double v) { return std::isfinite(v); });
    trend[kQuantityNames[q]] = has ? Json{{"error_envelope", spearman(x, env)}, {"plateau_std", spearman(x, sd)}}
                                   : Json(nullptr);
  }
  return trend;
}

int cmd_noise(const Flags& f) {
  const Json cfg = merged_config(f);
  const SyntheticSpec spec = spec_from_config(cfg);
  const NoiseStudyOptions study_opts = noise_options(cfg);
  const AnalysisOptions options = options_from_config(cfg, f.serial);
  const StudyResult study = noise_study(spec, study_opts, options);
  Json doc = study_document(study);
  doc["synthetic"] = to_json(spec);
  doc["options"] = to_json(options);
  doc["spearman"] = noise_trend(study);
  const fs::path outdir = outdir_of(cfg);
  emit_study(study, doc, outdir, !f.no_timestamp);
  std::cout << "wrote " << (outdir / "study.json").string() << "\n";
  return kOk;
}

int cmd_tip(const Flags& f) {
  const Json cfg = merged_config(f);
  const SyntheticSpec spec = spec_from_config(cfg);
  const AnalysisOptions options = options_from_config(cfg, f.serial);
  const StudyResult study = tip_offset_study(spec, tip_options(cfg), options);
  Json doc = study_document(study);
  doc["synthetic"] = to_json(spec);
  doc["options"] = to_json(options);
  const fs::path outdir = outdir_of(cfg);
  emit_study(study, doc, outdir, !f.no_timestamp);
  std::cout << "wrote " << (outdir / "study.json").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// report / serve

int cmd_report(const std::string& summary_path, std::string outdir, bool timestamp) {
  const Json doc = read_json_file(summary_path);
  if (outdir.empty()) outdir = fs::path(summary_path).parent_path().string();
  if (outdir.empty()) outdir = ".";
  const std::string format = doc.value("format", std::string());
  if (format == "crackfield-summary") {
    const AnalysisResult result = result_from_json(doc.at("result"));
    emit_report(result, doc, outdir, SvgOptions{timestamp});
    print_headline(result);
  } else {
    config_error("'" + summary_path + "' is not a crackfield summary");
  }
  std::cout << "wrote report to " << outdir << "\n";
  return kOk;
}

int cmd_serve(const ServiceOptions& options) {
  // Block the stop signals before any thread starts so they all inherit the
  // mask and the main thread can collect them with sigwait.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  Service service(options);
  const int port = service.start();
  std::cout << "crackfield service on http://" << options.host << ":" << port << "\n" << std::flush;
  int sig = 0;
  sigwait(&set, &sig);
  spdlog::info("signal {}, shutting down", sig);
  service.stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"crackfield: J-integral and stress intensity factors from DIC displacement fields"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Flags f;

  auto* analyze = app.add_subcommand("analyze", "solve a field and extract J and K over contours");
  add_input_flags(analyze, f);
  add_output_flags(analyze, f);

  auto* qsweep = app.add_subcommand("qsweep", "J and K against the virtual crack extension direction");
  add_input_flags(qsweep, f);
  add_output_flags(qsweep, f);
  qsweep->add_option("--angles-deg", f.angles_deg, "explicit q angles");
  qsweep->add_option("--half-range-deg", f.half_range_deg, "sweep half range about the crack direction");
  qsweep->add_option("--step-deg", f.step_deg, "sweep step");

  std::string synth_out = "synthetic.csv";
  std::optional<double> synth_noise;
  std::uint64_t synth_seed = 1;
  int synth_mask = 2;
  auto* synth = app.add_subcommand("synth", "generate an analytical crack-tip displacement field");
  add_synth_flags(synth, f);
  synth->add_option("-o,--out", synth_out, "output CSV (a JSON sidecar is written next to it)");
  synth->add_option("--noise", synth_noise, "noise std as a fraction of the mean |u|");
  synth->add_option("--seed", synth_seed, "noise seed");
  synth->add_option("--mask-half-nodes", synth_mask, "half-width of the tip mask in the sidecar crack");

  auto* noise = app.add_subcommand("noise-study", "plateau error against added noise");
  add_synth_flags(noise, f);
  add_output_flags(noise, f);
  noise->add_option("--fractions", f.fractions, "noise fractions");
  noise->add_option("--trials", f.trials, "trials per fraction");
  noise->add_option("--seed", f.seed, "noise seed");
  noise->add_option("--distribution", f.distribution, "gaussian or uniform");
  noise->add_flag("--no-antithetic", f.no_antithetic, "independent draws instead of +/- pairs");
  noise->add_flag("--adaptive-window", f.adaptive_window, "detect the plateau per realisation");
  noise->add_option("--mask-half-nodes", f.mask_half_nodes, "half-width of the tip mask");
  noise->add_option("-n,--contours", f.contours, "number of contours");
  noise->add_flag("--serial", f.serial, "serial reference kernels");

  auto* tip = app.add_subcommand("tip-study", "plateau error against tip placement offsets");
  add_synth_flags(tip, f);
  add_output_flags(tip, f);
  tip->add_option("--dx", f.dx, "tip offsets along x in nodes");
  tip->add_option("--dy", f.dy, "tip offsets along y in nodes");
  tip->add_flag("--adaptive-window", f.adaptive_window, "detect the plateau per offset");
  tip->add_option("--mask-half-nodes", f.mask_half_nodes, "half-width of the tip mask");
  tip->add_option("-n,--contours", f.contours, "number of contours");
  tip->add_flag("--serial", f.serial, "serial reference kernels");

  std::string report_summary, report_outdir;
  bool report_no_ts = false;
  auto* report = app.add_subcommand("report", "regenerate CSV and SVG output from summary.json");
  report->add_option("summary", report_summary, "summary.json of an earlier run")->required();
  report->add_option("-o,--outdir", report_outdir, "output directory (default: next to the summary)");
  report->add_flag("--no-timestamp", report_no_ts, "omit the generation comment from SVG output");

  ServiceOptions service_options;
  auto* serve = app.add_subcommand("serve", "HTTP service for the browser front end");
  serve->add_option("--host", service_options.host, "bind address");
  serve->add_option("--port", service_options.port, "port (0 = any free port)");
  serve->add_option("--static", service_options.static_dir, "directory served at /");
  serve->add_option("--queue", service_options.queue_capacity, "job queue capacity");
  serve->add_option("--workers", service_options.workers, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*analyze) return cmd_analyze(f);
    if (*qsweep) return cmd_qsweep(f);
    if (*synth) return cmd_synth(f, synth_out, synth_noise, synth_seed, synth_mask);
    if (*noise) return cmd_noise(f);
    if (*tip) return cmd_tip(f);
    if (*report) return cmd_report(report_summary, report_outdir, !report_no_ts);
    if (*serve) return cmd_serve(service_options);
  } catch (const Error& e) {
    std::cerr << error_json(e).dump() << "\n";
    return exit_code_for(e.kind());
  } catch (const Json::exception& e) {
    std::cerr << error_json("ConfigError", kModule, e.what()).dump() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << error_json("InternalError", kModule, e.what()).dump() << "\n";
    return kAnalysisError;
  }
  return kOk;
}
