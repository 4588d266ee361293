#include "crackfield/serialize.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

namespace crackfield {
namespace {

constexpr const char* kModule = "serialize";

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorKind::ConfigError, kModule, message);
}

double number(const Json& j, const char* key) {
  if (!j.contains(key)) config_error(std::string("missing key '") + key + "'");
  if (!j.at(key).is_number()) config_error(std::string("key '") + key + "' must be a number");
  return j.at(key).get<double>();
}

double number_or(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

Vec2 point(const Json& j, double scale) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    config_error("points must be [x, y] number pairs");
  }
  return Vec2(j[0].get<double>(), j[1].get<double>()) * scale;
}

Json point_json(const Vec2& p) { return Json::array({p.x(), p.y()}); }

Json mean_std_json(const std::optional<MeanStd>& v) {
  if (!v) return nullptr;
  return Json{{"mean", v->mean}, {"std", v->std}};
}

Json column(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  return Json(v);
}

Json nan_to_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

std::string fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, kModule, "cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

Material material_from_json(const Json& j) {
  if (!j.is_object()) config_error("material must be a JSON object");
  const std::string model = j.value("model", std::string("isotropic"));
  const PlaneState state = parse_plane_state(j.value("plane_state", std::string("plane_strain")));
  Material m;
  if (model == "isotropic") {
    m = Material::isotropic(number(j, "E"), number(j, "nu"), state);
  } else if (model == "cubic") {
    if (j.contains("C11")) {
      m = Material::cubic(number(j, "C11"), number(j, "C12"), number(j, "C44"), state);
    } else if (j.contains("C")) {
      const auto& c = j.at("C");
      if (!c.is_array() || c.size() != 36) config_error("C must hold 36 numbers (row-major 6x6)");
      m = Material::cubic(c[0].get<double>(), c[1].get<double>(), c[21].get<double>(), state);
    } else {
      config_error("cubic material needs C11, C12, C44 or C");
    }
  } else if (model == "anisotropic" || model == "general-anisotropic" || model == "general_anisotropic") {
    const auto& c = j.at("C");
    if (!c.is_array() || c.size() != 36) config_error("C must hold 36 numbers (row-major 6x6)");
    Stiffness6 C;
    for (int r = 0; r < 6; ++r)
      for (int k = 0; k < 6; ++k) C(r, k) = c[static_cast<std::size_t>(6 * r + k)].get<double>();
    m = Material::anisotropic(C, state);
  } else {
    config_error("unknown material model '" + model + "'");
  }
  if (j.contains("ramberg_osgood") && !j.at("ramberg_osgood").is_null()) {
    const auto& r = j.at("ramberg_osgood");
    m.ro = RambergOsgood{number(r, "sigma0"), number(r, "alpha"), number(r, "n")};
  }
  m.validate();
  return m;
}

Json to_json(const Material& m) {
  Json j;
  j["model"] = std::string(to_string(m.model));
  j["E"] = m.E;
  j["nu"] = m.nu;
  j["plane_state"] = std::string(to_string(m.plane_state));
  if (m.C) {
    Json c = Json::array();
    for (int r = 0; r < 6; ++r)
      for (int k = 0; k < 6; ++k) c.push_back((*m.C)(r, k));
    j["C"] = c;
  }
  if (m.ro) j["ramberg_osgood"] = {{"sigma0", m.ro->sigma0}, {"alpha", m.ro->alpha}, {"n", m.ro->n}};
  return j;
}

Material load_material(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open material file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    config_error("material file " + path.string() + ": " + e.what());
  }
  return material_from_json(j);
}

MaskRegion mask_from_json(const Json& j, double to_meters) {
  if (!j.is_object()) config_error("mask must be a JSON object");
  const std::string kind = j.value("kind", std::string("rectangle"));
  std::vector<Vec2> pts;
  if (j.contains("vertices")) {
    for (const auto& p : j.at("vertices")) pts.push_back(point(p, to_meters));
  } else if (j.contains("min") && j.contains("max")) {
    pts = {point(j.at("min"), to_meters), point(j.at("max"), to_meters)};
  } else {
    config_error("mask needs 'vertices' or 'min'/'max'");
  }
  MaskRegion m;
  if (kind == "rectangle") {
    if (pts.size() != 2) config_error("rectangle mask needs two corner points");
    m = MaskRegion::rectangle(pts[0], pts[1]);
  } else if (kind == "polygon") {
    m = MaskRegion::polygon(pts);
  } else {
    config_error("unknown mask kind '" + kind + "'");
  }
  m.validate();
  return m;
}

Json to_json(const MaskRegion& mask) {
  Json v = Json::array();
  for (const auto& p : mask.vertices) v.push_back(point_json(p));
  return Json{{"kind", mask.kind == MaskRegion::Kind::rectangle ? "rectangle" : "polygon"}, {"vertices", v}};
}

CrackDefinition crack_from_json(const Json& j, double to_meters) {
  if (!j.is_object()) config_error("crack must be a JSON object");
  CrackDefinition c;
  if (j.contains("polyline")) {
    for (const auto& p : j.at("polyline")) c.polyline.push_back(point(p, to_meters));
  } else if (j.contains("mouth") && j.contains("tip")) {
    c.polyline = {point(j.at("mouth"), to_meters), point(j.at("tip"), to_meters)};
  } else {
    config_error("crack needs 'polyline' or 'mouth' and 'tip'");
  }
  if (j.contains("q_angle_deg") && !j.at("q_angle_deg").is_null()) {
    c.q_angle = number(j, "q_angle_deg") * std::numbers::pi / 180.0;
  } else if (j.contains("q_angle") && !j.at("q_angle").is_null()) {
    c.q_angle = number(j, "q_angle");
  }
  if (j.contains("mask") && !j.at("mask").is_null()) c.mask = mask_from_json(j.at("mask"), to_meters);
  c.validate();
  return c;
}

Json to_json(const CrackDefinition& crack) {
  Json poly = Json::array();
  for (const auto& p : crack.polyline) poly.push_back(point_json(p));
  Json j{{"polyline", poly}};
  if (!crack.empty()) {
    j["tip"] = point_json(crack.tip());
    j["crack_angle"] = crack.crack_direction();
    j["q_angle"] = crack.q_direction();
  }
  j["mask"] = crack.mask ? to_json(*crack.mask) : Json(nullptr);
  return j;
}

SyntheticSpec synthetic_spec_from_json(const Json& j) {
  if (!j.is_object()) config_error("synthetic spec must be a JSON object");
  Material m = j.contains("material") ? material_from_json(j.at("material"))
                                      : Material::isotropic(number_or(j, "E", 210e9), number_or(j, "nu", 0.3),
                                                            parse_plane_state(j.value("plane_state", std::string("plane_strain"))));
  SyntheticSpec s = SyntheticSpec::centred(number_or(j, "K_I", 0.0), number_or(j, "K_II", 0.0),
                                           number_or(j, "K_III", 0.0), j.value("nx", 51), j.value("ny", 51),
                                           number_or(j, "spacing", 4e-8), m);
  if (j.contains("lower")) s.lower = point(j.at("lower"), 1.0);
  if (j.contains("tip")) s.tip = point(j.at("tip"), 1.0);
  s.crack_angle = number_or(j, "crack_angle", 0.0);
  s.paper_mu = j.value("paper_mu", false);
  s.validate();
  return s;
}

Json to_json(const SyntheticSpec& s) {
  return Json{{"K_I", s.K_I},       {"K_II", s.K_II},   {"K_III", s.K_III},   {"material", to_json(s.material)},
              {"nx", s.nx},         {"ny", s.ny},       {"spacing", s.spacing}, {"lower", point_json(s.lower)},
              {"tip", point_json(s.tip)}, {"crack_angle", s.crack_angle}, {"paper_mu", s.paper_mu}};
}

Json to_json(const GridReport& r) {
  return Json{{"nx", r.nx},
              {"ny", r.ny},
              {"spacing_x", r.spacing_x},
              {"spacing_y", r.spacing_y},
              {"lower", point_json(r.lower)},
              {"max_deviation", r.max_deviation},
              {"missing_nodes", r.missing_nodes}};
}

Json to_json(const PlateauStats& p, const ContourSeries& series) {
  return Json{{"start_contour", series.ring.at(static_cast<std::size_t>(p.start))},
              {"end_contour", series.ring.at(static_cast<std::size_t>(p.end))},
              {"start_index", p.start},
              {"end_index", p.end},
              {"no_plateau", p.no_plateau},
              {"explicit_window", p.explicit_window},
              {"J", mean_std_json(p.J)},
              {"K_I", mean_std_json(p.K_I)},
              {"K_II", mean_std_json(p.K_II)},
              {"K_II_pseudo", mean_std_json(p.K_II_pseudo)},
              {"K_III", mean_std_json(p.K_III)},
              {"J_III", mean_std_json(p.J_III)},
              {"J_total", mean_std_json(p.J_total)}};
}

Json to_json(const ContourSeries& s) {
  return Json{{"contour", s.ring},          {"radius_m", s.outer_radius}, {"J", s.J},
              {"K_I", column(s.K_I)},       {"K_II", column(s.K_II)},     {"K_II_pseudo", column(s.K_II_pseudo)},
              {"K_III", column(s.K_III)},   {"J_III", column(s.J_III)},   {"J_total", column(s.J_total)}};
}

ConstitutiveModel parse_constitutive_model(std::string_view text) {
  if (text == "elastic") return ConstitutiveModel::elastic;
  if (text == "ramberg-osgood" || text == "ramberg_osgood" || text == "deformation_plasticity") {
    return ConstitutiveModel::deformation_plasticity;
  }
  config_error("unknown model '" + std::string(text) + "' (elastic | ramberg-osgood)");
}

AnalysisOptions analysis_options_from_json(const Json& j, AnalysisOptions o) {
  if (!j.is_object()) config_error("options must be a JSON object");
  try {
    if (j.contains("model")) o.model = parse_constitutive_model(j.at("model").get<std::string>());
    if (j.contains("contours")) o.n_contours = j.at("contours").get<int>();
    if (j.contains("pseudo_mode")) o.pseudo_mode = parse_pseudo_mode(j.at("pseudo_mode").get<std::string>());
    if (j.contains("mode3")) o.mode3 = j.at("mode3").get<bool>();
    if (j.contains("tol")) o.solver.tol = j.at("tol").get<double>();
    if (j.contains("max_iter")) o.solver.max_iter = j.at("max_iter").get<int>();
    if (j.contains("plateau")) {
      const auto& p = j.at("plateau");
      if (p.contains("window_min")) o.plateau.window_min = p.at("window_min").get<int>();
      if (p.contains("rel_tol")) o.plateau.rel_tol = p.at("rel_tol").get<double>();
      if (p.contains("skip")) o.plateau.skip = p.at("skip").get<int>();
      if (p.contains("window") && !p.at("window").is_null()) {
        const auto& w = p.at("window");
        if (!w.is_array() || w.size() != 2) config_error("plateau.window must be [first, last]");
        o.plateau.window = std::make_pair(w[0].get<int>() - 1, w[1].get<int>() - 1);
      }
    }
  } catch (const Json::exception& e) {
    config_error(std::string("invalid analysis options: ") + e.what());
  }
  if (o.n_contours < 1) config_error("contours must be at least 1");
  if (o.solver.max_iter < 1 || !(o.solver.tol > 0.0)) config_error("tol must be positive and max_iter >= 1");
  return o;
}

Json to_json(const AnalysisOptions& o) {
  Json plateau{{"window_min", o.plateau.window_min}, {"rel_tol", o.plateau.rel_tol}, {"skip", o.plateau.skip}};
  plateau["window"] = o.plateau.window ? Json::array({o.plateau.window->first + 1, o.plateau.window->second + 1}) : Json(nullptr);
  return Json{{"model", std::string(to_string(o.model))},
              {"contours", o.n_contours},
              {"plateau", plateau},
              {"pseudo_mode", std::string(to_string(o.pseudo_mode))},
              {"mode3", o.mode3},
              {"tol", o.solver.tol},
              {"max_iter", o.solver.max_iter}};
}

Json result_json(const AnalysisResult& r) {
  return Json{{"solver",
               {{"model", std::string(to_string(r.model_used))},
                {"iterations", r.iterations},
                {"residual", r.residual},
                {"free_dofs", r.free_dofs},
                {"seam_pairs", r.seam_pairs}}},
              {"q_angle", r.q_angle},
              {"contours", r.series.size()},
              {"plateau", to_json(r.plateau, r.series)},
              {"series", to_json(r.series)},
              {"warnings", r.warnings}};
}

ContourSeries series_from_json(const Json& j) {
  auto col = [&](const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::vector<double>{};
    return j.at(key).get<std::vector<double>>();
  };
  ContourSeries s;
  try {
    s.ring = j.at("contour").get<std::vector<int>>();
    s.outer_radius = col("radius_m");
    s.J = col("J");
    s.K_I = col("K_I");
    s.K_II = col("K_II");
    s.K_II_pseudo = col("K_II_pseudo");
    s.K_III = col("K_III");
    s.J_III = col("J_III");
    s.J_total = col("J_total");
  } catch (const Json::exception& e) {
    config_error(std::string("invalid series: ") + e.what());
  }
  if (s.J.size() != s.ring.size() || s.outer_radius.size() != s.ring.size()) config_error("series columns differ in length");
  return s;
}

AnalysisResult result_from_json(const Json& j) {
  AnalysisResult r;
  try {
    r.series = series_from_json(j.at("series"));
    const auto& sv = j.at("solver");
    r.model_used = parse_constitutive_model(sv.at("model").get<std::string>());
    r.iterations = sv.at("iterations").get<int>();
    r.residual = sv.at("residual").get<double>();
    r.free_dofs = sv.at("free_dofs").get<std::size_t>();
    r.seam_pairs = sv.at("seam_pairs").get<std::size_t>();
    r.q_angle = j.at("q_angle").get<double>();
    r.warnings = j.value("warnings", std::vector<std::string>{});
    const auto& p = j.at("plateau");
    r.plateau = plateau_over(r.series, p.at("start_index").get<int>(), p.at("end_index").get<int>());
    r.plateau.no_plateau = p.value("no_plateau", false);
    r.plateau.explicit_window = p.value("explicit_window", false);
  } catch (const Json::exception& e) {
    config_error(std::string("invalid result document: ") + e.what());
  }
  return r;
}

Json to_json(const QuantityValues& v) {
  Json j;
  for (int q = 0; q < QuantityValues::size; ++q) j[kQuantityNames[q]] = nan_to_null(v[q]);
  return j;
}

Json to_json(const StudyPoint& p, StudyKind kind) {
  Json j;
  if (kind == StudyKind::tip_offset) {
    j["dx"] = p.dx;
    j["dy"] = p.dy;
  } else {
    j[kind == StudyKind::q_sweep ? "angle" : "fraction"] = p.axis;
  }
  j["mean"] = to_json(p.mean);
  j["plateau_std"] = to_json(p.plateau_std);
  j["spread"] = to_json(p.spread);
  j["error"] = to_json(p.error);
  j["error_rms"] = to_json(p.error_rms);
  j["error_envelope"] = to_json(p.error_envelope);
  j["realisations"] = p.realisations;
  j["no_plateau"] = p.no_plateau;
  return j;
}

Json to_json(const StudyResult& s) {
  Json pts = Json::array();
  for (const auto& p : s.points) pts.push_back(to_json(p, s.kind));
  Json j{{"kind", std::string(to_string(s.kind))}, {"points", pts}};
  j["truth"] = s.truth ? to_json(*s.truth) : Json(nullptr);
  j["window"] = s.window_start >= 0 ? Json::array({s.window_start, s.window_end}) : Json(nullptr);
  return j;
}

Json to_json(const QSuggestion& s) {
  return Json{{"angle", s.angle},
              {"angle_deg", s.angle * 180.0 / std::numbers::pi},
              {"discrete_index", s.discrete_index},
              {"flat", s.flat},
              {"range_exhausted", s.range_exhausted}};
}

Json error_json(const Error& error) { return error_json(to_string(error.kind()), error.module(), error.what()); }

Json error_json(std::string_view kind, std::string_view module, std::string_view message) {
  return Json{{"error", {{"kind", kind}, {"module", module}, {"message", message}}}};
}

}  // namespace crackfield
