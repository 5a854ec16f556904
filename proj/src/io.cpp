#include "reflectopt/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifndef REFLECTOPT_VERSION
#define REFLECTOPT_VERSION "unknown"
#endif

namespace reflectopt::io {

Section::Section(Json const &node, std::string path)
  : node_(&node)
  , path_(std::move(path))
{
  if (!node.is_object()) { throw ConfigError((path_.empty() ? "/" : path_) + ": expected an object"); }
}

Json const &Section::at(std::string const &key) const
{
  auto const it = node_->find(key);
  if (it == node_->end()) { throw ConfigError(path_of(key) + ": required entry is missing"); }
  return *it;
}

double Section::number(std::string const &key) const
{
  Json const &v = at(key);
  if (!v.is_number()) { throw ConfigError(path_of(key) + ": expected a number"); }
  return v.get<double>();
}

double Section::number(std::string const &key, double fallback) const
{
  return has(key) ? number(key) : fallback;
}

long long Section::integer(std::string const &key) const
{
  Json const &v = at(key);
  if (!v.is_number_integer()) { throw ConfigError(path_of(key) + ": expected an integer"); }
  return v.get<long long>();
}

long long Section::integer(std::string const &key, long long fallback) const
{
  return has(key) ? integer(key) : fallback;
}

bool Section::flag(std::string const &key, bool fallback) const
{
  if (!has(key)) { return fallback; }
  Json const &v = at(key);
  if (!v.is_boolean()) { throw ConfigError(path_of(key) + ": expected true or false"); }
  return v.get<bool>();
}

std::string Section::text(std::string const &key) const
{
  Json const &v = at(key);
  if (!v.is_string()) { throw ConfigError(path_of(key) + ": expected a string"); }
  return v.get<std::string>();
}

std::string Section::text(std::string const &key, std::string const &fallback) const
{
  return has(key) ? text(key) : fallback;
}

std::vector<double> Section::numbers(std::string const &key) const
{
  Json const &v = at(key);
  if (!v.is_array()) { throw ConfigError(path_of(key) + ": expected an array of numbers"); }
  std::vector<double> out;
  for (auto const &e : v) {
    if (!e.is_number()) { throw ConfigError(path_of(key) + ": expected an array of numbers"); }
    out.push_back(e.get<double>());
  }
  return out;
}

Vector Section::vector(std::string const &key) const
{
  auto const values = numbers(key);
  return Eigen::Map<Vector const>(values.data(), static_cast<Index>(values.size()));
}

Matrix Section::matrix(std::string const &key) const
{
  Json const &v = at(key);
  std::string const where = path_of(key);
  if (!v.is_array() || v.empty()) { throw ConfigError(where + ": expected an array of rows"); }
  Index const rows = static_cast<Index>(v.size());
  Index cols = -1;
  Matrix M;
  for (Index r = 0; r < rows; ++r) {
    Json const &row = v[static_cast<size_t>(r)];
    if (!row.is_array() || row.empty() || (cols >= 0 && static_cast<Index>(row.size()) != cols)) {
      throw ConfigError(where + ": rows must be non-empty arrays of equal length");
    }
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      M.resize(rows, cols);
    }
    for (Index c = 0; c < cols; ++c) {
      Json const &e = row[static_cast<size_t>(c)];
      if (!e.is_number()) { throw ConfigError(where + ": matrix entries must be numbers"); }
      M(r, c) = e.get<double>();
    }
  }
  return M;
}

Section Section::child(std::string const &key) const { return Section(at(key), path_of(key)); }

std::optional<Section> Section::optional_child(std::string const &key) const
{
  if (!has(key)) { return std::nullopt; }
  return child(key);
}

void Section::allow_only(std::initializer_list<char const *> keys) const
{
  for (auto const &item : node_->items()) {
    bool known = false;
    for (char const *k : keys) { known = known || item.key() == k; }
    if (!known) { throw ConfigError(path_of(item.key()) + ": unknown entry"); }
  }
}

Json parse_json(std::string const &text, std::string const &origin)
{
  try {
    return Json::parse(text);
  } catch (Json::parse_error const &e) {
    // Byte offset to line and column.
    size_t const offset = std::min(e.byte > 0 ? e.byte - 1 : 0, text.size());
    size_t line = 1, column = 1;
    for (size_t k = 0; k < offset; ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(column) +
                      ": malformed JSON (" + e.what() + ")");
  }
}

Json read_json_file(std::filesystem::path const &file)
{
  std::ifstream in(file);
  if (!in) { throw ConfigError(file.string() + ": cannot open"); }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_json(buffer.str(), file.string());
}

Potential parse_potential(Section const &s, Index dimension)
{
  s.allow_only({"kind", "matrix", "inverse_of", "scale"});
  std::string const kind = s.text("kind");
  if (kind == "zero") { return Potential::zero(dimension); }
  if (kind != "quadratic") { throw ConfigError(s.path_of("kind") + ": expected \"zero\" or \"quadratic\""); }
  if (s.has("matrix") == s.has("inverse_of")) {
    throw ConfigError(s.path() + ": give exactly one of \"matrix\" and \"inverse_of\"");
  }
  std::string const key = s.has("matrix") ? "matrix" : "inverse_of";
  Matrix A = s.matrix(key);
  if (A.rows() != dimension || A.cols() != dimension) {
    throw ConfigError(s.path_of(key) + ": expected a " + std::to_string(dimension) + "x" + std::to_string(dimension) +
                      " matrix");
  }
  if (key == "inverse_of") {
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible()) { throw ConfigError(s.path_of(key) + ": matrix is singular"); }
    A = lu.inverse();
  }
  return Potential::quadratic(A, s.number("scale", 1.0));
}

CostModel parse_cost(Section const &s, Index dimension)
{
  s.allow_only({"kind", "weights", "kappa"});
  std::string const kind = s.text("kind");
  double const kappa = s.number("kappa");
  if (!(kappa >= 0.0)) { throw ConfigError(s.path_of("kappa") + ": must be non-negative"); }
  if (kind == "norm") { return CostModel::norm(dimension, kappa); }
  if (kind == "zero") { return CostModel::zero(dimension, kappa); }
  if (kind != "weighted_norm") {
    throw ConfigError(s.path_of("kind") + ": expected \"norm\", \"weighted_norm\" or \"zero\"");
  }
  Vector w = s.vector("weights");
  if (w.size() != dimension) { throw ConfigError(s.path_of("weights") + ": length must equal the dimension"); }
  if ((w.array() < 0.0).any()) { throw ConfigError(s.path_of("weights") + ": must be non-negative"); }
  return CostModel::weighted_norm(std::move(w), kappa);
}

SphereDirections parse_directions(Section const &s, Index dimension)
{
  s.allow_only({"count", "points"});
  if (s.has("count") == s.has("points")) { throw ConfigError(s.path() + ": give exactly one of \"count\" and \"points\""); }
  if (s.has("count")) {
    long long const n = s.integer("count");
    if (n < dimension + 1) { throw ConfigError(s.path_of("count") + ": too few directions for the dimension"); }
    return make_directions(dimension, static_cast<Index>(n));
  }
  Matrix const rows = s.matrix("points");
  if (rows.cols() != dimension) { throw ConfigError(s.path_of("points") + ": each point needs one entry per coordinate"); }
  return directions_from_points(rows.transpose());
}

OptimizerConfig parse_optimizer(Section const &s, Index vertex_count)
{
  s.allow_only({"max_iters", "grad_tol", "step_rule", "lower", "upper", "initial_radius", "initial_radii",
                "snapshot_every", "quadrature_points", "allow_fast_path"});
  OptimizerConfig cfg;
  cfg.max_iters = static_cast<int>(s.integer("max_iters", cfg.max_iters));
  cfg.grad_tol = s.number("grad_tol", cfg.grad_tol);
  std::string const rule = s.text("step_rule", "projected_gradient");
  if (rule == "projected_gradient") {
    cfg.step_rule = StepRule::ProjectedGradient;
  } else if (rule == "projected_bfgs") {
    cfg.step_rule = StepRule::ProjectedBFGS;
  } else {
    throw ConfigError(s.path_of("step_rule") + ": expected \"projected_gradient\" or \"projected_bfgs\"");
  }
  cfg.lower = s.number("lower", cfg.lower);
  cfg.upper = s.number("upper", cfg.upper);
  if (s.has("initial_radius") && s.has("initial_radii")) {
    throw ConfigError(s.path() + ": give at most one of \"initial_radius\" and \"initial_radii\"");
  }
  if (s.has("initial_radius")) { cfg.initial_radii = Vector::Constant(vertex_count, s.number("initial_radius")); }
  if (s.has("initial_radii")) { cfg.initial_radii = s.vector("initial_radii"); }
  cfg.snapshot_every = static_cast<int>(s.integer("snapshot_every", cfg.snapshot_every));
  if (s.has("quadrature_points")) {
    long long const n = s.integer("quadrature_points");
    if (n < 1 || n > 64) { throw ConfigError(s.path_of("quadrature_points") + ": expected 1..64"); }
    cfg.rule = gauss_legendre(static_cast<Index>(n));
  }
  cfg.allow_fast_path = s.flag("allow_fast_path", cfg.allow_fast_path);
  try {
    cfg.validate(vertex_count);
  } catch (Error const &e) {
    throw ConfigError(s.path() + ": " + e.what());
  }
  return cfg;
}

SimConfig parse_simulation(Section const &s)
{
  SimConfig cfg;
  cfg.dt = s.number("dt", cfg.dt);
  cfg.horizon = s.number("horizon", cfg.horizon);
  cfg.stride = static_cast<Index>(s.integer("stride", cfg.stride));
  if (!(cfg.horizon > 0.0)) { throw ConfigError(s.path_of("horizon") + ": must be positive"); }
  try {
    cfg.validate();
  } catch (Error const &e) {
    throw ConfigError(s.path() + ": " + e.what());
  }
  return cfg;
}

Schedule parse_schedule(Section const &s, Index dimension)
{
  s.allow_only({"growth", "smoothness", "strict_rate"});
  Schedule sched;
  sched.dimension = dimension;
  sched.growth = s.number("growth", sched.growth);
  sched.smoothness = s.number("smoothness", sched.smoothness);
  sched.strict_rate = s.flag("strict_rate", sched.strict_rate);
  try {
    sched.validate();
  } catch (Error const &e) {
    throw ConfigError(s.path() + ": " + e.what());
  }
  return sched;
}

LearnerBounds parse_bounds(Section const &s)
{
  s.allow_only({"inner_radius", "outer_radius", "surface_bound", "density_low", "density_high"});
  LearnerBounds b;
  b.inner_radius = s.number("inner_radius");
  b.outer_radius = s.number("outer_radius");
  b.surface_bound = s.number("surface_bound", b.surface_bound);
  b.density_low = s.number("density_low");
  b.density_high = s.number("density_high");
  try {
    b.validate();
  } catch (Error const &e) {
    throw ConfigError(s.path() + ": " + e.what());
  }
  return b;
}

LepskiConfig parse_lepski(Section const &s)
{
  s.allow_only({"Lambda", "q", "depth", "isotropic", "eval_lower", "eval_upper", "max_lattice_points", "max_work"});
  LepskiConfig cfg;
  cfg.Lambda = s.number("Lambda", cfg.Lambda);
  cfg.q = static_cast<int>(s.integer("q", cfg.q));
  cfg.depth = static_cast<int>(s.integer("depth", cfg.depth));
  cfg.isotropic = s.flag("isotropic", cfg.isotropic);
  if (s.has("eval_lower")) { cfg.eval_lower = s.vector("eval_lower"); }
  if (s.has("eval_upper")) { cfg.eval_upper = s.vector("eval_upper"); }
  cfg.max_lattice_points = s.number("max_lattice_points", cfg.max_lattice_points);
  cfg.max_work = s.number("max_work", cfg.max_work);
  return cfg;
}

KernelSpec parse_kernel(std::string const &name, std::string const &path)
{
  if (name == "biweight") { return KernelSpec::biweight(); }
  if (name == "fourth_order") { return KernelSpec::fourth_order(); }
  throw ConfigError(path + ": expected \"biweight\" or \"fourth_order\"");
}

namespace {

Json vector_json(Vector const &v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

} // namespace

Json to_json(StarPolytope const &poly)
{
  Json dirs = Json::array();
  for (Index i = 0; i < poly.vertex_count(); ++i) { dirs.push_back(vector_json(poly.directions()[i])); }
  return Json{{"dimension", poly.dimension()},
              {"directions", std::move(dirs)},
              {"radii", vector_json(poly.radii())},
              {"volume", poly.volume()},
              {"boundary_measure", poly.boundary_measure()}};
}

StarPolytope polytope_from_json(Json const &j)
{
  Section const s(j, "");
  Index const d = static_cast<Index>(s.integer("dimension"));
  Matrix const rows = s.matrix("directions");
  if (rows.cols() != d) { throw ConfigError("/directions: each direction needs one entry per coordinate"); }
  Vector const radii = s.vector("radii");
  if (radii.size() != rows.rows()) { throw ConfigError("/radii: one radius per direction expected"); }
  return StarPolytope(directions_from_points(rows.transpose()), radii);
}

Json to_json(ObjectiveValue const &value)
{
  return Json{{"J", value.J}, {"bulk", value.bulk}, {"boundary", value.boundary}, {"mass", value.mass}};
}

Json to_json(Episode const &ep)
{
  Json j{{"index", ep.index},
         {"explore_start", ep.explore_start},
         {"nominal_explore_end", ep.nominal_end},
         {"exploit_start", ep.exploit_start},
         {"end", ep.end},
         {"truncated", ep.truncated},
         {"fitted", ep.fitted},
         {"degraded", ep.degraded},
         {"exploration_cost", ep.exploration_cost},
         {"exploitation_cost", ep.exploitation_cost},
         {"exploitation_local_time", ep.exploitation_local_time},
         {"hit_norm", ep.hit_norm},
         {"window_hash", ep.window_hash},
         {"bandwidth", vector_json(ep.bandwidth)},
         {"radii", vector_json(ep.radii)},
         {"plug_in_cost", ep.plug_in_cost},
         {"boundary_measure", ep.boundary_measure},
         {"surface_ok", ep.surface_ok}};
  if (!ep.note.empty()) { j["note"] = ep.note; }
  if (ep.true_cost) { j["true_cost"] = *ep.true_cost; }
  return j;
}

Json to_json(EpisodeLog const &log)
{
  Json episodes = Json::array();
  for (auto const &ep : log.episodes) { episodes.push_back(to_json(ep)); }
  return Json{{"horizon", log.horizon}, {"total_cost", log.total_cost()}, {"episodes", std::move(episodes)}};
}

Json to_json(RegretReport const &report)
{
  return Json{{"horizon", report.horizon},
              {"cumulative_cost", report.cumulative_cost},
              {"reference_cost", report.reference_cost},
              {"average_regret", report.average_regret},
              {"episode_count", report.episode_count}};
}

void write_regret_csv(std::ostream &os, std::vector<std::pair<double, double>> const &curve)
{
  os << "T,regret\n" << std::setprecision(17);
  for (auto const &[T, regret] : curve) { os << T << ',' << regret << '\n'; }
}

PathRecord read_path_csv(std::istream &is, std::string const &origin)
{
  std::string line;
  if (!std::getline(is, line)) { throw ConfigError(origin + ": empty trajectory file"); }
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) { header.push_back(cell); }
  }
  if (header.empty() || header.front() != "t") { throw ConfigError(origin + ":1: first column must be \"t\""); }
  Index d = 0;
  while (static_cast<size_t>(d + 1) < header.size() && header[static_cast<size_t>(d + 1)] == "x_" + std::to_string(d + 1)) {
    ++d;
  }
  if (d == 0) { throw ConfigError(origin + ":1: no x_1.. columns"); }

  PathRecord path;
  path.dimension = d;
  size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) { continue; }
    char const *p = line.data();
    char const *const end = p + line.size();
    auto next = [&](double &out) {
      auto const [ptr, ec] = std::from_chars(p, end, out);
      if (ec != std::errc()) { throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected a number"); }
      p = ptr;
      if (p < end && *p == ',') { ++p; }
    };
    double t = 0.0;
    next(t);
    Vector x(d);
    for (Index k = 0; k < d; ++k) { next(x(k)); }
    if (!path.times.empty() && !(t > path.times.back())) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": times must increase");
    }
    path.times.push_back(t);
    path.states.push_back(std::move(x));
  }
  if (path.times.size() < 2) { throw ConfigError(origin + ": need at least two recorded states"); }
  path.local_time.assign(path.times.size(), 0.0);
  path.running_cost.assign(path.times.size(), 0.0);
  path.start_time = path.times.front();
  path.end_time = path.times.back();
  path.final_state = path.states.back();
  return path;
}

std::string config_hash(Json const &config)
{
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

Json RunManifest::to_json() const
{
  return Json{{"subcommand", subcommand}, {"config_path", config_path}, {"config_hash", config_hash},
              {"seed", seed},             {"output_dir", output_dir},   {"version", version},
              {"threads", threads}};
}

void write_json_file(std::filesystem::path const &file, Json const &j)
{
  std::ofstream out(file);
  if (!out) { throw ConfigError(file.string() + ": cannot write"); }
  out << j.dump(2) << '\n';
}

void write_manifest(std::filesystem::path const &dir, RunManifest const &manifest)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) { throw ConfigError(dir.string() + ": cannot create output directory (" + ec.message() + ")"); }
  auto const file = dir / "manifest.json";
  if (std::filesystem::exists(file)) {
    Json const previous = read_json_file(file);
    if (!previous.contains("config_hash") || previous["config_hash"] != manifest.config_hash) {
      throw ConfigError(file.string() + ": config hash mismatch with the existing run in this directory");
    }
  }
  write_json_file(file, manifest.to_json());
}

char const *version() { return REFLECTOPT_VERSION; }

} // namespace reflectopt::io
