#include "reflectopt/cli.hpp"
#include "reflectopt/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace reflectopt {

namespace {

namespace fs = std::filesystem;
using io::Json;
using io::Section;

struct RunContext
{
  std::string subcommand;
  fs::path config_path;
  fs::path out_dir;
  std::optional<std::uint64_t> seed_flag;
  int threads = 1;
  std::ostream *log = nullptr;
};

// Parsed pieces shared by the subcommands.
struct Model
{
  Index dimension = 0;
  std::optional<Potential> potential;
  CostModel cost = CostModel::zero(1, 0.0);
  std::optional<SphereDirections> directions;
};

Model parse_model(Section const &root, bool potential_required)
{
  Section const m = root.child("model");
  m.allow_only({"dimension", "potential", "cost"});
  Model model;
  long long const d = m.integer("dimension");
  if (d < 2 || d > 6) { throw ConfigError(m.path_of("dimension") + ": expected 2..6"); }
  model.dimension = static_cast<Index>(d);
  if (m.has("potential")) {
    model.potential = io::parse_potential(m.child("potential"), model.dimension);
  } else if (potential_required) {
    throw ConfigError(m.path_of("potential") + ": required entry is missing");
  }
  model.cost = io::parse_cost(m.child("cost"), model.dimension);
  if (root.has("directions")) { model.directions = io::parse_directions(root.child("directions"), model.dimension); }
  return model;
}

SphereDirections const &require_directions(Model const &model, Section const &root)
{
  if (!model.directions) { throw ConfigError(root.path_of("directions") + ": required entry is missing"); }
  return *model.directions;
}

OptimizerConfig optimizer_config(Section const &root, Index vertex_count, int threads)
{
  OptimizerConfig cfg = root.has("optimizer") ? io::parse_optimizer(root.child("optimizer"), vertex_count)
                                              : OptimizerConfig{};
  cfg.threads = threads;
  return cfg;
}

struct Simulation
{
  SimConfig sim;
  Vector initial_state;
  int replications = 1;
};

Simulation simulation_config(Section const &root, Index dimension, std::uint64_t seed, bool horizon_required)
{
  Section const s = root.child("simulation");
  s.allow_only({"dt", "horizon", "stride", "initial_state", "replications"});
  if (horizon_required && !s.has("horizon")) { throw ConfigError(s.path_of("horizon") + ": required entry is missing"); }
  Simulation out;
  out.sim = io::parse_simulation(s);
  out.sim.seed = seed;
  out.initial_state = s.has("initial_state") ? s.vector("initial_state") : Vector(Vector::Zero(dimension));
  if (out.initial_state.size() != dimension) {
    throw ConfigError(s.path_of("initial_state") + ": length must equal the dimension");
  }
  long long const reps = s.integer("replications", 1);
  if (reps < 1 || reps > 100000) { throw ConfigError(s.path_of("replications") + ": expected a positive count"); }
  out.replications = static_cast<int>(reps);
  return out;
}

void write_text(fs::path const &file, std::string const &text)
{
  std::ofstream out(file);
  if (!out) { throw ConfigError(file.string() + ": cannot write"); }
  out << text;
}

template <typename Writer> void write_stream(fs::path const &file, Writer &&writer)
{
  std::ofstream out(file);
  if (!out) { throw ConfigError(file.string() + ": cannot write"); }
  writer(out);
}

std::string tag(double value)
{
  std::ostringstream os;
  os << value;
  return os.str();
}

Json summarize(OptimizationResult const &r)
{
  Json j = io::to_json(r.value);
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["roundness"] = roundness(r.polytope);
  j["fitted_radius"] = r.polytope.radii().mean();
  j["min_radius"] = r.polytope.radii().minCoeff();
  j["max_radius"] = r.polytope.radii().maxCoeff();
  return j;
}

int cmd_optimize(RunContext const &ctx, Section const &root)
{
  root.allow_only({"version", "description", "seed", "model", "directions", "optimizer", "sweep"});
  Model const model = parse_model(root, true);
  SphereDirections const &dirs = require_directions(model, root);
  OptimizerConfig const cfg = optimizer_config(root, dirs.size(), ctx.threads);

  if (auto const sweep = root.optional_child("sweep")) {
    sweep->allow_only({"kappa"});
    std::vector<double> const kappas = sweep->numbers("kappa");
    if (kappas.empty()) { throw ConfigError(sweep->path_of("kappa") + ": empty sweep"); }
    Json rows = Json::array();
    std::ostringstream csv;
    csv << "kappa,fitted_radius,roundness,J,converged,iterations\n" << std::setprecision(17);
    for (double kappa : kappas) {
      if (!(kappa >= 0.0)) { throw ConfigError(sweep->path_of("kappa") + ": values must be non-negative"); }
      OptimizationResult const r = minimize(*model.potential, model.cost.with_kappa(kappa), dirs, cfg);
      Json row = summarize(r);
      row["kappa"] = kappa;
      csv << kappa << ',' << r.polytope.radii().mean() << ',' << roundness(r.polytope) << ',' << r.value.J << ','
          << (r.converged ? 1 : 0) << ',' << r.iterations << '\n';
      io::write_json_file(ctx.out_dir / ("polytope_kappa_" + tag(kappa) + ".json"), io::to_json(r.polytope));
      *ctx.log << "kappa " << kappa << ": radius " << r.polytope.radii().mean() << ", J " << r.value.J << '\n';
      rows.push_back(std::move(row));
    }
    write_text(ctx.out_dir / "sweep.csv", csv.str());
    io::write_json_file(ctx.out_dir / "summary.json", Json{{"sweep", std::move(rows)}});
    return ExitOk;
  }

  OptimizationResult const r = minimize(*model.potential, model.cost, dirs, cfg);
  io::write_json_file(ctx.out_dir / "polytope.json", io::to_json(r.polytope));
  write_stream(ctx.out_dir / "trace.csv", [&](std::ostream &os) { r.trace.write_csv(os); });
  io::write_json_file(ctx.out_dir / "summary.json", summarize(r));
  *ctx.log << "J " << r.value.J << ", radius " << r.polytope.radii().mean() << (r.converged ? "" : " (not converged)")
           << '\n';
  return ExitOk;
}

StarPolytope simulation_domain(RunContext const &ctx, Section const &root, Model const &model)
{
  if (auto const domain = root.optional_child("domain")) {
    domain->allow_only({"radii", "ball_radius", "polytope"});
    if (domain->has("polytope")) {
      fs::path file = domain->text("polytope");
      if (file.is_relative()) { file = ctx.config_path.parent_path() / file; }
      return io::polytope_from_json(io::read_json_file(file));
    }
    SphereDirections const &dirs = require_directions(model, root);
    if (domain->has("ball_radius")) {
      double const r = domain->number("ball_radius");
      if (!(r > 0.0)) { throw ConfigError(domain->path_of("ball_radius") + ": must be positive"); }
      return StarPolytope(dirs, Vector::Constant(dirs.size(), r));
    }
    Vector const radii = domain->vector("radii");
    if (radii.size() != dirs.size()) { throw ConfigError(domain->path_of("radii") + ": one radius per direction"); }
    return StarPolytope(dirs, radii);
  }
  SphereDirections const &dirs = require_directions(model, root);
  OptimizationResult const r = minimize(*model.potential, model.cost, dirs, optimizer_config(root, dirs.size(), ctx.threads));
  *ctx.log << "optimized domain: J " << r.value.J << (r.converged ? "" : " (not converged)") << '\n';
  return r.polytope;
}

int cmd_simulate(RunContext const &ctx, Section const &root, std::uint64_t seed)
{
  root.allow_only({"version", "description", "seed", "model", "directions", "optimizer", "simulation", "domain"});
  Model const model = parse_model(root, true);
  Simulation const sim = simulation_config(root, model.dimension, seed, true);
  StarPolytope const domain = simulation_domain(ctx, root, model);
  require_dimension(model.dimension, domain.dimension(), "simulate (domain)");
  io::write_json_file(ctx.out_dir / "polytope.json", io::to_json(domain));

  ObjectiveValue const expected =
    evaluate(domain, UnnormalizedDensity::analytic(*model.potential), model.cost, default_rule(), ctx.threads);
  PolytopeProjector const projector(domain);
  Json runs = Json::array();
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < sim.replications; ++k) {
    SimConfig sc = sim.sim;
    sc.seed = seed + static_cast<std::uint64_t>(k);
    PathRecord const path = simulate_reflected(*model.potential, projector, model.cost, sim.initial_state, sc);
    if (k == 0) { write_stream(ctx.out_dir / "path.csv", [&](std::ostream &os) { path.write_csv(os); }); }
    double const realized = path.average_cost();
    sum += realized;
    sum_sq += realized * realized;
    runs.push_back(Json{{"seed", sc.seed},
                        {"realized_average_cost", realized},
                        {"local_time", path.total_local_time},
                        {"running_cost", path.total_running_cost}});
  }
  double const n = sim.replications;
  double const mean = sum / n;
  double const stderr_ = n > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) / n) : 0.0;
  io::write_json_file(ctx.out_dir / "summary.json", Json{{"expected", io::to_json(expected)},
                                                         {"expected_J", expected.J},
                                                         {"realized_average_cost", mean},
                                                         {"realized_stderr", stderr_},
                                                         {"replications", sim.replications},
                                                         {"horizon", sim.sim.horizon},
                                                         {"dt", sim.sim.dt},
                                                         {"runs", std::move(runs)}});
  *ctx.log << "expected J " << expected.J << ", realized " << mean << " +- " << stderr_ << '\n';
  return ExitOk;
}

// Estimation settings shared by the estimate and learn subcommands.
LearnerConfig estimation_config(Section const &s, Model const &model, int threads)
{
  LearnerConfig cfg;
  cfg.schedule.dimension = model.dimension;
  cfg.bandwidth_scale = s.number("bandwidth_scale", cfg.bandwidth_scale);
  cfg.kernel = io::parse_kernel(s.text("kernel", "biweight"), s.path_of("kernel"));
  if (s.has("lepski")) { cfg.lepski = io::parse_lepski(s.child("lepski")); }
  cfg.lepski.threads = threads;
  return cfg;
}

int cmd_estimate(RunContext const &ctx, Section const &root, std::uint64_t seed)
{
  root.allow_only({"version", "description", "seed", "model", "directions", "optimizer", "simulation", "estimate"});
  Section const est = root.child("estimate");
  est.allow_only({"trajectory", "horizons", "replications", "bandwidth_scale", "kernel", "lepski", "density_bounds",
                  "radius_bounds", "lattice"});
  bool const from_file = est.has("trajectory");
  Model const model = parse_model(root, !from_file);
  SphereDirections const &dirs = require_directions(model, root);

  LearnerConfig cfg = estimation_config(est, model, ctx.threads);
  std::vector<double> const density_bounds = est.numbers("density_bounds");
  std::vector<double> const radius_bounds = est.numbers("radius_bounds");
  if (density_bounds.size() != 2) { throw ConfigError(est.path_of("density_bounds") + ": expected [low, high]"); }
  if (radius_bounds.size() != 2) { throw ConfigError(est.path_of("radius_bounds") + ": expected [inner, outer]"); }
  cfg.bounds.density_low = density_bounds[0];
  cfg.bounds.density_high = density_bounds[1];
  cfg.bounds.inner_radius = radius_bounds[0];
  cfg.bounds.outer_radius = radius_bounds[1];
  try {
    cfg.bounds.validate();
  } catch (Error const &e) {
    throw ConfigError(est.path() + ": " + e.what());
  }
  cfg.optimizer = optimizer_config(root, dirs.size(), ctx.threads);

  Index const d = model.dimension;
  Vector lattice_lower = Vector::Constant(d, -cfg.bounds.outer_radius);
  Vector lattice_upper = Vector::Constant(d, cfg.bounds.outer_radius);
  Index lattice_points = d == 2 ? 61 : 21;
  if (auto const lattice = est.optional_child("lattice")) {
    lattice->allow_only({"lower", "upper", "points_per_axis"});
    if (lattice->has("lower")) { lattice_lower = lattice->vector("lower"); }
    if (lattice->has("upper")) { lattice_upper = lattice->vector("upper"); }
    lattice_points = static_cast<Index>(lattice->integer("points_per_axis", lattice_points));
    if (lattice_lower.size() != d || lattice_upper.size() != d || lattice_points < 2) {
      throw ConfigError(lattice->path() + ": bounds need one entry per coordinate and at least 2 points per axis");
    }
  }

  auto const fan = std::make_shared<Fan const>(dirs);
  Vector const start = Vector::Constant(dirs.size(), 0.5 * (cfg.bounds.inner_radius + cfg.bounds.outer_radius));
  std::optional<double> reference;
  std::optional<UnnormalizedDensity> truth;
  if (model.potential) {
    reference = reference_cost(*model.potential, model.cost, dirs, cfg);
    truth = UnnormalizedDensity::analytic(*model.potential);
  }

  std::ostringstream csv;
  csv << "horizon,replication,seed,plug_in_J,true_J,excess\n" << std::setprecision(17);
  Json summary{{"reference_J", reference ? Json(*reference) : Json(nullptr)}};
  Json per_horizon = Json::array();

  // One fit; artifacts are written for the first replication of each horizon.
  auto fit_one = [&](Sample const &window, std::string const &suffix, bool artifacts) {
    DomainFit const fit = fit_domain(window, model.cost, fan, cfg, start);
    Json row{{"bandwidth", std::vector<double>(fit.density.bandwidth().data(),
                                               fit.density.bandwidth().data() + fit.density.bandwidth().size())},
             {"plug_in_J", fit.optimization.value.J},
             {"converged", fit.optimization.converged}};
    if (truth) {
      double const true_J = evaluate(fit.optimization.polytope, *truth, model.cost, default_rule(), ctx.threads).J;
      row["true_J"] = true_J;
      row["excess"] = true_J / *reference - 1.0;
    }
    if (artifacts) {
      io::write_json_file(ctx.out_dir / ("polytope" + suffix + ".json"), io::to_json(fit.optimization.polytope));
      write_stream(ctx.out_dir / ("density" + suffix + ".csv"), [&](std::ostream &os) {
        fit.density.write_lattice_csv(os, lattice_lower, lattice_upper, lattice_points, ctx.threads);
      });
    }
    return row;
  };

  if (from_file) {
    fs::path file = est.text("trajectory");
    if (file.is_relative()) { file = ctx.config_path.parent_path() / file; }
    std::ifstream in(file);
    if (!in) { throw ConfigError(est.path_of("trajectory") + ": cannot open " + file.string()); }
    PathRecord const path = io::read_path_csv(in, file.string());
    require_dimension(d, path.dimension, "estimate (trajectory)");
    Json row = fit_one(Sample::from_path(path), "", true);
    csv << path.duration() << ",0,0," << row["plug_in_J"].get<double>() << ','
        << (row.contains("true_J") ? row["true_J"].get<double>() : NAN) << ','
        << (row.contains("excess") ? row["excess"].get<double>() : NAN) << '\n';
    row["horizon"] = path.duration();
    per_horizon.push_back(std::move(row));
  } else {
    Simulation const sim = simulation_config(root, d, seed, false);
    std::vector<double> const horizons = est.numbers("horizons");
    long long const reps = est.integer("replications", 1);
    if (horizons.empty()) { throw ConfigError(est.path_of("horizons") + ": empty list"); }
    if (reps < 1) { throw ConfigError(est.path_of("replications") + ": expected a positive count"); }
    for (double T : horizons) {
      if (!(T > sim.sim.dt)) { throw ConfigError(est.path_of("horizons") + ": each horizon must exceed dt"); }
      double excess_sum = 0.0;
      for (long long k = 0; k < reps; ++k) {
        SimConfig sc = sim.sim;
        sc.horizon = T;
        sc.seed = seed + static_cast<std::uint64_t>(k);
        PathRecord const path = simulate_free(*model.potential, sim.initial_state, sc);
        Json const row = fit_one(Sample::from_path(path), "_T" + tag(T), k == 0);
        excess_sum += row["excess"].get<double>();
        csv << T << ',' << k << ',' << sc.seed << ',' << row["plug_in_J"].get<double>() << ','
            << row["true_J"].get<double>() << ',' << row["excess"].get<double>() << '\n';
      }
      per_horizon.push_back(Json{{"horizon", T}, {"mean_excess", excess_sum / static_cast<double>(reps)}});
      *ctx.log << "T " << T << ": mean excess " << 100.0 * excess_sum / static_cast<double>(reps) << "%\n";
    }
  }
  summary["runs"] = std::move(per_horizon);
  write_text(ctx.out_dir / "sweep.csv", csv.str());
  io::write_json_file(ctx.out_dir / "summary.json", summary);
  return ExitOk;
}

int cmd_learn(RunContext const &ctx, Section const &root, std::uint64_t seed)
{
  root.allow_only({"version", "description", "seed", "model", "directions", "optimizer", "simulation", "learn"});
  Model const model = parse_model(root, true);
  SphereDirections const &dirs = require_directions(model, root);
  Section const ls = root.child("learn");
  ls.allow_only({"horizon", "schedule", "bounds", "ledger_spacing", "bandwidth_scale", "kernel", "lepski", "hit_cap",
                 "warm_start", "evaluate_true_cost", "checkpoints"});

  LearnerConfig cfg = estimation_config(ls, model, ctx.threads);
  cfg.schedule = ls.has("schedule") ? io::parse_schedule(ls.child("schedule"), model.dimension) : cfg.schedule;
  cfg.bounds = io::parse_bounds(ls.child("bounds"));
  cfg.horizon = ls.number("horizon");
  cfg.ledger_spacing = ls.number("ledger_spacing", cfg.ledger_spacing);
  cfg.hit_cap = ls.number("hit_cap", cfg.hit_cap);
  cfg.warm_start = ls.flag("warm_start", cfg.warm_start);
  cfg.evaluate_true_cost = ls.flag("evaluate_true_cost", cfg.evaluate_true_cost);
  cfg.optimizer = optimizer_config(root, dirs.size(), ctx.threads);
  Simulation const sim = simulation_config(root, model.dimension, seed, false);
  cfg.sim = sim.sim;
  cfg.initial_state = sim.initial_state;
  try {
    cfg.validate(model.dimension);
  } catch (Error const &e) {
    throw ConfigError(ls.path() + ": " + e.what());
  }

  std::vector<double> checkpoints;
  if (ls.has("checkpoints")) {
    checkpoints = ls.numbers("checkpoints");
    for (double T : checkpoints) {
      if (!(T > 0.0) || T > cfg.horizon) {
        throw ConfigError(ls.path_of("checkpoints") + ": checkpoints must lie in (0, horizon]");
      }
    }
  } else {
    for (double T = 10.0; T < cfg.horizon; T *= 10.0) { checkpoints.push_back(T); }
    checkpoints.push_back(cfg.horizon);
  }

  LearnerResult const result = run_episodic(*model.potential, model.cost, dirs, cfg);
  auto const curve = regret_curve(result.log, result.report.reference_cost, checkpoints);
  Json log = io::to_json(result.log);
  log["report"] = io::to_json(result.report);
  io::write_json_file(ctx.out_dir / "episodes.json", log);
  write_stream(ctx.out_dir / "regret.csv", [&](std::ostream &os) { io::write_regret_csv(os, curve); });
  Json summary = io::to_json(result.report);
  summary["realized_episodes"] = result.log.episodes.size();
  summary["degraded_episodes"] = std::count_if(result.log.episodes.begin(), result.log.episodes.end(),
                                               [](Episode const &ep) { return ep.degraded; });
  io::write_json_file(ctx.out_dir / "summary.json", summary);
  *ctx.log << "average regret " << result.report.average_regret << " over " << result.log.episodes.size()
           << " episodes\n";
  return ExitOk;
}

int dispatch(RunContext ctx)
{
  Json config = io::read_json_file(ctx.config_path);
  Section const root(config, "");
  if (root.has("version") && root.integer("version") != 1) {
    throw ConfigError("/version: unsupported config version");
  }
  std::uint64_t seed = 0;
  if (ctx.seed_flag) {
    seed = *ctx.seed_flag;
  } else if (root.has("seed")) {
    long long const s = root.integer("seed");
    if (s < 0) { throw ConfigError("/seed: must be non-negative"); }
    seed = static_cast<std::uint64_t>(s);
  }
  config["seed"] = seed;

  io::RunManifest manifest;
  manifest.subcommand = ctx.subcommand;
  manifest.config_path = ctx.config_path.string();
  manifest.config_hash = io::config_hash(Json{{"subcommand", ctx.subcommand}, {"config", config}});
  manifest.seed = seed;
  manifest.output_dir = ctx.out_dir.string();
  manifest.version = io::version();
  manifest.threads = ctx.threads;
  io::write_manifest(ctx.out_dir, manifest);

  Section const resolved(config, "");
  if (ctx.subcommand == "optimize") { return cmd_optimize(ctx, resolved); }
  if (ctx.subcommand == "simulate") { return cmd_simulate(ctx, resolved, seed); }
  if (ctx.subcommand == "estimate") { return cmd_estimate(ctx, resolved, seed); }
  return cmd_learn(ctx, resolved, seed);
}

} // namespace

int run_cli(std::vector<std::string> const &args, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Shape optimization of reflecting domains for Langevin diffusions", "reflectopt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::version());

  RunContext ctx;
  ctx.log = &out;
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  struct Command
  {
    char const *name;
    char const *help;
  };
  for (auto const &[name, help] : {Command{"optimize", "fit an optimal star polytope"},
                                   Command{"simulate", "reflected simulation in a fixed or optimized domain"},
                                   Command{"estimate", "kernel estimate of the invariant density and plug-in shape"},
                                   Command{"learn", "episodic exploration and exploitation"}}) {
    CLI::App *sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "configuration JSON")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "seed; overrides the config")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e, out, err);
    return code == 0 ? ExitOk : ExitConfig;
  }

  for (CLI::App const *sub : app.get_subcommands()) {
    ctx.subcommand = sub->get_name();
    if (sub->count("--seed") > 0) { ctx.seed_flag = seed; }
  }
  ctx.config_path = config_path;
  ctx.out_dir = out_dir;
  ctx.threads = threads;

  try {
    return dispatch(ctx);
  } catch (ConfigError const &e) {
    err << "config error: " << e.what() << '\n';
    return ExitConfig;
  } catch (ArgumentError const &e) {
    err << "invalid input: " << e.what() << '\n';
    return ExitConfig;
  } catch (TimeoutError const &e) {
    err << "timeout: " << e.what() << '\n';
    return ExitTimeout;
  } catch (Error const &e) {
    err << "numeric or simulation failure: " << e.what() << '\n';
    return ExitNumeric;
  } catch (std::exception const &e) {
    err << "unexpected failure: " << e.what() << '\n';
    return ExitUnexpected;
  }
}

} // namespace reflectopt
