#include <doctest.h>

#include "reflectopt/cli.hpp"
#include "reflectopt/io.hpp"

#include <fstream>
#include <sstream>

using namespace reflectopt;
using io::Json;

namespace fs = std::filesystem;

namespace {

fs::path const source_dir = REFLECTOPT_SOURCE_DIR;

// Fresh scratch directory per call, removed by the destructor.
struct ScratchDir
{
  fs::path path;

  explicit ScratchDir(std::string const &name)
    : path(fs::temp_directory_path() / ("reflectopt_test_" + name))
  {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
};

int run(std::vector<std::string> const &args, std::string *err_text = nullptr)
{
  std::ostringstream out, err;
  int const code = run_cli(args, out, err);
  if (err_text) { *err_text = err.str(); }
  return code;
}

Json load(fs::path const &file) { return io::read_json_file(file); }

fs::path write_config(fs::path const &dir, std::string const &name, Json const &j)
{
  fs::path const file = dir / name;
  io::write_json_file(file, j);
  return file;
}

std::string slurp(fs::path const &file)
{
  std::ifstream in(file);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("section reports the offending path")
{
  Json const j = Json::parse(R"({"a": {"b": "x", "c": [1, 2], "m": [[1, 2], [3]]}})");
  io::Section const root(j, "");
  io::Section const a = root.child("a");
  CHECK(a.path() == "/a");
  CHECK(a.vector("c").size() == 2);
  CHECK_THROWS_WITH_AS(a.number("b"), "/a/b: expected a number", ConfigError);
  CHECK_THROWS_WITH_AS(a.number("missing"), "/a/missing: required entry is missing", ConfigError);
  CHECK_THROWS_WITH_AS(a.allow_only({"b", "c"}), "/a/m: unknown entry", ConfigError);
  CHECK_THROWS_AS(a.matrix("m"), ConfigError);
  CHECK(a.number("missing", 4.5) == 4.5);
}

TEST_CASE("malformed JSON carries line and column")
{
  std::string const text = "{\n  \"a\": 1,\n  \"b\": ]\n}";
  try {
    io::parse_json(text, "cfg.json");
    FAIL("expected a ConfigError");
  } catch (ConfigError const &e) {
    CHECK(std::string(e.what()).rfind("cfg.json:3:8:", 0) == 0);
  }
}

TEST_CASE("model sections")
{
  Json const j = Json::parse(R"({
    "ou": {"kind": "quadratic", "inverse_of": [[1.0, 0.9], [0.9, 1.0]]},
    "skew": {"kind": "weighted_norm", "weights": [1, 5], "kappa": 1},
    "bad": {"kind": "cubic"},
    "dirs": {"count": 12}
  })");
  io::Section const s(j, "");
  Potential const ou = io::parse_potential(s.child("ou"), 2);
  Matrix sigma(2, 2);
  sigma << 1.0, 0.9, 0.9, 1.0;
  CHECK((ou.matrix() * sigma - Matrix::Identity(2, 2)).norm() < 1e-12);
  CostModel const skew = io::parse_cost(s.child("skew"), 2);
  CHECK(skew(Eigen::Vector2d(1.0, 1.0)) == doctest::Approx(std::sqrt(6.0)));
  CHECK_THROWS_AS(io::parse_potential(s.child("bad"), 2), ConfigError);
  CHECK_THROWS_AS(io::parse_cost(s.child("skew"), 3), ConfigError);
  CHECK(io::parse_directions(s.child("dirs"), 2).size() == 12);
}

TEST_CASE("polytope and path files round-trip")
{
  StarPolytope const poly(make_directions(3, 20), Vector::LinSpaced(20, 1.0, 2.0));
  StarPolytope const back = io::polytope_from_json(Json::parse(io::to_json(poly).dump()));
  CHECK(back.radii() == poly.radii());
  CHECK(back.directions().points.isApprox(poly.directions().points, 1e-15));
  CHECK(back.volume() == doctest::Approx(poly.volume()).epsilon(1e-12));

  SimConfig cfg;
  cfg.dt = 1e-2;
  cfg.horizon = 2.0;
  cfg.stride = 7;
  PathRecord const path = simulate_free(Potential::quadratic(Matrix::Identity(2, 2)), Vector::Zero(2), cfg);
  std::stringstream ss;
  path.write_csv(ss);
  PathRecord const read = io::read_path_csv(ss, "mem");
  REQUIRE(read.times.size() == path.times.size());
  CHECK(read.end_time == path.end_time);
  for (size_t k = 0; k < path.states.size(); ++k) { CHECK(read.states[k] == path.states[k]); }

  std::stringstream broken("t,x_1\n0,1\n0.5,abc\n");
  CHECK_THROWS_WITH_AS(io::read_path_csv(broken, "p.csv"), "p.csv:3: expected a number", ConfigError);
}

TEST_CASE("config hash ignores key order")
{
  Json const a = Json::parse(R"({"x": 1, "y": [1, 2]})");
  Json const b = Json::parse(R"({"y": [1, 2], "x": 1})");
  Json const c = Json::parse(R"({"y": [1, 2], "x": 2})");
  CHECK(io::config_hash(a) == io::config_hash(b));
  CHECK(io::config_hash(a) != io::config_hash(c));
  CHECK(io::config_hash(a).size() == 16);
}

TEST_CASE("optimize writes its artifacts and reruns bit for bit")
{
  ScratchDir const dir("optimize");
  std::string const config = (source_dir / "configs/brownian_norm_kappa1.json").string();
  fs::path const out = dir.path / "run";
  REQUIRE(run({"optimize", "--config", config, "--out", out.string()}) == ExitOk);
  Json const summary = load(out / "summary.json");
  CHECK(summary["fitted_radius"].get<double>() == doctest::Approx(std::sqrt(3.0)).epsilon(0.01));
  CHECK(summary["converged"].get<bool>());
  Json const manifest = load(out / "manifest.json");
  CHECK(manifest["subcommand"] == "optimize");
  CHECK(manifest["seed"] == 0);
  CHECK(fs::exists(out / "trace.csv"));
  std::string const first = slurp(out / "polytope.json");

  REQUIRE(run({"optimize", "--config", config, "--out", out.string()}) == ExitOk);
  CHECK(slurp(out / "polytope.json") == first);

  std::string err;
  CHECK(run({"optimize", "--config", config, "--out", out.string(), "--seed", "9"}, &err) == ExitConfig);
  CHECK(err.find("config hash mismatch") != std::string::npos);
}

TEST_CASE("kappa sweep follows the square-root law")
{
  ScratchDir const dir("sweep");
  std::string const config = (source_dir / "configs/kappa_sweep.json").string();
  REQUIRE(run({"optimize", "--config", config, "--out", dir.path.string()}) == ExitOk);
  for (auto const &row : load(dir.path / "summary.json")["sweep"]) {
    double const kappa = row["kappa"].get<double>();
    CAPTURE(kappa);
    CHECK(row["fitted_radius"].get<double>() == doctest::Approx(std::sqrt(3.0 * kappa)).epsilon(0.02));
  }
}

TEST_CASE("exit codes")
{
  ScratchDir const dir("exits");
  std::string err;

  std::ofstream(dir.path / "broken.json") << "{\n  \"model\": {,\n}\n";
  CHECK(run({"optimize", "--config", (dir.path / "broken.json").string(), "--out", (dir.path / "a").string()}, &err) ==
        ExitConfig);
  CHECK(err.find("broken.json:2:13") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path / "a"));

  CHECK(run({"optimize", "--out", (dir.path / "b").string()}) == ExitConfig);
  CHECK(run({"optimize", "--config", (dir.path / "none.json").string(), "--out", (dir.path / "b").string()}) ==
        ExitConfig);

  Json table = load(source_dir / "configs/table1_bm_norm.json");
  table["simulation"]["horizon"] = 0.0;
  CHECK(run({"simulate", "--config", write_config(dir.path, "zero.json", table).string(), "--out",
             (dir.path / "c").string()},
            &err) == ExitConfig);
  CHECK(err.find("/simulation/horizon") != std::string::npos);

  Json estimate = load(source_dir / "configs/ou_estimate.json");
  estimate["estimate"]["trajectory"] = "missing.csv";
  CHECK(run({"estimate", "--config", write_config(dir.path, "traj.json", estimate).string(), "--out",
             (dir.path / "d").string()}) == ExitConfig);

  estimate = load(source_dir / "configs/ou_estimate.json");
  estimate["model"]["potential"]["scale"] = 1e5;
  estimate["estimate"]["horizons"] = Json::array({5.0});
  CHECK(run({"estimate", "--config", write_config(dir.path, "stiff.json", estimate).string(), "--out",
             (dir.path / "e").string()}) == ExitNumeric);

  Json learn = load(source_dir / "configs/ou_learn.json");
  learn["learn"]["horizon"] = 100.0;
  learn["learn"]["checkpoints"] = Json::array({100.0});
  learn["learn"]["hit_cap"] = 0.01;
  learn["simulation"]["initial_state"] = Json::array({50.0, 50.0});
  CHECK(run({"learn", "--config", write_config(dir.path, "cap.json", learn).string(), "--out",
             (dir.path / "f").string()}) == ExitTimeout);

  Json typo = load(source_dir / "configs/brownian_norm_kappa1.json");
  typo["optimizer"]["max_iter"] = 10;
  CHECK(run({"optimize", "--config", write_config(dir.path, "typo.json", typo).string(), "--out",
             (dir.path / "g").string()},
            &err) == ExitConfig);
  CHECK(err.find("/optimizer/max_iter: unknown entry") != std::string::npos);
}

TEST_CASE("learn with a horizon inside the first exploration")
{
  ScratchDir const dir("learn");
  Json learn = load(source_dir / "configs/ou_learn.json");
  learn["learn"]["horizon"] = 1.5;
  learn["learn"]["checkpoints"] = Json::array({0.5, 1.5});
  fs::path const out = dir.path / "run";
  REQUIRE(run({"learn", "--config", write_config(dir.path, "short.json", learn).string(), "--out", out.string(),
               "--seed", "3"}) == ExitOk);
  Json const log = load(out / "episodes.json");
  REQUIRE(log["episodes"].size() == 1);
  Json const &ep = log["episodes"][0];
  CHECK(ep["truncated"].get<bool>());
  CHECK(ep["exploitation_cost"].get<double>() == 0.0);
  double const reference = log["report"]["reference_cost"].get<double>();
  CHECK(log["report"]["average_regret"].get<double>() ==
        doctest::Approx(ep["exploration_cost"].get<double>() / 1.5 - reference));
  CHECK(slurp(out / "regret.csv").rfind("T,regret\n0.5,", 0) == 0);
  CHECK(load(out / "manifest.json")["seed"] == 3);
}

TEST_CASE("estimate from a recorded trajectory")
{
  ScratchDir const dir("estimate");
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 60.0;
  cfg.stride = 10;
  cfg.seed = 2;
  PathRecord const path = simulate_free(Potential::quadratic(Matrix::Identity(2, 2) / 10.0), Vector::Zero(2), cfg);
  std::ofstream(dir.path / "path.csv") << [&] {
    std::ostringstream os;
    path.write_csv(os);
    return os.str();
  }();
  Json estimate = load(source_dir / "configs/ou_estimate.json");
  estimate["estimate"].erase("horizons");
  estimate["estimate"]["trajectory"] = "path.csv";
  estimate["estimate"]["lattice"]["points_per_axis"] = 11;
  fs::path const out = dir.path / "run";
  REQUIRE(run({"estimate", "--config", write_config(dir.path, "est.json", estimate).string(), "--out",
               out.string()}) == ExitOk);
  Json const summary = load(out / "summary.json");
  double const excess = summary["runs"][0]["excess"].get<double>();
  CHECK(excess >= -1e-9);
  CHECK(excess < 0.2);
  CHECK(summary["runs"][0]["bandwidth"][0].get<double>() == doctest::Approx(1.0 / std::sqrt(60.0)).epsilon(1e-6));
  std::string const lattice = slurp(out / "density.csv");
  CHECK(std::count(lattice.begin(), lattice.end(), '\n') == 1 + 11 * 11);
  CHECK(fs::exists(out / "polytope.json"));
}
