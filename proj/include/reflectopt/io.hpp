#pragma once

#include "learner.hpp"

#include <json.hpp>

#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <string>

namespace reflectopt::io {

using Json = nlohmann::json;

// Read-only view of a JSON object. Every failure is a ConfigError naming the
// JSON path of the offending entry.
class Section
{
public:
  Section(Json const &node, std::string path);

  std::string const &path() const { return path_; }
  std::string path_of(std::string const &key) const { return path_ + "/" + key; }
  bool has(std::string const &key) const { return node_->contains(key); }

  double number(std::string const &key) const;
  double number(std::string const &key, double fallback) const;
  long long integer(std::string const &key) const;
  long long integer(std::string const &key, long long fallback) const;
  bool flag(std::string const &key, bool fallback) const;
  std::string text(std::string const &key) const;
  std::string text(std::string const &key, std::string const &fallback) const;
  Vector vector(std::string const &key) const;
  Matrix matrix(std::string const &key) const; // array of rows
  std::vector<double> numbers(std::string const &key) const;

  Section child(std::string const &key) const;
  std::optional<Section> optional_child(std::string const &key) const;

  // Rejects keys outside the list, so that typos surface as errors.
  void allow_only(std::initializer_list<char const *> keys) const;

private:
  Json const &at(std::string const &key) const;

  Json const *node_;
  std::string path_;
};

// Parses a file; syntax errors report line and column.
Json read_json_file(std::filesystem::path const &file);
Json parse_json(std::string const &text, std::string const &origin);

Potential parse_potential(Section const &s, Index dimension);
CostModel parse_cost(Section const &s, Index dimension);
SphereDirections parse_directions(Section const &s, Index dimension);
OptimizerConfig parse_optimizer(Section const &s, Index vertex_count);
SimConfig parse_simulation(Section const &s);
Schedule parse_schedule(Section const &s, Index dimension);
LearnerBounds parse_bounds(Section const &s);
LepskiConfig parse_lepski(Section const &s);
KernelSpec parse_kernel(std::string const &name, std::string const &path);

Json to_json(StarPolytope const &poly);
StarPolytope polytope_from_json(Json const &j);
Json to_json(ObjectiveValue const &value);
Json to_json(Episode const &episode);
Json to_json(EpisodeLog const &log);
Json to_json(RegretReport const &report);

void write_regret_csv(std::ostream &os, std::vector<std::pair<double, double>> const &curve);

// Columns t,x_1..x_d (further columns are ignored), as written by PathRecord::write_csv.
PathRecord read_path_csv(std::istream &is, std::string const &origin);

// 64-bit FNV-1a of the compact dump (object keys sorted), as 16 hex digits.
std::string config_hash(Json const &config);

struct RunManifest
{
  std::string subcommand;
  std::string config_path;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::string version;
  int threads = 1;

  Json to_json() const;
};

// Writes manifest.json into the output directory (created if needed). An
// existing manifest with a different config hash aborts with ConfigError.
void write_manifest(std::filesystem::path const &dir, RunManifest const &manifest);

void write_json_file(std::filesystem::path const &file, Json const &j);

char const *version();

} // namespace reflectopt::io
