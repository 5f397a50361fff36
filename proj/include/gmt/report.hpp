#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gmt/domain.hpp"
#include "gmt/harmonic.hpp"
#include "gmt/metric_cubes.hpp"
#include "gmt/porosity.hpp"
#include "gmt/rectifiability.hpp"
#include "gmt/sawtooth.hpp"
#include "gmt/whitney.hpp"

namespace gmt {

using Json = nlohmann::ordered_json;

/// {"name": ..., "params": {...}} to a gallery domain.
ImplicitDomain domain_from_spec(const Json& spec);

/// [x, y] or [x, y, z].
Point point_from_json(const Json& j);
Json point_to_json(const Point& p, int dim);
/// "x,y[,z]".
Point parse_point(const std::string& s);
/// "a,b,c".
std::vector<double> parse_list(const std::string& s);

/// Set oracle for WoS: {"type": "ball", "center", "radius"}, {"type": "box", "lo", "hi"},
/// {"type": "arc", "center", "a0", "a1"} or {"type": "cloud", "points", "radius"}.
BoundarySet set_from_spec(const Json& spec);

// Artifact formats. CSV artifacts start with a "# seed=<n>" line when a seed is given.

Json forest_json(const WhitneyForest& forest);
Json tree_json(const CubeTree& tree);
CubeTree tree_from_json(const Json& j, const PointCloud& sigma);
Json refinement_json(const RefinementResult& r);
Json sawtooth_json(const SawtoothDomain& saw);
Json estimate_json(const WoSEstimate& e);
std::string carleson_csv(const CarlesonReport& rep);
std::string sums_csv(const BoundarySumSweep& sweep, int dim);
std::string beta_csv(const std::vector<BetaRecord>& rows, int dim);
std::string scatter_csv(const AinftyScatter& scatter, int dim);
std::string cloud_csv(const PointCloud& cloud, const DiscreteMeasure* measure = nullptr);

std::string sha256_hex(std::string_view bytes);

enum class Verdict { pass, fail, indeterminate };
std::string to_string(Verdict v);

struct StageResult {
  std::string name;
  Verdict verdict = Verdict::pass;
  Json summary = Json::object();
  std::string diagnostics;
};

/// Normalised configuration: `raw` holds every field with defaults filled in
/// and referenced CSV files inlined, so it alone reproduces a run.
struct PipelineConfig {
  std::string pipeline;  // main-theorem, in-and-out or verify-nta
  std::uint64_t seed = 1;
  std::string out_dir;
  bool emit_plots = false;
  Json raw = Json::object();
  Json inputs = Json::array();  // {path, sha256} of inlined files
};

/// Validates and normalises; a manifest (object with a "config" key) is accepted
/// in place of a config. Relative file paths resolve against base_dir.
PipelineConfig parse_config(const Json& j, const std::string& base_dir = ".");
PipelineConfig load_config(const std::string& path);

struct Artifact {
  std::string name;  // relative path inside the bundle
  std::string content;
  std::string sha256;
};

struct ReportBundle {
  std::string pipeline;
  std::vector<StageResult> stages;
  std::vector<Artifact> artifacts;  // in creation order
  Verdict overall = Verdict::pass;
  double wall_clock = 0;
  std::string bundle_sha256;  // over the artifact names and hashes
  Json manifest;
};

/// Runs the stages in order; a failing stage ends the run (indeterminate stages
/// do not). The bundle is returned in memory; see write_bundle.
ReportBundle run_pipeline(const PipelineConfig& cfg);

/// Writes the artifacts, summary.json and manifest.json under dir.
void write_bundle(const ReportBundle& bundle, const std::string& dir);

}  // namespace gmt
