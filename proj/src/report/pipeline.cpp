#include <openssl/opensslv.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gmt/report.hpp"
#include "gmt/sampling.hpp"

namespace gmt {

namespace fs = std::filesystem;

namespace {

const char* kVersion = "0.1.0";

// Fills keys missing from `target` (recursively for objects).
void fill_defaults(Json& target, const Json& defaults) {
  for (const auto& [k, v] : defaults.items()) {
    if (!target.contains(k) || target[k].is_null())
      target[k] = v;
    else if (v.is_object() && target[k].is_object())
      fill_defaults(target[k], v);
  }
}

void reject_unknown(const Json& j, const Json& known, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw InputError("unknown key '" + k + "' in " + where);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Json cloud_points_json(const PointCloud& cloud) {
  Json pts = Json::array();
  for (const auto& p : cloud.points) pts.push_back(point_to_json(p, cloud.dim));
  return pts;
}

PointCloud cloud_from_points(const Json& pts, int dim, double mesh) {
  PointCloud c;
  c.dim = dim;
  c.mesh = mesh;
  for (const auto& p : pts) c.points.push_back(point_from_json(p));
  return c;
}

// Replaces a csv reference by its points and records the file.
Json inline_csv(const std::string& path, const std::string& base_dir, Json& inputs) {
  fs::path p = fs::path(path).is_absolute() ? fs::path(path) : fs::path(base_dir) / path;
  std::string bytes = read_file(p.string());
  std::istringstream in(bytes);
  auto file = read_cloud_csv(in);
  inputs.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}});
  return cloud_points_json(file.cloud);
}

Json main_defaults(double h) {
  return {{"E", {{"type", "all"}}},
          {"cubes", {{"c0", 0.25}, {"depth", 5}}},
          {"porosity", {{"M", 2.0}, {"delta", 0.05}, {"tau", 0.1}, {"t", 0.01}}},
          {"sawtooth",
           {{"C0", 7.0}, {"C_tilde", 8}, {"lambda", 1.125}, {"K", 12.0}, {"r0", 1.0}, {"outer_half_width", 2.0}}},
          {"checks",
           {{"sandwich_points", 100000},
            {"sum_centres", 20},
            {"sum_radii", 8},
            {"regularity_centres", 32},
            {"regularity_radii", 6}}},
          {"wos",
           {{"walks", 100000},
            {"eps_shell", 1e-6},
            {"test_sets", 10},
            {"ainfty_centres", 5},
            {"ainfty_radii", Json::array({0.25, 0.125})},
            {"level_span", 3},
            {"epsilons", Json::array({0.5, 0.2, 0.1})}}},
          {"h", h}};
}

Point default_xi0(const Json& E, int dim) {
  std::string type = E.value("type", "all");
  if (type == "box") return 0.5 * (point_from_json(E.at("lo")) + point_from_json(E.at("hi")));
  if (type == "ball") return point_from_json(E.at("center"));
  if (type == "points" && !E.at("points").empty()) return point_from_json(E["points"][0]);
  (void)dim;
  return {0, 0, 0};
}

void normalise_E(Json& E, const std::string& base_dir, Json& inputs) {
  std::string type = E.value("type", "");
  if (type == "csv") {
    E = {{"type", "points"}, {"points", inline_csv(E.at("path").get<std::string>(), base_dir, inputs)}};
  } else if (type != "all" && type != "box" && type != "ball" && type != "points") {
    throw InputError("E type must be all, box, ball, points or csv");
  }
}

void normalise_main(Json& c, int dim, const std::string& base_dir, Json& inputs) {
  fill_defaults(c, main_defaults(std::ldexp(1.0, -8)));
  normalise_E(c["E"], base_dir, inputs);
  auto& s = c["sawtooth"];
  if (!s.contains("xi0")) s["xi0"] = point_to_json(default_xi0(c["E"], dim), dim);
  if (!c.contains("region"))
    c["region"] = {{"center", s["xi0"]}, {"radius", 2 * s["r0"].get<double>()}};
  if (!(c["h"].get<double>() > 0)) throw InputError("h must be positive");
}

}  // namespace

PipelineConfig parse_config(const Json& j_in, const std::string& base_dir) {
  Json j = j_in;
  if (j.is_object() && j.contains("config") && j["config"].is_object()) j = j["config"];
  if (!j.is_object()) throw InputError("config must be a JSON object");
  static const Json known = {{"pipeline", 0}, {"seed", 0},   {"emit_plots", 0}, {"out", 0},      {"domain", 0},
                             {"h", 0},        {"region", 0}, {"E", 0},          {"cubes", 0},    {"porosity", 0},
                             {"sawtooth", 0}, {"checks", 0}, {"wos", 0},        {"input", 0},    {"beta", 0},
                             {"nta", 0}};
  reject_unknown(j, known, "config");

  PipelineConfig cfg;
  cfg.pipeline = j.value("pipeline", "");
  if (cfg.pipeline != "main-theorem" && cfg.pipeline != "in-and-out" && cfg.pipeline != "verify-nta")
    throw InputError("pipeline must be main-theorem, in-and-out or verify-nta");
  if (j.contains("seed")) {
    const auto& s = j["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw InputError("seed must be a non-negative integer");
  }
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.emit_plots = j.value("emit_plots", false);
  cfg.out_dir = j.value("out", "");

  Json c = j;
  c.erase("out");
  c["seed"] = cfg.seed;
  c["emit_plots"] = cfg.emit_plots;

  int dim = 2;
  if (c.contains("domain")) dim = domain_from_spec(c["domain"]).dim;

  if (cfg.pipeline == "main-theorem") {
    if (!c.contains("domain")) throw InputError("main-theorem needs a domain");
    normalise_main(c, dim, base_dir, cfg.inputs);
  } else if (cfg.pipeline == "in-and-out") {
    if (!c.contains("input")) c["input"] = {{"type", "gallery"}};
    auto& in = c["input"];
    std::string type = in.value("type", "");
    if (type == "csv") {
      Json levels = Json::array();
      for (const auto& p : in.at("paths")) levels.push_back(inline_csv(p.get<std::string>(), base_dir, cfg.inputs));
      in = {{"type", "points"}, {"levels", levels}};
      type = "points";
    }
    if (type == "gallery") {
      if (!c.contains("domain")) throw InputError("gallery input needs a domain");
      normalise_main(c, dim, base_dir, cfg.inputs);
      const auto& s = c["sawtooth"];
      fill_defaults(c, {{"beta", {{"epsilon", 0.3}, {"J", 6}, {"levels_per_refinement", 1}, {"r0", s["r0"]},
                                  {"xi0", s["xi0"]}}}});
    } else if (type == "cantor") {
      int g = in.value("generations", 3);
      in["generations"] = g;
      if (g < 1 || g > 8) throw InputError("cantor generations must lie in [1, 8]");
      fill_defaults(c, {{"beta", {{"epsilon", 0.3}, {"J", 2 * g - 2}, {"levels_per_refinement", 2}, {"r0", 0.75},
                                  {"xi0", Json::array({0.5, 0.5})}}}});
    } else if (type == "points") {
      if (!in.contains("levels") || in["levels"].size() < 2) throw InputError("points input needs at least two levels");
      fill_defaults(c, {{"beta", {{"epsilon", 0.3}, {"J", 6}, {"levels_per_refinement", 1}, {"r0", 1.0},
                                  {"xi0", Json::array({0, 0})}}}});
    } else {
      throw InputError("input type must be gallery, cantor, points or csv");
    }
    fill_defaults(c["beta"], {{"refinements", 3}, {"growth_tol", 0.25}});
  } else {
    if (!c.contains("domain")) throw InputError("verify-nta needs a domain");
    auto dom = domain_from_spec(c["domain"]);
    fill_defaults(c, {{"h", std::ldexp(1.0, -8)},
                      {"nta", {{"radii", Json::array({0.5, 0.25, 0.125, 0.0625})},
                               {"centres", 16},
                               {"C", 4.0},
                               {"K", 3.0},
                               {"pairs", 200},
                               {"A", 8.0},
                               {"B", 4.0}}}});
    if (!c.contains("region")) {
      Point ctr = dom.bbox.center();
      double r = 0;
      for (int k = 0; k < dim; ++k) r = std::max(r, 0.5 * (dom.bbox.hi[k] - dom.bbox.lo[k]));
      c["region"] = {{"center", point_to_json(ctr, dim)}, {"radius", std::min(r, 2.0)}};
    }
  }
  cfg.raw = std::move(c);
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  auto dir = fs::path(path).parent_path();
  return parse_config(j, dir.empty() ? "." : dir.string());
}

namespace {

using Clock = std::chrono::steady_clock;

struct Run {
  const PipelineConfig& cfg;
  const Json& c;
  ReportBundle b;
  Json stage_seconds = Json::object();

  // State shared between stages.
  ImplicitDomain domain;
  int D = 2;
  double h = 0;
  PointCloud cloud;
  DiscreteMeasure mu;
  IndexSet E;
  CubeTree tree;
  double beta0 = NAN;
  PointCloud Eprime;
  std::shared_ptr<SawtoothDomain> inner, outer;

  Run(const PipelineConfig& cfg_) : cfg(cfg_), c(cfg_.raw) {}

  void add(const std::string& name, std::string content) {
    Artifact a{name, std::move(content), {}};
    a.sha256 = sha256_hex(a.content);
    b.artifacts.push_back(std::move(a));
  }
  void add_json(const std::string& name, const Json& payload) {
    Json out = {{"seed", cfg.seed}};
    if (payload.is_object())
      for (const auto& [k, v] : payload.items()) out[k] = v;
    else
      out["data"] = payload;
    add(name, out.dump(2) + "\n");
  }
  void add_csv(const std::string& name, const std::string& body) {
    add(name, "# seed=" + std::to_string(cfg.seed) + "\n" + body);
  }

  // Runs one stage; returns false when the pipeline must stop.
  template <class F>
  bool stage(const std::string& name, F&& body) {
    auto t0 = Clock::now();
    StageResult r;
    r.name = name;
    try {
      body(r);
    } catch (const std::exception& e) {
      r.verdict = Verdict::fail;
      r.diagnostics = std::string("error: ") + e.what();
    }
    stage_seconds[name] = std::chrono::duration<double>(Clock::now() - t0).count();
    bool go_on = r.verdict != Verdict::fail;
    b.stages.push_back(std::move(r));
    return go_on;
  }

  std::uint64_t sub_seed(std::uint64_t k) const { return splitmix64(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (k + 1))); }

  Point xi0() const { return point_from_json(c["sawtooth"]["xi0"]); }
  double r0() const { return c["sawtooth"]["r0"].get<double>(); }

  SawtoothParams saw_params() const {
    const auto& s = c["sawtooth"];
    SawtoothParams p;
    p.C0 = s["C0"].get<double>();
    p.C_tilde = s["C_tilde"].get<int>();
    p.lambda = s["lambda"].get<double>();
    p.K = s["K"].get<double>();
    p.r0 = r0();
    p.xi0 = xi0();
    return p;
  }

  // Boundary sample restricted to the region ball, with equal weights.
  void sample_region() {
    domain = domain_from_spec(c["domain"]);
    D = domain.dim;
    h = c["h"].get<double>();
    Point ctr = point_from_json(c["region"]["center"]);
    double R = c["region"]["radius"].get<double>();
    auto s = sample_boundary(domain, h);
    cloud = PointCloud{};
    cloud.dim = D;
    cloud.mesh = h;
    cloud.source = CloudSource::boundary;
    for (const auto& p : s.cloud.points)
      if (dist(p, ctr) <= R) cloud.points.push_back(p);
    mu = uniform_measure(cloud.size());
  }

  IndexSet select_E() const {
    const auto& spec = c["E"];
    std::string type = spec["type"].get<std::string>();
    IndexSet out;
    if (type == "all") return all_indices(cloud.size());
    if (type == "box") {
      Box box{point_from_json(spec["lo"]), point_from_json(spec["hi"])};
      for (std::size_t i = 0; i < cloud.size(); ++i)
        if (box.contains(cloud.points[i])) out.push_back(i);
    } else if (type == "ball") {
      Point ctr = point_from_json(spec["center"]);
      double r = spec["radius"].get<double>();
      for (std::size_t i = 0; i < cloud.size(); ++i)
        if (dist(cloud.points[i], ctr) <= r) out.push_back(i);
    } else {
      PointCloud pts = cloud_from_points(spec["points"], D, h);
      if (pts.empty()) return out;
      KdTree kd(pts.points, D);
      for (std::size_t i = 0; i < cloud.size(); ++i)
        if (kd.nearest(cloud.points[i]).distance <= h) out.push_back(i);
    }
    return out;
  }

  PointCloud sub_cloud(const IndexSet& idx) const {
    PointCloud out;
    out.dim = D;
    out.mesh = h;
    out.source = CloudSource::boundary;
    for (auto i : idx) out.points.push_back(cloud.points[i]);
    return out;
  }

  bool plots() const { return cfg.emit_plots; }

  // ---- main-theorem stages ----

  bool boundary_stage() {
    return stage("boundary", [&](StageResult& r) {
      sample_region();
      E = select_E();
      r.summary = {{"points", cloud.size()}, {"E_points", E.size()}, {"mesh", h}, {"dim", D}};
      if (cloud.empty() || E.empty()) {
        r.verdict = Verdict::fail;
        r.diagnostics = cloud.empty() ? "no boundary points in the region" : "E selects no boundary points";
      }
      add_csv("boundary.csv", cloud_csv(cloud, &mu));
    });
  }

  bool cube_stage() {
    return stage("cube_tree", [&](StageResult& r) {
      tree = build_cube_tree(cloud, c["cubes"]["c0"].get<double>(), c["cubes"]["depth"].get<int>());
      auto rep = verify_cube_axioms(tree);
      r.summary = {{"cubes", tree.cubes().size()},     {"depth", tree.depth()},
                   {"c1_achieved", rep.c1_achieved},   {"partition", rep.partition.pass},
                   {"nesting", rep.nesting.pass},      {"sandwich", rep.sandwich.pass},
                   {"lengths", rep.lengths.pass}};
      if (!rep.all_pass()) {
        r.verdict = Verdict::fail;
        for (const auto* a : {&rep.partition, &rep.nesting, &rep.sandwich, &rep.lengths})
          if (!a->pass) r.diagnostics += a->detail + "; ";
      }
      add_json("cube_tree.json", tree_json(tree));
    });
  }

  bool doubling_stage() {
    return stage("doubling", [&](StageResult& r) {
      Point ctr = point_from_json(c["region"]["center"]);
      double R = c["region"]["radius"].get<double>();
      auto prof = estimate_doubling(mu, cloud, Ball(ctr, R / 2), 4 * h, R / 4);
      beta0 = prof.beta0;
      r.summary = {{"C_mu", prof.C_mu}, {"beta0", prof.beta0}, {"r_lo", prof.r_lo}, {"r_hi", prof.r_hi},
                   {"samples", prof.samples}, {"skipped", prof.skipped}};
      if (!std::isfinite(prof.C_mu)) {
        r.verdict = Verdict::fail;
        r.diagnostics = "doubling constant is infinite";
      } else if (prof.samples == 0) {
        r.verdict = Verdict::indeterminate;
        r.diagnostics = "no (centre, radius) pair had positive mass";
      }
      add_json("doubling.json", r.summary);
    });
  }

  bool refinement_stage() {
    return stage("refinement", [&](StageResult& r) {
      const auto& p = c["porosity"];
      PorosityConfig pc;
      pc.M = p["M"].get<double>();
      pc.delta = p["delta"].get<double>();
      pc.tau = p["tau"].get<double>();
      pc.t = p["t"].get<double>();
      pc.beta0 = beta0;
      auto res = refine_set_adaptive(tree, E, mu, pc);
      r.summary = {{"E_prime_points", res.E_prime.size()}, {"T", res.T.size()},        {"P", res.P.size()},
                   {"N", res.N},                           {"C1", res.C1},             {"t_used", res.t_used},
                   {"mass_ratio", res.mass_ratio},         {"max_membership", res.max_membership}};
      if (!res.ok) {
        r.verdict = Verdict::fail;
        r.diagnostics = res.diagnostics;
      }
      Eprime = sub_cloud(res.E_prime);
      add_json("refinement.json", refinement_json(res));
      add_csv("carleson.csv", carleson_csv(carleson_report(tree, res.P, mu)));
      if (plots()) add_csv("plots/E_prime.csv", cloud_csv(Eprime));
    });
  }

  Box outer_box() const {
    double w = c["sawtooth"]["outer_half_width"].get<double>() * r0();
    Point x = xi0();
    Box b{x, x};
    for (int k = 0; k < D; ++k) {
      b.lo[k] -= w;
      b.hi[k] += w;
    }
    return b;
  }

  bool sawtooth_stage() {
    return stage("sawtooth", [&](StageResult& r) {
      auto params = saw_params();
      int n_min = sawtooth_n_min(h);
      auto forest = inner_forest(domain, Eprime, params, n_min);
      inner = std::make_shared<SawtoothDomain>(
          build_inner_sawtooth(domain, std::move(forest), inner_forest_box(params, D), Eprime, params));
      Box ob = outer_box();
      outer = std::make_shared<SawtoothDomain>(build_outer_sawtooth(domain, Eprime, params, ob, n_min));

      // Inclusions at random points of the outer box.
      std::size_t n = c["checks"]["sandwich_points"].get<std::size_t>();
      Stream rng(sub_seed(1), 0);
      std::size_t bad_in = 0, bad_out = 0;
      std::optional<Point> witness;
      for (std::size_t i = 0; i < n; ++i) {
        Point x{0, 0, 0};
        for (int k = 0; k < D; ++k) x[k] = ob.lo[k] + (ob.hi[k] - ob.lo[k]) * rng.uniform();
        bool in_omega = gmt::inside(domain, x);
        if (inner->inside(x) && !in_omega) ++bad_in, witness = witness.value_or(x);
        if (in_omega && !outer->inside(x)) ++bad_out, witness = witness.value_or(x);
      }
      auto ti = check_trace(*inner, Eprime, h), to = check_trace(*outer, Eprime, h);
      r.summary = {{"inner_core", inner->core.size()},  {"outer_core", outer->core.size()},
                   {"sandwich_points", n},              {"inner_violations", bad_in},
                   {"outer_violations", bad_out},       {"trace_inner", ti.pass},
                   {"trace_outer", to.pass},            {"trace_inner_E_gap", ti.worst_E_gap},
                   {"trace_outer_E_gap", to.worst_E_gap}, {"trace_outer_box_cut", to.box_cut},
                   {"truncated", inner->truncated || outer->truncated}};
      if (bad_in + bad_out > 0) {
        r.verdict = Verdict::fail;
        r.diagnostics = "inclusion violated at " + point_to_json(*witness, D).dump();
      } else if (!ti.pass || !to.pass) {
        r.verdict = Verdict::fail;
        r.diagnostics = "trace: " + (ti.pass ? to.detail : ti.detail);
      }
      add_json("sawtooth_inner.json", sawtooth_json(*inner));
      add_json("sawtooth_outer.json", sawtooth_json(*outer));
    });
  }

  bool regularity_stage() {
    return stage("regularity", [&](StageResult& r) {
      const auto& ch = c["checks"];
      std::size_t nc = ch["sum_centres"].get<std::size_t>();
      std::vector<Point> xis;
      for (std::size_t k = 0; k < nc && !Eprime.empty(); ++k)
        xis.push_back(Eprime.points[k * Eprime.size() / nc]);
      std::vector<double> sum_radii, reg_radii;
      for (int k = 1; k <= ch["sum_radii"].get<int>(); ++k) sum_radii.push_back(std::ldexp(r0(), -k));
      for (int k = 1; k <= ch["regularity_radii"].get<int>(); ++k) reg_radii.push_back(std::ldexp(r0(), -k));

      Json rows = Json::object();
      bool finite = true, zero_mass = false;
      for (auto* saw : {inner.get(), outer.get()}) {
        std::string kind = saw->kind == SawtoothKind::inner ? "inner" : "outer";
        auto sweep = boundary_sum_sweep(*saw, xis, sum_radii);
        add_csv("sums_" + kind + ".csv", sums_csv(sweep, D));

        auto surface = sample_sawtooth_boundary(*saw, h / 4);
        auto w = hausdorff_weights(surface.points, D, D - 1, h);
        std::vector<Point> centres;
        std::vector<Point> near;
        for (const auto& p : surface.points)
          if (dist(p, xi0()) <= r0()) near.push_back(p);
        std::size_t nr = ch["regularity_centres"].get<std::size_t>();
        for (std::size_t k = 0; k < nr && !near.empty(); ++k) centres.push_back(near[k * near.size() / nr]);
        auto prof = regularity_profile(surface, w, reg_radii, centres, D - 1);
        rows[kind] = {{"sum_sup", sweep.sup_ratio},      {"sum_any_clipped", sweep.any_clipped},
                      {"A_upper", prof.A_upper},         {"A_lower", prof.A_lower},
                      {"raw_upper", prof.raw_upper},     {"raw_lower", prof.raw_lower},
                      {"surface_points", surface.size()}, {"zero_mass", prof.zero_mass}};
        finite = finite && std::isfinite(sweep.sup_ratio) && std::isfinite(prof.A_upper) && std::isfinite(prof.A_lower);
        zero_mass = zero_mass || prof.zero_mass;
        if (plots()) add_csv("plots/" + kind + "_boundary.csv", cloud_csv(surface));
      }
      r.summary = rows;
      if (!finite || zero_mass) {
        r.verdict = Verdict::fail;
        r.diagnostics = zero_mass ? "a boundary ball carried no mass" : "non-finite constant";
      }
      add_json("regularity.json", rows);
    });
  }

  bool harmonic_stage() {
    return stage("harmonic", [&](StageResult& r) {
      const auto& w = c["wos"];
      std::size_t n = w["walks"].get<std::size_t>();
      WoSOptions opt;
      opt.eps_shell = w["eps_shell"].get<double>();
      opt.r0 = r0();
      Point z;
      if (w.contains("z")) {
        z = point_from_json(w["z"]);
      } else {
        auto ball = find_corkscrew(domain, xi0(), r0() / 2, Side::interior, 4);
        if (!ball) throw InputError("no interior corkscrew at (xi0, r0 / 2); give wos.z");
        z = ball->center;
      }
      r.summary["z"] = point_to_json(z, D);
      if (!inner->inside(z)) {
        r.verdict = Verdict::indeterminate;
        r.diagnostics = "pole lies outside the inner sawtooth";
        return;
      }
      auto Di = sawtooth_as_domain(inner), Do = sawtooth_as_domain(outer);

      std::size_t nsets = w["test_sets"].get<std::size_t>();
      std::vector<PointCloud> Fs;
      for (std::size_t k = 0; k < nsets; ++k) {
        PointCloud F;
        F.dim = D;
        F.mesh = h;
        for (std::size_t i = k * Eprime.size() / nsets; i < (k + 1) * Eprime.size() / nsets; ++i)
          F.points.push_back(Eprime.points[i]);
        if (!F.empty()) Fs.push_back(std::move(F));
      }
      std::uint64_t s = sub_seed(2);
      auto lo = max_principle_check(Di, domain, Fs, h, z, n, s, opt);
      auto hi = max_principle_check(domain, Do, Fs, h, z, n, s, opt);
      Json rows = Json::array();
      for (std::size_t k = 0; k < Fs.size(); ++k)
        rows.push_back({{"inner", estimate_json(lo.rows[k].inner)},
                        {"omega", estimate_json(lo.rows[k].outer)},
                        {"outer", estimate_json(hi.rows[k].outer)},
                        {"lower_margin", lo.rows[k].margin},
                        {"upper_margin", hi.rows[k].margin},
                        {"pass", lo.rows[k].pass && hi.rows[k].pass}});
      add_json("wos_sandwich.json", {{"z", point_to_json(z, D)}, {"walks", n}, {"rows", rows}});

      AinftyConfig ac;
      std::size_t nc = w["ainfty_centres"].get<std::size_t>();
      for (std::size_t k = 0; k < nc; ++k) ac.centres.push_back(Eprime.points[(2 * k + 1) * Eprime.size() / (2 * nc)]);
      ac.radii = w["ainfty_radii"].get<std::vector<double>>();
      ac.level_span = w["level_span"].get<int>();
      ac.epsilons = w["epsilons"].get<std::vector<double>>();
      ac.d = D - 1;
      double rmax = *std::max_element(ac.radii.begin(), ac.radii.end());
      double c0 = c["cubes"]["c0"].get<double>();
      int depth = 1;
      while (depth < 12 && 4 * rmax * std::pow(c0, depth) > 2 * h) ++depth;
      auto Etree = build_cube_tree(Eprime, c0, depth);
      auto sc = ainfty_scatter(domain, Etree, h, z, ac, n, sub_seed(3), opt);
      add_csv("ainfty.csv", scatter_csv(sc, D));
      Json mod = Json::array();
      bool positive = true;
      for (const auto& m : sc.modulus) {
        mod.push_back({{"epsilon", m.epsilon},
                       {"delta_omega", std::isfinite(m.delta_omega) ? Json(m.delta_omega) : Json("inf")},
                       {"delta_hd", std::isfinite(m.delta_hd) ? Json(m.delta_hd) : Json("inf")}});
        positive = positive && m.delta_omega > 0 && m.delta_hd > 0;
      }
      add_json("ainfty.json", {{"rows", sc.rows.size()}, {"dropped", sc.dropped}, {"modulus", mod}});

      r.summary["sandwich_sets"] = Fs.size();
      r.summary["sandwich_lower"] = lo.pass;
      r.summary["sandwich_upper"] = hi.pass;
      r.summary["ainfty_rows"] = sc.rows.size();
      r.summary["ainfty_dropped"] = sc.dropped;
      r.summary["ainfty_modulus"] = mod;
      if (!lo.pass || !hi.pass) {
        r.verdict = Verdict::fail;
        r.diagnostics = "maximum-principle sandwich outside 3 standard errors";
      } else if (!positive) {
        r.verdict = Verdict::fail;
        r.diagnostics = "A-infinity modulus vanishes";
      } else if (sc.rows.empty() || sc.dropped == ac.centres.size() * ac.radii.size()) {
        r.verdict = Verdict::indeterminate;
        r.diagnostics = "every grid ball had an indeterminate harmonic measure";
      }
    });
  }

  void main_theorem() {
    boundary_stage() && cube_stage() && doubling_stage() && refinement_stage() && sawtooth_stage() &&
        regularity_stage() && harmonic_stage();
  }

  // ---- in-and-out ----

  struct Level {
    PointCloud Z;
    std::vector<double> w;
    double mesh = 0;
  };

  std::vector<Level> input_levels() {
    const auto& in = c["input"];
    const auto& bc = c["beta"];
    int nref = bc["refinements"].get<int>();
    std::string type = in["type"].get<std::string>();
    std::vector<Level> out;
    if (type == "cantor") {
      int g = in["generations"].get<int>();
      for (int k = 0; k < nref; ++k) {
        Level L;
        L.Z = four_corner_cantor(g + k);
        L.w.assign(L.Z.size(), 1.0 / L.Z.size());
        L.mesh = L.Z.mesh;
        out.push_back(std::move(L));
      }
    } else if (type == "gallery") {
      double h0 = c["h"].get<double>();
      auto dom = domain_from_spec(c["domain"]);
      Point ctr = point_from_json(c["region"]["center"]);
      double R = c["region"]["radius"].get<double>();
      for (int k = 0; k < nref; ++k) {
        double hk = std::ldexp(h0, -k);
        // Reuse the main-theorem selection at this mesh.
        cloud = PointCloud{};
        cloud.dim = dom.dim;
        cloud.mesh = hk;
        h = hk;
        D = dom.dim;
        for (const auto& p : sample_boundary(dom, hk).cloud.points)
          if (dist(p, ctr) <= R) cloud.points.push_back(p);
        Level L;
        L.Z = sub_cloud(select_E());
        L.Z.mesh = hk;
        L.w = hausdorff_weights(L.Z.points, D, D - 1, 4 * hk);
        L.mesh = hk;
        out.push_back(std::move(L));
      }
    } else {
      const auto& levels = in["levels"];
      for (const auto& pts : levels) {
        Level L;
        int dim = pts.empty() ? 2 : static_cast<int>(pts[0].size());
        L.Z = cloud_from_points(pts, dim, 0);
        // Mesh: largest nearest-neighbour distance.
        KdTree kd(L.Z.points, dim);
        double m = 0;
        for (const auto& p : L.Z.points) {
          double g = 1e-9;
          std::vector<std::size_t> hits;
          while ((hits = kd.within(p, g, true)).size() < 2 && g < 1e9) g *= 2;
          double nn = kInf;
          for (auto i : hits)
            if (kd.point(i) != p) nn = std::min(nn, dist(kd.point(i), p));
          if (std::isfinite(nn)) m = std::max(m, nn);
        }
        L.mesh = L.Z.mesh = m;
        L.w.assign(L.Z.size(), 1.0 / std::max<std::size_t>(1, L.Z.size()));
        out.push_back(std::move(L));
      }
    }
    return out;
  }

  bool beta_stage(bool& gallery_pass) {
    return stage("beta_energy", [&](StageResult& r) {
      const auto& bc = c["beta"];
      auto levels = input_levels();
      Point x0 = point_from_json(bc["xi0"]);
      double rr = bc["r0"].get<double>();
      int J0 = bc["J"].get<int>(), step = bc["levels_per_refinement"].get<int>();
      double tol = bc["growth_tol"].get<double>();
      Json rows = Json::array();
      std::vector<double> vals;
      for (std::size_t k = 0; k < levels.size(); ++k) {
        const auto& L = levels[k];
        if (L.Z.empty()) throw InputError("input level " + std::to_string(k) + " is empty");
        CarlesonEnergyConfig ec;
        ec.epsilon = bc["epsilon"].get<double>();
        ec.J = J0 + step * static_cast<int>(k);
        if (c["input"]["type"] == "cantor") ec.net_spacing = L.Z.mesh;
        int d = L.Z.dim - 1;
        auto rep = carleson_energy(BetaEvaluator(L.Z), L.w, x0, rr, ec, d);
        vals.push_back(rep.C_UR_emp);
        rows.push_back({{"level", k},       {"points", L.Z.size()},  {"mesh", L.mesh},
                        {"J", ec.J},        {"C_UR_emp", rep.C_UR_emp}, {"centres", rep.centres},
                        {"cells", rep.cells}, {"bad_cells", rep.bad_cells}});
        if (plots()) add_csv("plots/input_" + std::to_string(k) + ".csv", cloud_csv(L.Z));
      }
      double lo = *std::min_element(vals.begin(), vals.end()), hi = *std::max_element(vals.begin(), vals.end());
      bool increasing = true;
      for (std::size_t k = 1; k < vals.size(); ++k) increasing = increasing && vals[k] > vals[k - 1];
      bool stable = hi <= (1 + tol) * lo || hi == 0;
      r.summary = {{"C_UR_emp", vals}, {"stable", stable}, {"increasing", increasing}};
      if (stable) {
        gallery_pass = c["input"]["type"] == "gallery";
      } else if (increasing && vals.back() > (1 + tol) * vals.front()) {
        r.verdict = Verdict::fail;
        r.diagnostics = "Carleson energy grows under mesh refinement: the input is not uniformly rectifiable at these scales";
      } else {
        r.verdict = Verdict::indeterminate;
        r.diagnostics = "Carleson energy varies beyond tolerance without a monotone trend";
      }
      add_json("beta_energy.json", {{"levels", rows}, {"growth_tol", tol}});
    });
  }

  void in_and_out() {
    bool continue_sawtooth = false;
    beta_stage(continue_sawtooth);
    auto& st = b.stages.back();
    if (st.verdict != Verdict::pass) {
      st.diagnostics += (st.diagnostics.empty() ? "" : "; ") + std::string("halted before the sawtooth stage");
      return;
    }
    if (!continue_sawtooth) return;
    // E' = E at the base mesh.
    if (!boundary_stage()) return;
    Eprime = sub_cloud(E);
    sawtooth_stage() && regularity_stage() && harmonic_stage();
  }

  // ---- verify-nta ----

  bool corkscrew_stage() {
    return stage("corkscrew", [&](StageResult& r) {
      const auto& nc = c["nta"];
      domain = domain_from_spec(c["domain"]);
      D = domain.dim;
      h = c["h"].get<double>();
      Point ctr = point_from_json(c["region"]["center"]);
      double R = c["region"]["radius"].get<double>();
      std::vector<Point> pts;
      for (const auto& p : sample_boundary(domain, h).cloud.points)
        if (dist(p, ctr) <= R) pts.push_back(p);
      if (pts.empty()) throw InputError("no boundary points in the region");
      std::size_t ncent = nc["centres"].get<std::size_t>();
      std::vector<Point> centres;
      for (std::size_t k = 0; k < ncent; ++k) centres.push_back(pts[k * pts.size() / ncent]);
      auto radii = nc["radii"].get<std::vector<double>>();
      std::sort(radii.rbegin(), radii.rend());
      double C = nc["C"].get<double>();

      std::ostringstream csv;
      for (int k = 0; k < D; ++k) csv << "xi" << k << ',';
      csv << "r,side,found,";
      for (int k = 0; k < D; ++k) csv << "c" << k << ',';
      csv << "radius\n";
      std::size_t missing = 0;
      Json per_radius = Json::array();
      for (double rad : radii) {
        std::size_t miss_in = 0, miss_out = 0;
        for (const auto& xi : centres)
          for (Side side : {Side::interior, Side::exterior}) {
            auto ball = find_corkscrew(domain, xi, rad, side, C);
            for (int k = 0; k < D; ++k) csv << format_double(xi[k]) << ',';
            csv << format_double(rad) << ',' << (side == Side::interior ? "interior" : "exterior") << ','
                << (ball ? 1 : 0) << ',';
            for (int k = 0; k < D; ++k) csv << (ball ? format_double(ball->center[k]) : "") << ',';
            csv << (ball ? format_double(ball->radius) : "") << '\n';
            if (!ball) {
              (side == Side::interior ? miss_in : miss_out)++;
              if (missing++ == 0) {
                r.summary["witness"] = {{"xi", point_to_json(xi, D)},
                                        {"r", rad},
                                        {"side", side == Side::interior ? "interior" : "exterior"}};
              }
            }
          }
        per_radius.push_back({{"r", rad}, {"missing_interior", miss_in}, {"missing_exterior", miss_out}});
      }
      r.summary["C"] = C;
      r.summary["centres"] = centres.size();
      r.summary["radii"] = per_radius;
      r.summary["missing"] = missing;
      if (missing > 0) {
        r.verdict = Verdict::fail;
        const auto& wit = r.summary["witness"];
        r.diagnostics = "no " + wit["side"].get<std::string>() + " corkscrew ball of radius r/" + format_double(C) +
                        " at r = " + format_double(wit["r"].get<double>());
      }
      add_csv("corkscrew.csv", csv.str());
    });
  }

  bool uniformity_stage() {
    return stage("uniformity", [&](StageResult& r) {
      const auto& nc = c["nta"];
      Point ctr = point_from_json(c["region"]["center"]);
      double R = c["region"]["radius"].get<double>();
      Box box{ctr, ctr};
      for (int k = 0; k < D; ++k) {
        box.lo[k] -= R;
        box.hi[k] += R;
      }
      int n_min = static_cast<int>(std::floor(std::log2(h)));
      auto forest = whitney_decompose(domain, nc["K"].get<double>(), box, n_min);
      r.summary["cubes"] = forest.size();
      if (forest.size() < 2) {
        r.verdict = Verdict::indeterminate;
        r.diagnostics = "fewer than two Whitney cubes in the region";
        return;
      }
      Stream rng(sub_seed(4), 0);
      std::size_t npairs = nc["pairs"].get<std::size_t>();
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      while (pairs.size() < npairs) {
        std::size_t a = rng.next() % forest.size(), b2 = rng.next() % forest.size();
        if (a != b2) pairs.emplace_back(a, b2);
      }
      try {
        auto fit = fit_uniformity(forest, pairs, nc["A"].get<double>(), nc["B"].get<double>());
        r.summary["consistent"] = fit.consistent;
        add_json("uniformity.json", {{"s_grid", fit.s_grid}, {"envelope", fit.envelope}, {"A", fit.A},
                                     {"B", fit.B}, {"consistent", fit.consistent}});
        if (!fit.consistent) {
          r.verdict = Verdict::fail;
          r.diagnostics = "Whitney chain lengths exceed A + B log2(2 + s)";
        }
      } catch (const DisconnectedPairs& e) {
        r.verdict = Verdict::fail;
        r.diagnostics = std::to_string(e.pairs.size()) + " pairs of Whitney cubes are not connected in the region";
      }
      if (plots()) add_json("plots/forest.json", forest_json(forest));
    });
  }

  void verify_nta() { corkscrew_stage() && uniformity_stage(); }
};

}  // namespace

ReportBundle run_pipeline(const PipelineConfig& cfg) {
  auto t0 = Clock::now();
  Run run(cfg);
  run.b.pipeline = cfg.pipeline;
  if (cfg.pipeline == "main-theorem")
    run.main_theorem();
  else if (cfg.pipeline == "in-and-out")
    run.in_and_out();
  else if (cfg.pipeline == "verify-nta")
    run.verify_nta();
  else
    throw InputError("unknown pipeline '" + cfg.pipeline + "'");

  auto& b = run.b;
  b.overall = Verdict::pass;
  for (const auto& s : b.stages) {
    if (s.verdict == Verdict::fail) b.overall = Verdict::fail;
    if (s.verdict == Verdict::indeterminate && b.overall == Verdict::pass) b.overall = Verdict::indeterminate;
  }
  Json stages = Json::array();
  for (const auto& s : b.stages)
    stages.push_back({{"name", s.name}, {"verdict", to_string(s.verdict)}, {"summary", s.summary},
                      {"diagnostics", s.diagnostics}});
  run.add_json("summary.json", {{"pipeline", cfg.pipeline}, {"overall", to_string(b.overall)}, {"stages", stages}});

  std::string listing;
  Json arts = Json::array();
  for (const auto& a : b.artifacts) {
    listing += a.name + "  " + a.sha256 + "\n";
    arts.push_back({{"name", a.name}, {"sha256", a.sha256}, {"bytes", a.content.size()}});
  }
  b.bundle_sha256 = sha256_hex(listing);
  b.wall_clock = std::chrono::duration<double>(Clock::now() - t0).count();

  Json verdicts = Json::object();
  for (const auto& s : b.stages) verdicts[s.name] = to_string(s.verdict);
  b.manifest = {{"tool", "gmt"},
                {"version", kVersion},
                {"libraries",
                 {{"compiler", __VERSION__},
                  {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                  {"openssl", OPENSSL_VERSION_TEXT}}},
                {"pipeline", cfg.pipeline},
                {"seed", cfg.seed},
                {"wall_clock_seconds", b.wall_clock},
                {"stage_seconds", run.stage_seconds},
                {"inputs", cfg.inputs},
                {"config", cfg.raw},
                {"artifacts", arts},
                {"bundle_sha256", b.bundle_sha256},
                {"verdicts", verdicts},
                {"overall", to_string(b.overall)}};
  return b;
}

void write_bundle(const ReportBundle& bundle, const std::string& dir) {
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& content) {
    fs::path p = fs::path(dir) / name;
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << content;
  };
  for (const auto& a : bundle.artifacts) put(a.name, a.content);
  put("manifest.json", bundle.manifest.dump(2) + "\n");
}

}  // namespace gmt
