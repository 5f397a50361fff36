#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "gmt/report.hpp"

using namespace gmt;

namespace {

// Inline JSON or a path to a JSON file.
Json json_arg(const std::string& s) {
  if (!s.empty() && (s[0] == '{' || s[0] == '[')) return Json::parse(s);
  std::ifstream f(s);
  if (!f) throw InputError("cannot read " + s);
  return Json::parse(f);
}

// "0-99,120,130-140"
IndexSet index_arg(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto dash = item.find('-');
    std::size_t a = std::stoul(item.substr(0, dash));
    std::size_t b = dash == std::string::npos ? a : std::stoul(item.substr(dash + 1));
    for (std::size_t i = a; i <= b; ++i) out.push_back(i);
  }
  return make_index_set(std::move(out));
}

// "x,y;x,y"
std::vector<Point> points_arg(const std::string& s) {
  std::vector<Point> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) out.push_back(parse_point(item));
  return out;
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::pass: return 0;
    case Verdict::fail: return 1;
    case Verdict::indeterminate: return 3;
  }
  return 1;
}

int report(const ReportBundle& b, const std::string& out) {
  write_bundle(b, out);
  for (const auto& s : b.stages) {
    std::cout << s.name << ": " << to_string(s.verdict);
    if (!s.diagnostics.empty()) std::cout << " (" << s.diagnostics << ")";
    std::cout << "\n";
  }
  std::cout << "overall: " << to_string(b.overall) << "\nbundle: " << out << " sha256 " << b.bundle_sha256 << "\n";
  return exit_code(b.overall);
}

SawtoothParams saw_params(const std::string& xi0, double r0, double C0, int C_tilde, double lambda, double K) {
  SawtoothParams p;
  p.xi0 = parse_point(xi0);
  p.r0 = r0;
  p.C0 = C0;
  p.C_tilde = C_tilde;
  p.lambda = lambda;
  p.K = K;
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric measure theory toolkit: Whitney cubes, sawtooth domains, harmonic measure"};
  app.require_subcommand(1);
  int rc = 0;

  // Pipelines.
  struct PipelineArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
    bool plots = false;
  };
  std::vector<std::unique_ptr<PipelineArgs>> pargs;
  for (std::string name : {"main-theorem", "in-and-out", "verify-nta"}) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " pipeline");
    auto& a = *pargs.emplace_back(std::make_unique<PipelineArgs>());
    sub->add_option("--config", a.config, "JSON config file")->required();
    sub->add_option("--seed", a.seed, "Override the config seed");
    sub->add_option("--out", a.out, "Bundle directory (default: config out, else gmt_out)");
    sub->add_flag("--emit-plots", a.plots, "Also write plot-ready CSVs");
    sub->callback([&a, name, &rc] {
      auto cfg = load_config(a.config);
      if (cfg.pipeline != name) throw InputError("config pipeline is '" + cfg.pipeline + "', not '" + name + "'");
      if (a.seed) cfg.seed = *a.seed, cfg.raw["seed"] = *a.seed;
      if (a.plots) cfg.emit_plots = true, cfg.raw["emit_plots"] = true;
      std::string out = !a.out.empty() ? a.out : !cfg.out_dir.empty() ? cfg.out_dir : "gmt_out";
      rc = report(run_pipeline(cfg), out);
    });
  }

  // Re-run from a manifest.
  std::string manifest_path, rerun_out = "gmt_rerun";
  auto* rerun = app.add_subcommand("rerun", "Re-run a bundle from its manifest and compare artifact hashes");
  rerun->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
  rerun->add_option("--out", rerun_out);
  rerun->callback([&] {
    Json m = json_arg(manifest_path);
    auto cfg = parse_config(m);
    auto b = run_pipeline(cfg);
    rc = report(b, rerun_out);
    bool same = b.bundle_sha256 == m.value("bundle_sha256", "");
    std::cout << "reproduced: " << (same ? "yes" : "no") << "\n";
    if (!same) rc = 1;
  });

  // whitney
  std::string w_domain, w_box;
  double w_K = 3;
  int w_nmin = -6;
  auto* wh = app.add_subcommand("whitney", "Whitney decomposition as JSON");
  wh->add_option("--domain", w_domain, "Domain spec (JSON or file)")->required();
  wh->add_option("--K", w_K);
  wh->add_option("--nmin", w_nmin);
  wh->add_option("--box", w_box, "lo0,lo1[,lo2],hi0,hi1[,hi2]")->required();
  wh->callback([&] {
    auto dom = domain_from_spec(json_arg(w_domain));
    auto v = parse_list(w_box);
    if (v.size() != static_cast<std::size_t>(2 * dom.dim)) throw InputError("--box needs 2 x dim numbers");
    Box box;
    for (int k = 0; k < dom.dim; ++k) box.lo[k] = v[k], box.hi[k] = v[dom.dim + k];
    std::cout << forest_json(whitney_decompose(dom, w_K, box, w_nmin)).dump(2) << "\n";
  });

  // cubes
  std::string c_cloud;
  double c_c0 = 0.25;
  int c_depth = 4;
  auto* cu = app.add_subcommand("cubes", "Metric cube tree as JSON");
  cu->add_option("--cloud", c_cloud)->required()->check(CLI::ExistingFile);
  cu->add_option("--c0", c_c0);
  cu->add_option("--depth", c_depth);
  cu->callback([&] {
    auto f = read_cloud_csv(c_cloud);
    std::cout << tree_json(build_cube_tree(f.cloud, c_c0, c_depth)).dump(2) << "\n";
  });

  // porosity refine
  auto* po = app.add_subcommand("porosity", "Porosity tools");
  po->require_subcommand(1);
  std::string p_tree, p_measure, p_E;
  PorosityConfig pc;
  auto* pr = po->add_subcommand("refine", "Refine E to E' as JSON");
  pr->add_option("--tree", p_tree, "Cube tree JSON")->required()->check(CLI::ExistingFile);
  pr->add_option("--measure", p_measure, "Cloud CSV with weights")->required()->check(CLI::ExistingFile);
  pr->add_option("--E", p_E, "Indices, e.g. 0-99,120")->required();
  pr->add_option("--tau", pc.tau);
  pr->add_option("--M", pc.M);
  pr->add_option("--delta", pc.delta);
  pr->add_option("--t", pc.t);
  pr->callback([&] {
    auto f = read_cloud_csv(p_measure);
    auto tree = tree_from_json(json_arg(p_tree), f.cloud);
    auto res = refine_set_adaptive(tree, index_arg(p_E), f.measure, pc);
    std::cout << refinement_json(res).dump(2) << "\n";
    if (!res.ok) rc = 1;
  });

  // sawtooth build | sums
  auto* sa = app.add_subcommand("sawtooth", "Sawtooth domains");
  sa->require_subcommand(1);
  std::string s_kind = "inner", s_domain, s_E, s_xi0 = "0,0", s_xi, s_r;
  double s_r0 = 1, s_C0 = 7, s_lambda = 1.125, s_K = 12, s_half = 2, s_h = 1.0 / 256;
  int s_Ct = 8;
  std::optional<int> s_nmin;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--kind", s_kind)->check(CLI::IsMember({"inner", "outer"}));
    sub->add_option("--domain", s_domain)->required();
    sub->add_option("--E", s_E, "Cloud CSV of E")->required()->check(CLI::ExistingFile);
    sub->add_option("--xi0", s_xi0);
    sub->add_option("--r0", s_r0);
    sub->add_option("--C0", s_C0);
    sub->add_option("--C-tilde", s_Ct);
    sub->add_option("--lambda", s_lambda);
    sub->add_option("--K", s_K);
    sub->add_option("--nmin", s_nmin);
    sub->add_option("--mesh", s_h, "Mesh of E");
    sub->add_option("--outer-half-width", s_half, "Outer box half-width in units of r0");
  };
  auto build = [&] {
    auto dom = domain_from_spec(json_arg(s_domain));
    auto E = read_cloud_csv(s_E).cloud;
    E.mesh = s_h;
    auto p = saw_params(s_xi0, s_r0, s_C0, s_Ct, s_lambda, s_K);
    int n_min = s_nmin ? *s_nmin : sawtooth_n_min(E.mesh);
    if (s_kind == "inner")
      return build_inner_sawtooth(dom, inner_forest(dom, E, p, n_min), inner_forest_box(p, dom.dim), E, p);
    Box b{p.xi0, p.xi0};
    for (int k = 0; k < dom.dim; ++k) b.lo[k] -= s_half * p.r0, b.hi[k] += s_half * p.r0;
    return build_outer_sawtooth(dom, E, p, b, n_min);
  };
  auto* sb = sa->add_subcommand("build", "Sawtooth cubes as JSON");
  common(sb);
  sb->callback([&] { std::cout << sawtooth_json(build()).dump(2) << "\n"; });
  auto* ss = sa->add_subcommand("sums", "Boundary cube sums as CSV");
  common(ss);
  ss->add_option("--xi", s_xi, "Centres x,y;x,y")->required();
  ss->add_option("--r-grid", s_r, "Radii r1,r2,...")->required();
  ss->callback([&] {
    auto saw = build();
    std::cout << sums_csv(boundary_sum_sweep(saw, points_arg(s_xi), parse_list(s_r)), saw.dim());
  });

  // beta sweep | energy
  auto* be = app.add_subcommand("beta", "Bilateral beta numbers");
  be->require_subcommand(1);
  std::string b_cloud, b_centres, b_scales, b_xi0 = "0,0";
  double b_eps = 0.3, b_r0 = 1, b_h = 0;
  int b_J = 6;
  auto* bs = be->add_subcommand("sweep", "beta at every (centre, scale) as CSV");
  bs->add_option("--cloud", b_cloud)->required()->check(CLI::ExistingFile);
  bs->add_option("--centers", b_centres, "Cloud CSV of centres")->required()->check(CLI::ExistingFile);
  bs->add_option("--scales", b_scales, "r1,r2,...")->required();
  bs->add_option("--mesh", b_h, "Sample spacing of the cloud (tangent-disc radius)");
  bs->callback([&] {
    auto Z = read_cloud_csv(b_cloud).cloud;
    Z.mesh = b_h;
    auto C = read_cloud_csv(b_centres).cloud;
    BetaEvaluator ev(Z);
    std::vector<BetaRecord> rows;
    for (const auto& xi : C.points)
      for (double r : parse_list(b_scales)) rows.push_back(ev(xi, r));
    std::cout << beta_csv(rows, Z.dim);
  });
  auto* bn = be->add_subcommand("energy", "Carleson energy of the bad set as JSON");
  bn->add_option("--cloud", b_cloud, "Cloud CSV; weights are the measure")->required()->check(CLI::ExistingFile);
  bn->add_option("--epsilon", b_eps);
  bn->add_option("--J", b_J);
  bn->add_option("--r0", b_r0);
  bn->add_option("--xi0", b_xi0);
  bn->add_option("--mesh", b_h, "Sample spacing of the cloud (tangent-disc radius)");
  bn->callback([&] {
    auto f = read_cloud_csv(b_cloud);
    f.cloud.mesh = b_h;
    CarlesonEnergyConfig ec;
    ec.epsilon = b_eps;
    ec.J = b_J;
    auto rep = carleson_energy(BetaEvaluator(f.cloud), f.measure.weights(), parse_point(b_xi0), b_r0, ec,
                               f.cloud.dim - 1);
    std::cout << Json{{"epsilon", rep.epsilon}, {"r0", rep.r0},         {"estimate", rep.estimate},
                      {"C_UR_emp", rep.C_UR_emp}, {"centres", rep.centres}, {"cells", rep.cells},
                      {"bad_cells", rep.bad_cells}}
                     .dump(2)
              << "\n";
  });

  // wos
  std::string o_domain, o_z, o_set;
  std::size_t o_walks = 100000;
  std::uint64_t o_seed = 1;
  double o_eps = 1e-6;
  auto* wo = app.add_subcommand("wos", "Harmonic measure of a set by walk-on-spheres, as JSON");
  wo->add_option("--domain", o_domain)->required();
  wo->add_option("--z", o_z, "Start point x,y[,z]")->required();
  wo->add_option("--set", o_set, "Set spec (JSON or file)")->required();
  wo->add_option("--walks", o_walks);
  wo->add_option("--seed", o_seed);
  wo->add_option("--eps", o_eps, "Shell width");
  wo->callback([&] {
    auto dom = domain_from_spec(json_arg(o_domain));
    WoSOptions opt;
    opt.eps_shell = o_eps;
    std::cout << estimate_json(harmonic_measure(dom, parse_point(o_z), set_from_spec(json_arg(o_set)), o_walks, o_seed, opt))
                     .dump(2)
              << "\n";
  });

  // ainfty
  std::string a_domain, a_E, a_grid, a_z;
  double a_c0 = 0.25;
  int a_depth = 6;
  auto* ai = app.add_subcommand("ainfty", "A-infinity scatter as CSV");
  ai->add_option("--domain", a_domain)->required();
  ai->add_option("--E", a_E, "Cloud CSV of E (mesh from --mesh)")->required()->check(CLI::ExistingFile);
  ai->add_option("--grid", a_grid, R"({"centres": [[x, y], ...], "radii": [...]} (JSON or file))")->required();
  ai->add_option("--z", a_z, "Pole x,y[,z]")->required();
  double a_h = 1.0 / 256;
  ai->add_option("--mesh", a_h, "Mesh of E");
  ai->add_option("--walks", o_walks);
  ai->add_option("--seed", o_seed);
  ai->add_option("--c0", a_c0);
  ai->add_option("--depth", a_depth);
  ai->callback([&] {
    auto dom = domain_from_spec(json_arg(a_domain));
    auto E = read_cloud_csv(a_E).cloud;
    E.mesh = a_h;
    Json g = json_arg(a_grid);
    AinftyConfig ac;
    for (const auto& p : g.at("centres")) ac.centres.push_back(point_from_json(p));
    ac.radii = g.at("radii").get<std::vector<double>>();
    ac.d = dom.dim - 1;
    auto sc = ainfty_scatter(dom, build_cube_tree(E, a_c0, a_depth), a_h, parse_point(a_z), ac, o_walks, o_seed);
    std::cout << scatter_csv(sc, dom.dim);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
