#include <openssl/evp.h>

#include <sstream>

#include "gmt/gallery.hpp"
#include "gmt/report.hpp"

namespace gmt {

ImplicitDomain domain_from_spec(const Json& spec) {
  if (!spec.is_object() || !spec.contains("name") || !spec["name"].is_string())
    throw InputError("domain spec needs a string \"name\"");
  Params p;
  if (spec.contains("params")) {
    if (!spec["params"].is_object()) throw InputError("domain params must be an object");
    for (const auto& [k, v] : spec["params"].items()) {
      if (!v.is_number()) throw InputError("domain param '" + k + "' must be a number");
      p[k] = v.get<double>();
    }
  }
  return gallery_domain(spec["name"].get<std::string>(), p);
}

Point point_from_json(const Json& j) {
  if (!j.is_array() || j.size() < 1 || j.size() > 3) throw InputError("point must be an array of 1 to 3 numbers");
  Point p{0, 0, 0};
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw InputError("point coordinates must be numbers");
    p[k] = j[k].get<double>();
  }
  return p;
}

Json point_to_json(const Point& p, int dim) {
  Json j = Json::array();
  for (int k = 0; k < dim; ++k) j.push_back(p[k]);
  return j;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw InputError("bad number '" + cell + "'");
    }
    if (cell.find_first_not_of(" \t", used) != std::string::npos) throw InputError("bad number '" + cell + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InputError("empty list");
  return out;
}

Point parse_point(const std::string& s) {
  auto v = parse_list(s);
  if (v.size() > 3) throw InputError("point has more than 3 coordinates");
  Point p{0, 0, 0};
  for (std::size_t k = 0; k < v.size(); ++k) p[k] = v[k];
  return p;
}

BoundarySet set_from_spec(const Json& spec) {
  std::string type = spec.value("type", "");
  if (type == "ball") return ball_set(point_from_json(spec.at("center")), spec.at("radius").get<double>());
  if (type == "box") return box_set(Box{point_from_json(spec.at("lo")), point_from_json(spec.at("hi"))});
  if (type == "arc")
    return arc_set(point_from_json(spec.value("center", Json::array({0, 0}))), spec.at("a0").get<double>(),
                   spec.at("a1").get<double>());
  if (type == "cloud") {
    PointCloud F;
    for (const auto& p : spec.at("points")) F.points.push_back(point_from_json(p));
    return cloud_set(F, spec.at("radius").get<double>());
  }
  throw InputError("unknown set type '" + type + "'");
}

namespace {

Json anchor_json(const DyadicCube& q, int dim) {
  Json a = Json::array();
  for (int k = 0; k < dim; ++k) a.push_back(q.anchor[k]);
  return a;
}

void csv_point(std::ostream& out, const Point& p, int dim) {
  for (int k = 0; k < dim; ++k) out << format_double(p[k]) << ',';
}

std::string xi_header(int dim) {
  std::string s;
  for (int k = 0; k < dim; ++k) s += "xi" + std::to_string(k) + ",";
  return s;
}

}  // namespace

Json forest_json(const WhitneyForest& forest) {
  Json out = Json::array();
  for (const auto& q : forest.cubes) out.push_back({{"level", q.level}, {"anchor", anchor_json(q, forest.dim)}, {"flags", Json::array()}});
  for (const auto& q : forest.truncated_flags)
    out.push_back({{"level", q.level}, {"anchor", anchor_json(q, forest.dim)}, {"flags", Json::array({"truncated"})}});
  return out;
}

Json tree_json(const CubeTree& tree) {
  Json levels = Json::array();
  for (int n = 0; n <= tree.depth(); ++n) {
    Json level = Json::array();
    for (auto id : tree.level(n)) {
      const auto& c = tree.cube(id);
      Json cube = {{"center_idx", c.center}, {"member_idx", c.members}};
      if (c.parent) cube["parent"] = *c.parent;
      level.push_back(std::move(cube));
    }
    levels.push_back(std::move(level));
  }
  return {{"c0", tree.c0()}, {"ell0", tree.ell0()}, {"c1_achieved", tree.c1_achieved()}, {"levels", levels}};
}

CubeTree tree_from_json(const Json& j, const PointCloud& sigma) {
  std::vector<MetricCube> cubes;
  std::vector<std::size_t> prev;  // ids of the previous level
  const auto& levels = j.at("levels");
  for (std::size_t n = 0; n < levels.size(); ++n) {
    std::vector<std::size_t> ids;
    for (const auto& c : levels[n]) {
      MetricCube m;
      m.level = static_cast<int>(n);
      m.center = c.at("center_idx").get<std::size_t>();
      m.members = c.at("member_idx").get<std::vector<std::size_t>>();
      if (c.contains("parent")) {
        m.parent = c["parent"].get<std::size_t>();
      } else if (n > 0) {
        for (auto p : prev)
          if (std::binary_search(cubes[p].members.begin(), cubes[p].members.end(), m.center)) m.parent = p;
        if (!m.parent) throw InputError("cube tree json: cube without a parent");
      }
      ids.push_back(cubes.size());
      cubes.push_back(std::move(m));
    }
    prev = std::move(ids);
  }
  for (std::size_t id = 0; id < cubes.size(); ++id)
    if (cubes[id].parent) {
      if (*cubes[id].parent >= id) throw InputError("cube tree json: parent must precede child");
      cubes[*cubes[id].parent].children.push_back(id);
    }
  double ell0 = j.contains("ell0") ? j["ell0"].get<double>() : 1.0;
  return tree_from_parts(sigma, j.at("c0").get<double>(), ell0, std::move(cubes));
}

Json refinement_json(const RefinementResult& r) {
  return {{"E_prime_idx", r.E_prime}, {"T", r.T},
          {"N", r.N},                 {"mass_ratio", r.mass_ratio},
          {"C1", r.C1},               {"t_used", r.t_used},
          {"max_membership", r.max_membership},
          {"E_N_size", r.E_N.size()}, {"P_size", r.P.size()},
          {"chain_ok", r.chain_ok},   {"mass_ok", r.mass_ok},
          {"membership_ok", r.membership_ok}, {"ok", r.ok},
          {"diagnostics", r.diagnostics}};
}

Json sawtooth_json(const SawtoothDomain& saw) {
  const int D = saw.dim();
  const auto& p = saw.params;
  Json params = {{"C0", p.C0}, {"C_tilde", p.C_tilde}, {"lambda", p.lambda}, {"K", p.K},
                 {"r0", p.r0}, {"xi0", point_to_json(p.xi0, D)}};
  Json cubes = Json::array();
  for (auto i : saw.core) {
    const auto& q = saw.forest.cubes[i];
    cubes.push_back({{"level", q.level}, {"anchor", anchor_json(q, D)}});
  }
  return {{"kind", saw.kind == SawtoothKind::inner ? "inner" : "outer"},
          {"lambda", p.lambda},
          {"params", params},
          {"base", saw.base.name},
          {"truncated", saw.truncated},
          {"cubes", cubes}};
}

Json estimate_json(const WoSEstimate& e) {
  Json esc = e.escape_radius ? Json(*e.escape_radius) : Json(nullptr);
  return {{"value", e.value},       {"n_walks", e.n_walks},
          {"hits", e.hits},         {"std_err", e.std_err},
          {"eps_shell", e.eps_shell}, {"escape_radius", esc},
          {"seed", e.seed},         {"escaped_fraction", e.escaped_fraction},
          {"unreliable", e.unreliable}};
}

std::string carleson_csv(const CarlesonReport& rep) {
  std::ostringstream out;
  out << "cube,ratio\n";
  for (std::size_t c = 0; c < rep.ratio.size(); ++c)
    if (!std::isnan(rep.ratio[c])) out << c << ',' << format_double(rep.ratio[c]) << '\n';
  return out.str();
}

std::string sums_csv(const BoundarySumSweep& sweep, int dim) {
  std::ostringstream out;
  out << xi_header(dim) << "r,sum,sum_over_rd,cubes,clipped\n";
  for (const auto& row : sweep.rows) {
    csv_point(out, row.xi, dim);
    out << format_double(row.r) << ',' << format_double(row.sum_d) << ','
        << format_double(row.sum_d / std::pow(row.r, dim - 1)) << ',' << row.cubes.size() << ','
        << (row.clipped ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string beta_csv(const std::vector<BetaRecord>& rows, int dim) {
  std::ostringstream out;
  out << xi_header(dim) << "r,bbeta,term_Z,term_P,";
  for (int k = 0; k < dim; ++k) out << "normal" << k << ',';
  out << "n_points,degenerate\n";
  for (const auto& b : rows) {
    csv_point(out, b.xi, dim);
    out << format_double(b.r) << ',' << format_double(b.value) << ',' << format_double(b.term_Z) << ','
        << format_double(b.term_P) << ',';
    csv_point(out, b.normal, dim);
    out << b.n_points << ',' << (b.degenerate ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string scatter_csv(const AinftyScatter& scatter, int dim) {
  std::ostringstream out;
  out << xi_header(dim) << "r,cube,omega_ratio,omega_err,hd_ratio\n";
  for (const auto& row : scatter.rows) {
    csv_point(out, row.xi, dim);
    out << format_double(row.r) << ',';
    if (row.cube) out << *row.cube;
    out << ',' << format_double(row.omega_ratio) << ',' << format_double(row.omega_err) << ','
        << format_double(row.hd_ratio) << '\n';
  }
  return out.str();
}

std::string cloud_csv(const PointCloud& cloud, const DiscreteMeasure* measure) {
  std::ostringstream out;
  write_cloud_csv(out, cloud, measure);
  return out.str();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "?";
}

}  // namespace gmt
