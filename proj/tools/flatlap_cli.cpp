// Command-line driver for the flatlap experiments.
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "flatlap/crsf.hpp"
#include "flatlap/interp.hpp"
#include "flatlap/io.hpp"
#include "flatlap/operators.hpp"
#include "flatlap/potential.hpp"
#include "flatlap/spectral.hpp"

#ifndef FLATLAP_DESCRIBE
#define FLATLAP_DESCRIBE "unknown"
#endif

using namespace flatlap;
using json = nlohmann::json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;
constexpr int kExitIo = 3;

struct RunConfig {
  std::string command;
  std::string surface;
  std::string graph;
  std::string reference;
  std::string ns_text = "8,16,32,64";
  std::vector<int> ns;
  int n = 16;
  int k = 6;
  int index = 2;
  int trials = 20;
  double tol = 1e-10;
  double c = 0.25;
  std::string out = "flatlap_out";
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::uint64_t seed = 42;
  std::string kind = "ball";
  std::vector<int> point = {0, 0};
};

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::vector<int> parse_ns(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("bad entry '" + item + "' in --ns");
    }
  }
  if (out.empty()) throw ValidationError("--ns is empty");
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] <= out[i - 1]) throw ValidationError("--ns must be strictly increasing");
  }
  if (out.front() < 1) throw ValidationError("--ns entries must be positive");
  return out;
}

json config_json(const RunConfig& cfg) {
  return json{{"command", cfg.command}, {"surface", cfg.surface}, {"graph", cfg.graph},
              {"reference", cfg.reference}, {"ns", cfg.ns},       {"n", cfg.n},
              {"k", cfg.k},                 {"index", cfg.index}, {"trials", cfg.trials},
              {"tol", cfg.tol},             {"c", cfg.c},         {"out", cfg.out},
              {"jobs", cfg.jobs},           {"seed", cfg.seed},   {"kind", cfg.kind},
              {"point", cfg.point}};
}

/// Writes `<out>/<command>.csv` and the JSON sidecar next to it.
class Report {
 public:
  explicit Report(const RunConfig& cfg) : cfg_(cfg) {}
  std::ostringstream csv;
  json summary = json::object();

  void write() const {
    std::error_code ec;
    std::filesystem::create_directories(cfg_.out, ec);
    if (ec) throw Error("cannot create output directory '" + cfg_.out + "': " + ec.message());
    const auto base = std::filesystem::path(cfg_.out) / cfg_.command;
    write_file(base.string() + ".csv", csv.str());
    const json sidecar{{"version", FLATLAP_DESCRIBE}, {"config", config_json(cfg_)}, {"summary", summary}};
    write_file(base.string() + ".json", sidecar.dump(2) + "\n");
  }

 private:
  static void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw Error("failed writing '" + path + "'");
  }
  const RunConfig& cfg_;
};

SurfaceDocument load(const RunConfig& cfg) {
  if (cfg.surface.empty()) throw ValidationError("--surface is required");
  auto doc = load_surface(cfg.surface);
  require_flat(doc.surface, doc.bundle);
  return doc;
}

EigenOptions eigen_options(const RunConfig& cfg) {
  EigenOptions opt;
  opt.tol = cfg.tol;
  opt.seed = cfg.seed;
  return opt;
}

ReferenceModel require_reference(const RunConfig& cfg) {
  if (cfg.reference.empty()) throw ValidationError("--reference is required");
  return ReferenceModel::parse(cfg.reference);
}

int cmd_validate(const RunConfig& cfg) {
  if (cfg.surface.empty()) throw ValidationError("--surface is required");
  const auto doc = load_surface(cfg.surface);
  const auto& s = doc.surface;
  const auto report = validate_cone_monodromy(s, doc.bundle);
  Report out(cfg);
  out.csv << "cycle,interior,quarter_turns,angle,singular,monodromy_defect\n";
  for (int c = 0; c < static_cast<int>(s.vertex_cycles().size()); ++c) {
    const auto& cyc = s.vertex_cycles()[c];
    const double defect =
        cyc.interior ? max_abs_entry(cycle_monodromy(s, doc.bundle, cyc) -
                                     CMatrix::Identity(doc.bundle.rank(), doc.bundle.rank()))
                     : 0.0;
    out.csv << fmt::format("{},{},{},{},{},{}\n", c, cyc.interior ? 1 : 0, cyc.quarter_turns(), num(cyc.angle()),
                           cyc.singular() ? 1 : 0, num(defect));
  }
  const int cones = static_cast<int>(s.cone_points().size());
  out.summary = {{"squares", s.num_squares()},
                 {"cone_points", cones},
                 {"boundary_corners", s.boundary_corners().size()},
                 {"euler_characteristic", s.euler_characteristic()},
                 {"rank", doc.bundle.rank()},
                 {"flat", report.ok()},
                 {"max_monodromy_defect", report.max_defect}};
  out.write();
  fmt::print("{} cone points, χ={}\n", cones, s.euler_characteristic());
  if (!report.ok()) {
    for (const auto& v : report.violations)
      fmt::print(stderr, "cone monodromy violation at cycle {}: defect {:.3e}\n", v.cycle, v.defect);
    return kExitValidation;
  }
  return 0;
}

int cmd_spectrum(const RunConfig& cfg) {
  const auto doc = load(cfg);
  const auto rep = spectrum(doc.surface, doc.bundle, cfg.n, cfg.k, eigen_options(cfg));
  Report out(cfg);
  out.csv << "n,i,lambda_n,residual\n";
  for (int i = 0; i < static_cast<int>(rep.rescaled_eigs.size()); ++i) {
    out.csv << fmt::format("{},{},{},{}\n", cfg.n, i + 1, num(rep.rescaled_eigs[i]), num(rep.residual_norms[i]));
  }
  out.summary = {{"solver", rep.solver}, {"iterations", rep.iterations}, {"tolerance", rep.tolerance}};
  out.write();
  return 0;
}

int cmd_converge(const RunConfig& cfg) {
  const auto doc = load(cfg);
  std::optional<ReferenceModel> model;
  if (!cfg.reference.empty()) model = ReferenceModel::parse(cfg.reference);
  const auto rows = convergence_table(doc.surface, doc.bundle, cfg.k, cfg.ns, model, eigen_options(cfg), cfg.jobs);
  Report out(cfg);
  out.csv << "n,i,lambda_n,lambda_ref,abs_err,order\n";
  int flagged = 0;
  for (const auto& r : rows) {
    out.csv << fmt::format("{},{},{},{},{},{}\n", r.n, r.i, num(r.lambda_n), num(r.lambda_ref), num(r.abs_err),
                           std::isnan(r.order) ? std::string() : num(r.order));
    flagged += r.flagged;
  }
  out.summary = {{"rows", rows.size()}, {"flagged", flagged},
                 {"limits", model ? model->describe() : std::string("richardson")}};
  out.write();
  return flagged == 0 ? 0 : kExitSolver;
}

int cmd_eigvec(const RunConfig& cfg) {
  const auto doc = load(cfg);
  const auto model = require_reference(cfg);
  const auto rows = eigenvector_convergence(doc.surface, doc.bundle, model, cfg.index, cfg.ns, eigen_options(cfg));
  Report out(cfg);
  out.csv << "n,group,multiplicity,lambda_ref,aligned_error,direct_error,flagged\n";
  for (const auto& r : rows) {
    out.csv << fmt::format("{},{},{},{},{},{},{}\n", r.n, r.group, r.multiplicity, num(r.lambda_ref),
                           num(r.aligned_error), num(r.direct_error), r.flagged ? 1 : 0);
  }
  out.summary = {{"reference", model.describe()}};
  out.write();
  return 0;
}

int cmd_interp_check(const RunConfig& cfg) {
  const auto doc = load(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss;
  auto random_section = [&](int dim) {
    CVector f(dim);
    for (int k = 0; k < dim; ++k) f(k) = Complex(gauss(rng), gauss(rng));
    return f;
  };
  Report out(cfg);
  out.csv << "n,trial,energy_gap,pairing_ratio\n";
  double worst = 0.0;
  for (int n : cfg.ns) {
    const auto g = DiscretizationGraph::build(doc.surface, doc.bundle, n);
    const auto d = gradient(g);
    const int dim = g.num_vertices() * g.rank();
    for (int t = 0; t < cfg.trials; ++t) {
      const CVector f = average(random_section(dim), g);
      const CVector h = average(random_section(dim), g);
      const auto lf = linearize(f, g);
      const Complex discrete = inner(CVector(d * f), CVector(d * h));
      const double ef = CVector(d * f).squaredNorm(), eh = CVector(d * h).squaredNorm();
      const double gap = std::abs(discrete - dirichlet_energy(lf, linearize(h, g))) / (1 + ef + eh);
      const double ratio = l2_pairing(lf, lf).real() * n * n / f.squaredNorm();
      worst = std::max(worst, gap);
      out.csv << fmt::format("{},{},{},{}\n", n, t, num(gap), num(ratio));
    }
  }
  out.summary = {{"max_energy_gap", worst}};
  out.write();
  return 0;
}

int cmd_consistency(const RunConfig& cfg) {
  const auto doc = load(cfg);
  const auto model = require_reference(cfg);
  const auto modes = reference_modes(model, cfg.index);
  const auto mode = modes.back();
  const auto f = reference_eigenfunction(model, mode, develop(doc.surface, doc.bundle));
  const SectionFunction lap = [f, mode](const SurfacePoint& p) { return CVector(mode.value * f(p)); };
  Report out(cfg);
  out.csv << "n,interior,edge,corner,all\n";
  for (int n : cfg.ns) {
    const auto g = DiscretizationGraph::build(doc.surface, doc.bundle, n);
    const auto r = consistency_residual(f, lap, g, assemble_laplacian(g));
    out.csv << fmt::format("{},{},{},{},{}\n", n, num(r.interior), num(r.edge), num(r.corner), num(r.all));
  }
  out.summary = {{"mode", {{"p", mode.p}, {"q", mode.q}, {"lambda", mode.value}}}};
  out.write();
  return 0;
}

int cmd_harnack(const RunConfig& cfg) {
  const auto doc = load(cfg);
  const auto rows = harnack_diagnostics(doc.surface, doc.bundle, cfg.index, cfg.ns, cfg.c, eigen_options(cfg));
  Report out(cfg);
  out.csv << "n,lambda,max_edge_gap,sup_over_sqrt_log,interior_sup,predicted_gap\n";
  for (const auto& r : rows) {
    out.csv << fmt::format("{},{},{},{},{},{}\n", r.n, num(r.lambda), num(r.max_edge_gap), num(r.sup_over_sqrt_log),
                           num(r.interior_sup), std::isnan(r.predicted_gap) ? std::string() : num(r.predicted_gap));
  }
  out.write();
  return 0;
}

int cmd_green(const RunConfig& cfg) {
  Report out(cfg);
  LatticeFunction g;
  if (cfg.kind == "ball") {
    g = green_ball(cfg.n);
    out.summary = {{"residual", ball_residual(g)}, {"sphere_max", sphere_max(g, cfg.n)}, {"g0", g(0, 0)}};
    if (cfg.n >= 64) {
      const auto fit = fullplane_fit(g, cfg.n);
      out.summary["fit_constant"] = fit.c;
      out.summary["fit_max_deviation"] = fit.max_deviation;
      out.summary["fit_samples"] = fit.samples;
    }
  } else if (cfg.kind == "halfplane") {
    if (cfg.point.size() != 2) throw ValidationError("--point takes two integers a,b");
    g = green_halfplane(cfg.point[0], cfg.point[1], cfg.n);
    out.summary = {{"residual", halfplane_residual(g, cfg.point[0], cfg.point[1])}};
  } else {
    throw ValidationError("--kind must be ball or halfplane");
  }
  g.write_csv(out.csv);
  out.summary["support"] = g.support_size();
  out.write();
  return 0;
}

int cmd_flow(const RunConfig& cfg) {
  const auto check = check_corner_flow(corner_flow(cfg.n));
  Report out(cfg);
  out.csv << "n,max_divergence_error,squared_norm,harmonic_bound\n";
  out.csv << fmt::format("{},{},{},{}\n", cfg.n, num(check.max_divergence_error), num(check.squared_norm),
                         num(check.harmonic_bound));
  const bool ok = check.max_divergence_error <= 1e-12 && check.squared_norm <= check.harmonic_bound;
  out.summary = {{"ok", ok}};
  out.write();
  fmt::print("divergence error {:.3e}, |E|^2 = {:.6f} <= {:.6f}\n", check.max_divergence_error,
             check.squared_norm, check.harmonic_bound);
  return ok ? 0 : kExitValidation;
}

int cmd_barrier(const RunConfig& cfg) {
  const auto doc = load(cfg);
  const auto g = DiscretizationGraph::build(doc.surface, doc.bundle, cfg.n);
  Report out(cfg);
  out.csv << "cycle,quarter_turns,checked,max_laplacian,violations\n";
  int violations = 0;
  for (int c : doc.surface.singular_points()) {
    const auto rep = convex_barrier(g, c);
    out.csv << fmt::format("{},{},{},{},{}\n", c, doc.surface.vertex_cycles()[c].quarter_turns(), rep.checked,
                           rep.max_laplacian, rep.violations.size());
    violations += static_cast<int>(rep.violations.size());
  }
  out.summary = {{"violations", violations}};
  out.write();
  return violations == 0 ? 0 : kExitValidation;
}

int cmd_crsf_check(const RunConfig& cfg) {
  std::vector<TinyConnectionGraph> graphs;
  if (!cfg.graph.empty()) {
    std::ifstream in(cfg.graph);
    if (!in) throw Error("cannot open graph file '" + cfg.graph + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    graphs.push_back(parse_connection_graph(ss.str()));
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> nv(1, 7), ne(0, 12);
    for (int t = 0; t < cfg.trials; ++t) {
      const int v = nv(rng), e = ne(rng);
      graphs.push_back(random_connection_graph(v, e, rng()));
    }
  }
  Report out(cfg);
  out.csv << "trial,vertices,edges,determinant,crsf_sum,gap\n";
  int failures = 0;
  for (std::size_t t = 0; t < graphs.size(); ++t) {
    const double det = determinant(graphs[t]), sum = crsf_sum(graphs[t]);
    failures += std::abs(det - sum) > 1e-9;
    out.csv << fmt::format("{},{},{},{},{},{}\n", t, graphs[t].num_vertices, graphs[t].edges.size(), num(det),
                           num(sum), num(std::abs(det - sum)));
  }
  out.summary = {{"graphs", graphs.size()}, {"failures", failures}};
  out.write();
  return failures == 0 ? 0 : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete bundle Laplacians on square-tiled surfaces"};
  app.set_version_flag("--version", std::string(FLATLAP_DESCRIBE));
  app.set_config("--config", "", "INI/TOML file with option values; flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    sub->add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto add_surface = [&](CLI::App* sub) {
    sub->add_option("--surface", cfg.surface, "Surface description file")->required();
  };
  auto add_eigen = [&](CLI::App* sub) {
    sub->add_option("--k", cfg.k, "Number of eigenpairs")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--tol", cfg.tol, "Eigensolver residual tolerance")->check(CLI::PositiveNumber)
        ->capture_default_str();
  };
  auto add_ns = [&](CLI::App* sub) {
    sub->add_option("--ns", cfg.ns_text, "Comma-separated subdivision levels")->capture_default_str();
  };

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
  };
  const std::vector<Command> commands = {
      {"validate", "Check a surface and its bundle", cmd_validate},
      {"spectrum", "Rescaled spectrum at one level", cmd_spectrum},
      {"converge", "Eigenvalue convergence table", cmd_converge},
      {"eigvec", "Eigenvector convergence table", cmd_eigvec},
      {"interp-check", "Energy identity and pairing ratios", cmd_interp_check},
      {"consistency", "Finite-difference residuals of a reference mode", cmd_consistency},
      {"harnack", "Harnack diagnostics of an eigenvector", cmd_harnack},
      {"green", "Lattice Green functions", cmd_green},
      {"flow", "Corner flow divergence and energy", cmd_flow},
      {"barrier", "Convex barrier check at singular points", cmd_barrier},
      {"crsf-check", "Determinant versus cycle-rooted forest sum", cmd_crsf_check},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.push_back(sub);
    const std::string name = c.name;
    if (name != "green" && name != "flow" && name != "crsf-check") add_surface(sub);
    if (name == "spectrum" || name == "converge" || name == "eigvec" || name == "harnack") add_eigen(sub);
    if (name == "converge" || name == "eigvec" || name == "interp-check" || name == "consistency" ||
        name == "harnack") {
      add_ns(sub);
    }
    if (name == "converge" || name == "eigvec" || name == "consistency") {
      sub->add_option("--reference", cfg.reference, "rectangle:a,b or torus:a,b,alpha,beta");
    }
    if (name == "eigvec" || name == "harnack" || name == "consistency") {
      sub->add_option("--index", cfg.index, "1-based eigenvalue group or mode index")->capture_default_str();
    }
    if (name == "spectrum" || name == "green" || name == "flow" || name == "barrier") {
      sub->add_option("--n", cfg.n, "Subdivision level or radius")->check(CLI::PositiveNumber)
          ->capture_default_str();
    }
    if (name == "interp-check" || name == "crsf-check") {
      sub->add_option("--trials", cfg.trials, "Random trials")->capture_default_str();
    }
    if (name == "harnack") sub->add_option("--c", cfg.c, "Interior distance cutoff")->capture_default_str();
    if (name == "green") {
      sub->add_option("--kind", cfg.kind, "ball or halfplane")->capture_default_str();
      sub->add_option("--point", cfg.point, "Half-plane source a,b")->delimiter(',')->expected(2);
    }
    if (name == "crsf-check") sub->add_option("--graph", cfg.graph, "Connection graph file");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      cfg.command = commands[i].name;
      cfg.ns = parse_ns(cfg.ns_text);
      return commands[i].run(cfg);
    }
  } catch (const SolverError& e) {
    fmt::print(stderr, "solver error: {}\n", e.what());
    return kExitSolver;
  } catch (const ValidationError& e) {
    fmt::print(stderr, "validation error: {}\n", e.what());
    return kExitValidation;
  } catch (const ParseError& e) {
    fmt::print(stderr, "parse error: {}\n", e.what());
    return kExitValidation;
  } catch (const Error& e) {
    fmt::print(stderr, "i/o error: {}\n", e.what());
    return kExitIo;
  }
  return 0;
}
