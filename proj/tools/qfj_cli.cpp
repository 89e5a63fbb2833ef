#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "qfj/core_model.hpp"
#include "qfj/csv.hpp"
#include "qfj/fick_jacobs.hpp"
#include "qfj/redfield.hpp"
#include "qfj/smoluchowski.hpp"
#include "qfj/sweep.hpp"
#include "qfj/thermal_equilibrium.hpp"

namespace fs = std::filesystem;
using namespace qfj;

namespace {

struct Globals {
  std::string config;
  std::string out = "qfj_out";
  int workers = 1;
  std::string grid;
  std::string bc;
};

struct Common {
  std::string Lambdas = "0.05";
  double ratio = 16.0;
  double k1 = 0.3;
};

KeyValueMap load_config(const Globals& g) {
  return g.config.empty() ? KeyValueMap{} : read_key_value_file(g.config);
}

// config values first, command-line overrides second
SweepConfig base_config(const Globals& g, const Common& c, const CLI::App& sub) {
  KeyValueMap kv = load_config(g);
  if (sub.count("--k1") || !kv.count("k1")) kv["k1"] = format_double(c.k1);
  if (sub.count("--ratio") || (!kv.count("Lx_over_Lomega") && !kv.count("k0")))
    kv["Lx_over_Lomega"] = format_double(c.ratio);
  kv.erase("Lambda");
  if (!g.grid.empty()) kv["grid"] = g.grid;
  if (!g.bc.empty()) kv["bc"] = g.bc;
  SweepConfig cfg = sweep_config_from(kv);
  cfg.out_dir = g.out;
  cfg.workers = g.workers;
  return cfg;
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return (fs::path(g.out) / name).string();
}

void report(const std::string& path) { std::cout << "wrote " << path << "\n"; }

int cmd_analytic(const Globals& g, const Common& c, const CLI::App& sub, bool general) {
  SweepConfig cfg = base_config(g, c, sub);
  CsvTable t({"Lambda", "k1", "dF", "J_Lambda", "flux_ratio", "lambda_small_margin",
              "lengthscale_sep_margin", "valid"});
  for (double lam : parse_samples(c.Lambdas)) {
    const ChannelParams p = point_params(cfg.base, cfg.ratio, cfg.base.k1, lam);
    double dF = free_energy_barrier(p, lam);
    if (general) {
      GeneralFickJacobs fj(std::make_shared<HarmonicChannel>(p), p.beta, derive_scales(p).L_y);
      dF = barrier_from_profile(general_profile(fj, p.L, lam, 129));
    }
    const double jl = harmonic_flux_correction(p);
    ValidityReport v = check_validity(p);
    if (lam == 0.0) {
      // classical point: beta is arbitrary, only the geometric check matters
      v.lambda_small = {true, 0.0};
      v.messages.erase(std::remove_if(v.messages.begin(), v.messages.end(),
                                      [](const std::string& m) { return m.find("first-order") != std::string::npos; }),
                       v.messages.end());
    }
    for (const auto& m : v.messages) std::cerr << "Lambda " << lam << ": " << m << "\n";
    t.add_row({format_double(lam), format_double(p.k1), format_double(dF), format_double(jl),
               format_double(1.0 + lam * jl), format_double(v.lambda_small.margin),
               format_double(v.lengthscale_sep.margin), v.ok() ? "1" : "0"});
  }
  const std::string path = out_path(g, "analytic.csv");
  t.write(path);
  std::cout << t.to_string();
  report(path);
  return 0;
}

int cmd_equilibrium(const Globals& g, const Common& c, const CLI::App& sub) {
  SweepConfig cfg = base_config(g, c, sub);
  ThermalRunOptions opt;
  opt.Mx = cfg.Mx;
  opt.My = cfg.My;
  opt.bc = cfg.bc;
  SpectrumCache cache((fs::path(g.out) / "cache").string());
  opt.cache = &cache;
  const ChannelParams base = point_params(cfg.base, cfg.ratio, cfg.base.k1, 0.0);
  const auto lams = parse_samples(c.Lambdas);
  const auto pts = thermal_run(base, lams, opt);
  CsvTable t({"Lambda", "dF_thermal", "dF_analytic", "mismatch", "edge_ratio", "Ycut"});
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& pt = pts[k];
    for (const auto& w : pt.warnings) std::cerr << "Lambda " << pt.Lambda << ": " << w << "\n";
    t.add_row({format_double(pt.Lambda), format_double(pt.barrier), format_double(pt.barrier_fj),
               format_double(pt.mismatch), format_double(pt.edge_ratio), format_double(pt.Ycut)});
    CsvTable prof({"x", "rho_num", "rho_fj", "pointwise_sq_rel_err"});
    for (std::size_t i = 0; i < pt.fj.size(); ++i) {
      const double r = (pt.fj[i] - pt.numeric.rho[i]) / pt.numeric.rho[i];
      prof.add_row({format_double(pt.numeric.x[i]), format_double(pt.numeric.rho[i]),
                    format_double(pt.fj[i]), format_double(r * r)});
    }
    prof.write(out_path(g, "profile_" + std::to_string(k) + ".csv"));
  }
  const std::string path = out_path(g, "equilibrium.csv");
  t.write(path);
  std::cout << t.to_string();
  report(path);
  return 0;
}

int cmd_transport(const Globals& g, const Common& c, const CLI::App& sub, const std::string& grid,
                  const std::string& method, const std::string& mode, double gamma) {
  SweepConfig cfg = base_config(g, c, sub);
  TransportSetup ts;
  ts.base = point_params(cfg.base, cfg.ratio, cfg.base.k1, 0.0);
  const auto lams = parse_samples(c.Lambdas);
  {
    const auto x = grid.find('x');
    if (x == std::string::npos) throw ParameterError("transport grid must look like 24x11");
    ts.Mx = std::stoi(grid.substr(0, x));
    ts.My = std::stoi(grid.substr(x + 1));
  }
  ts.solver.method = parse_steady_method(method);
  ts.mode = parse_fugacity_mode(mode);
  ts.gamma = gamma;
  SpectrumCache cache((fs::path(g.out) / "cache").string());
  ts.cache = &cache;
  const auto pts = transport_sweep(ts, lams);
  CsvTable t({"Lambda", "Lx_over_Lomega", "k1", "J_num", "R", "residual", "method", "iterations",
              "error"});
  for (const auto& pt : pts) {
    std::string err = pt.error;
    std::replace(err.begin(), err.end(), ',', ';');
    t.add_row({format_double(pt.Lambda), format_double(length_ratio(ts.base)),
               format_double(ts.base.k1), format_double(pt.J_left), format_double(pt.R),
               format_double(pt.residual), method, std::to_string(pt.iterations), err});
  }
  const std::string path = out_path(g, "transport.csv");
  t.write(path);
  std::cout << t.to_string();
  report(path);
  return 0;
}

int cmd_pde(const Globals& g, const Common& c, const CLI::App& sub, const std::string& grid) {
  SweepConfig cfg = base_config(g, c, sub);
  const double lam = parse_samples(c.Lambdas).front();
  const ChannelParams p = point_params(cfg.base, cfg.ratio, cfg.base.k1, lam);
  Grid2D g2;
  const auto x = grid.find('x');
  if (x == std::string::npos) throw ParameterError("pde grid must look like 64x41");
  g2.Mx = std::stoi(grid.substr(0, x));
  g2.My = std::stoi(grid.substr(x + 1));
  g2.L = p.L;
  g2.Ycut = 4.0 * derive_scales(p).L_y;
  const auto r = solve_steady_2d(p, lam, g2);
  CsvTable field({"x", "y", "p"});
  for (int i = 0; i < g2.Mx; ++i)
    for (int j = 0; j < g2.My; ++j)
      field.add_row({format_double(g2.x(i)), format_double(g2.y(j)),
                     format_double(r.field.p(g2.index(i, j)))});
  field.write(out_path(g, "pde_field.csv"));
  std::vector<double> xs;
  for (int i = 0; i < g2.Mx; ++i) xs.push_back(g2.x(i));
  auto m = r.field.marginal();
  double s = 0.0;
  for (double v : m) s += v * g2.dx();
  const auto fj = fj_first_order_marginal(p, lam, xs, g2.dx());
  CsvTable marg({"x", "rho_pde", "rho_fj"});
  for (int i = 0; i < g2.Mx; ++i)
    marg.add_row({format_double(xs[i]), format_double(m[i] / s), format_double(fj[i])});
  const std::string path = out_path(g, "pde_marginal.csv");
  marg.write(path);
  std::cout << "steps " << r.report.steps << ", mass drift " << r.report.mass_drift
            << ", max face flux " << r.report.final_flux << "\n";
  report(out_path(g, "pde_field.csv"));
  report(path);
  return 0;
}

int cmd_sweep(const Globals& g, const CLI::App& sub, const std::string& axis,
              const std::string& samples, const std::string& routes) {
  KeyValueMap kv = load_config(g);
  if (sub.count("--axis")) kv["axis"] = axis;
  if (sub.count("--samples")) kv["samples"] = samples;
  if (sub.count("--routes")) kv["routes"] = routes;
  if (!g.grid.empty()) kv["grid"] = g.grid;
  if (!g.bc.empty()) kv["bc"] = g.bc;
  SweepConfig cfg = sweep_config_from(kv);
  cfg.out_dir = g.out;
  cfg.workers = g.workers;
  const CsvTable t = run_sweep(cfg);
  const std::string path = out_path(g, "sweep.csv");
  t.write(path);
  report(path);

  std::vector<PlotRequest> plots;
  const auto has = [&](RouteKind r) {
    return std::find(cfg.routes.begin(), cfg.routes.end(), r) != cfg.routes.end();
  };
  if (cfg.axis == SweepAxis::Lambda && has(RouteKind::thermal)) {
    const std::string f = out_path(g, "barrier_vs_lambda.csv");
    barrier_figure_table(t).write(f);
    report(f);
    plots.push_back({"barrier_vs_lambda", f, "Lambda", {"dF_thermal", "dF_analytic"},
                     "free-energy barrier"});
  }
  if (cfg.axis == SweepAxis::Lambda && has(RouteKind::redfield)) {
    const std::string f = out_path(g, "flux_ratio_vs_lambda.csv");
    flux_figure_table(t).write(f);
    report(f);
    plots.push_back({"flux_ratio_vs_lambda", f, "Lambda", {"flux_ratio", "flux_ratio_analytic"}, "flux ratio"});
  }
  for (const auto& s : emit_plot_scripts(g.out, plots)) report(s);
  return 0;
}

int cmd_converge(const Globals& g, const Common& c, const CLI::App& sub, const std::string& Ns,
                 const std::string& scan) {
  SweepConfig cfg = base_config(g, c, sub);
  const ChannelParams base = point_params(cfg.base, cfg.ratio, cfg.base.k1, 0.0);
  SpectrumCache cache((fs::path(g.out) / "cache").string());
  std::vector<int> ladder;
  for (double v : parse_samples(Ns)) ladder.push_back(static_cast<int>(v));
  const double lam = parse_samples(c.Lambdas).front();
  const auto rows = convergence_study(base, lam, ladder, cfg.My, cfg.bc, &cache);
  CsvTable t({"N", "mismatch", "dF_thermal"});
  for (const auto& r : rows)
    t.add_row({std::to_string(r.N), format_double(r.mismatch), format_double(r.barrier)});
  std::string path = out_path(g, "converge.csv");
  t.write(path);
  std::cout << t.to_string();
  report(path);

  if (!scan.empty()) {
    ThermalRunOptions opt;
    opt.Mx = cfg.Mx;
    opt.My = cfg.My;
    opt.bc = cfg.bc;
    opt.cache = &cache;
    const auto lams = parse_samples(scan);
    const auto pts = thermal_run(base, lams, opt);
    CsvTable s({"Lambda", "mismatch"});
    std::vector<double> sig;
    for (const auto& pt : pts) {
      s.add_row({format_double(pt.Lambda), format_double(pt.mismatch)});
      sig.push_back(pt.mismatch);
    }
    path = out_path(g, "mismatch_scan.csv");
    s.write(path);
    report(path);
    const auto cross = level_crossing(lams, sig, 0.01);
    std::cout << "10% level crossed at Lambda = "
              << (cross ? format_double(*cross) : std::string("none in range")) << "\n";
  }
  return 0;
}

int cmd_extremum(const Globals& g, const Common& c, const CLI::App& sub, const std::string& in,
                 const std::string& xcol, const std::string& ycol, const std::string& route,
                 const std::string& ratios, bool minimum) {
  if (!in.empty()) {
    const CsvTable t = CsvTable::read(in);
    const int cr = t.column("route");
    std::vector<double> xs, ys;
    const auto xv = t.numeric_column(xcol), yv = t.numeric_column(ycol);
    for (std::size_t i = 0; i < t.rows().size(); ++i) {
      if (cr >= 0 && !route.empty() && t.rows()[i][cr] != route) continue;
      xs.push_back(xv[i]);
      ys.push_back(yv[i]);
    }
    const auto r = locate_extremum(xs, ys, !minimum);
    if (!r.found) {
      std::cout << r.message << "\n";
      return 2;
    }
    std::cout << "Lambda_M = " << format_double(r.Lambda_M) << " +- " << format_double(r.uncertainty)
              << ", value " << format_double(r.value) << ", fit rms " << format_double(r.residual)
              << "\n";
    return 0;
  }
  SweepConfig cfg = base_config(g, c, sub);
  SpectrumCache cache((fs::path(g.out) / "cache").string());
  const auto lams = parse_samples(c.Lambdas);
  CsvTable t({"Lx_over_Lomega", "Lx2_over_Lomega2", "Lambda_M", "uncertainty", "found", "message"});
  std::vector<double> xs, ys;
  for (double ratio : parse_samples(ratios)) {
    ThermalRunOptions opt;
    opt.Mx = cfg.Mx;
    opt.My = cfg.My;
    opt.bc = cfg.bc;
    opt.cache = &cache;
    const auto pts = thermal_run(point_params(cfg.base, ratio, cfg.base.k1, 0.0), lams, opt);
    std::vector<double> dF;
    for (const auto& pt : pts) dF.push_back(pt.barrier);
    const auto r = locate_extremum(lams, dF, true);
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    t.add_row({format_double(ratio), format_double(ratio * ratio),
               format_double(r.found ? r.Lambda_M : NAN), format_double(r.uncertainty),
               r.found ? "1" : "0", msg});
    if (r.found) {
      xs.push_back(ratio * ratio);
      ys.push_back(r.Lambda_M);
    }
  }
  const std::string path = out_path(g, "maximum_vs_geometry.csv");
  t.write(path);
  std::cout << t.to_string();
  report(path);
  if (xs.size() >= 3) {
    const auto f = scaling_fit(xs, ys);
    std::cout << "Lambda_M vs Lx^2/Lomega^2: slope " << f.slope << ", intercept " << f.intercept
              << ", R^2 " << f.r2 << (f.monotone_increasing ? ", monotone" : ", not monotone")
              << "\n";
  }
  for (const auto& s : emit_plot_scripts(
           g.out, {{"maximum_vs_geometry", path, "Lx2_over_Lomega2", {"Lambda_M"}, "barrier maximum"}}))
    report(s);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum Fick-Jacobs channel transport: analytics, lattice and PDE routes"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "flat key = value parameter file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--workers", g.workers, "concurrent sweep points")->check(CLI::PositiveNumber);
  app.add_option("--grid", g.grid, "lattice size MxxMy, e.g. 50x31");
  app.add_option("--bc", g.bc, "x boundary for the lattice")->check(CLI::IsMember({"periodic", "open"}));

  Common c;
  auto add_common = [&c](CLI::App* s) {
    s->add_option("--Lambda", c.Lambdas, "Lambda samples: list, lin:a:b:n or log:a:b:n");
    s->add_option("--ratio", c.ratio, "L / L_omega");
    s->add_option("--k1", c.k1, "corrugation amplitude");
  };

  auto* analytic = app.add_subcommand("analytic", "closed-form barrier and flux correction");
  add_common(analytic);
  bool general = false;
  analytic->add_flag("--general", general, "use transverse quadratures instead of closed forms");

  auto* equilibrium = app.add_subcommand("equilibrium", "thermal marginal from the lattice spectrum");
  add_common(equilibrium);

  auto* transport = app.add_subcommand("transport", "Redfield steady-state current and flux ratio");
  add_common(transport);
  std::string tgrid = "24x11", method = "schur", mode = "calibrated";
  double gamma = 0.0;
  transport->add_option("--transport-grid", tgrid, "lattice for the transport run");
  transport->add_option("--method", method)->check(CLI::IsMember({"schur", "direct", "relax"}));
  transport->add_option("--fugacity", mode)->check(CLI::IsMember({"direct", "calibrated"}));
  transport->add_option("--gamma", gamma, "lead coupling (default 1e-3 hbar omega)");

  auto* pde = app.add_subcommand("pde", "2D quantum Smoluchowski steady state");
  add_common(pde);
  std::string pgrid = "64x41";
  pde->add_option("--pde-grid", pgrid, "finite-volume cells MxxMy");

  auto* sweep = app.add_subcommand("sweep", "parameter sweep over Lambda, geometry or k1");
  std::string axis = "Lambda", samples, routes;
  sweep->add_option("--axis", axis)->check(CLI::IsMember({"Lambda", "geometry", "k1"}));
  sweep->add_option("--samples", samples, "list, lin:a:b:n or log:a:b:n");
  sweep->add_option("--routes", routes, "comma list of analytic, thermal, redfield, pde");

  auto* converge = app.add_subcommand("converge", "mismatch against grid size");
  add_common(converge);
  std::string Ns = "10,20,50,100", scan;
  converge->add_option("--N", Ns, "Mx ladder");
  converge->add_option("--scan", scan, "also scan the mismatch over these Lambda values");

  auto* extremum = app.add_subcommand("extremum", "locate the barrier maximum or flux minimum");
  add_common(extremum);
  std::string in, xcol = "Lambda", ycol = "dF", route, ratios = "8,12,16";
  bool minimum = false;
  extremum->add_option("--in", in, "read samples from a CSV instead of running sweeps");
  extremum->add_option("--x", xcol);
  extremum->add_option("--y", ycol);
  extremum->add_option("--route", route, "filter rows of a sweep table");
  extremum->add_option("--ratios", ratios, "geometries L / L_omega for the scaling study");
  extremum->add_flag("--min", minimum, "look for a minimum");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*analytic) return cmd_analytic(g, c, *analytic, general);
    if (*equilibrium) return cmd_equilibrium(g, c, *equilibrium);
    if (*transport) return cmd_transport(g, c, *transport, tgrid, method, mode, gamma);
    if (*pde) return cmd_pde(g, c, *pde, pgrid);
    if (*sweep) return cmd_sweep(g, *sweep, axis, samples, routes);
    if (*converge) return cmd_converge(g, c, *converge, Ns, scan);
    if (*extremum) return cmd_extremum(g, c, *extremum, in, xcol, ycol, route, ratios, minimum);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
