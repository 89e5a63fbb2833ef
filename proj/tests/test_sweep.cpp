#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qfj/csv.hpp"
#include "qfj/sweep.hpp"

using namespace qfj;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("qfj_sweep_test_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("sample lists") {
  CHECK(parse_samples("0.1,0.2,0.5") == std::vector<double>{0.1, 0.2, 0.5});
  const auto l = parse_samples("lin:0:1:5");
  REQUIRE(l.size() == 5);
  CHECK(l[2] == doctest::Approx(0.5));
  const auto g = parse_samples("log:0.01:1:3");
  REQUIRE(g.size() == 3);
  CHECK(g[1] == doctest::Approx(0.1));
  CHECK(g[2] == doctest::Approx(1.0));
  CHECK_THROWS(parse_samples("lin:0:1"));
  CHECK_THROWS(parse_samples("0.1,abc"));
}

TEST_CASE("config parsing and validation") {
  const auto kv = parse_key_value(
      "k1 = 0.3\naxis = Lambda\nsamples = 0.02,0.05\nroutes = analytic,thermal\n"
      "grid = 40x21\ntransport_grid = 10x5\nbc = open\nworkers = 3\nout = somewhere\n");
  const SweepConfig c = sweep_config_from(kv);
  CHECK(c.base.k1 == 0.3);
  CHECK(c.samples.size() == 2);
  CHECK(c.routes.size() == 2);
  CHECK(c.routes[1] == RouteKind::thermal);
  CHECK(c.Mx == 40);
  CHECK(c.My == 21);
  CHECK(c.transport_Mx == 10);
  CHECK(c.bc == BoundaryX::open);
  CHECK(c.workers == 3);
  CHECK(c.out_dir == "somewhere");

  SweepConfig bad = c;
  bad.samples = {0.2, 0.1};
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = c;
  bad.samples.clear();
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = c;
  bad.routes.clear();
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = c;
  bad.My = 20;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  CHECK(parse_route("redfield") == RouteKind::redfield);
  CHECK(to_string(SweepAxis::geometry) == "geometry");
  CHECK_THROWS(parse_axis("temperature"));
}

TEST_CASE("csv formatting and parsing") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(NAN) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  CsvTable t({"a", "b"});
  t.add_row({"1", "3"});
  t.add_row({format_double(2.5), ""});
  CHECK_THROWS(t.add_row({"1"}));
  CHECK_THROWS(t.add_row({"1,2", "3"}));
  const CsvTable u = CsvTable::parse(t.to_string());
  CHECK(u.header() == t.header());
  CHECK(u.rows() == t.rows());
  CHECK(std::isnan(u.numeric_column("b")[1]));
  CHECK(u.column("missing") == -1);
  CHECK_THROWS(u.numeric_column("missing"));
}

TEST_CASE("extremum location") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 20; ++i) {
    xs.push_back(0.05 * i);
    ys.push_back(-(xs.back() - 0.4) * (xs.back() - 0.4));
  }
  const auto r = locate_extremum(xs, ys, true);
  CHECK(r.found);
  CHECK(r.Lambda_M == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(r.residual < 1e-12);
  CHECK(r.window_lo < 0.4);
  CHECK(r.window_hi > 0.4);

  std::vector<double> up;
  for (double x : xs) up.push_back(x * x);
  const auto m = locate_extremum(xs, up, true);
  CHECK_FALSE(m.found);
  CHECK_FALSE(m.message.empty());

  const auto mn = locate_extremum(xs, up, false);
  CHECK_FALSE(mn.found);
  CHECK_THROWS(locate_extremum({1, 2, 3}, {1, 2, 3}, true));
}

TEST_CASE("scaling fit and level crossing") {
  const auto f = scaling_fit({1, 2, 3, 4}, {0.5, 1.5, 2.5, 3.5});
  CHECK(f.slope == doctest::Approx(1.0));
  CHECK(f.intercept == doctest::Approx(-0.5));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(f.monotone_increasing);
  CHECK_FALSE(scaling_fit({1, 2, 3}, {3, 1, 2}).monotone_increasing);
  CHECK_THROWS(scaling_fit({1, 1, 1}, {1, 2, 3}));
  CHECK_THROWS(scaling_fit({1, 2}, {1, 2}));

  const auto c = level_crossing({0.1, 0.2, 0.4}, {1e-4, 1e-3, 1e-1}, 1e-2);
  REQUIRE(c.has_value());
  CHECK(*c == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_FALSE(level_crossing({0.1, 0.2}, {1e-4, 1e-3}, 1e-2).has_value());
}

TEST_CASE("analytic sweep rows") {
  SweepConfig c;
  c.base.k1 = 0.3;
  c.samples = {0.0, 0.05, 0.1, 0.2};
  c.use_cache = false;
  c.out_dir = scratch("analytic").string();
  const CsvTable t = run_sweep(c);
  CHECK(t.header() == sweep_header());
  REQUIRE(t.rows().size() == 4);
  const auto dF = t.numeric_column("dF");
  const auto lam = t.numeric_column("Lambda");
  for (std::size_t i = 0; i < dF.size(); ++i)
    CHECK(dF[i] == doctest::Approx(0.5 * std::log(1.3 / 0.7) + 1.2 * lam[i]).epsilon(1e-13));
  CHECK(t.numeric_column("Lx_over_Lomega")[0] == doctest::Approx(16.0));
}

TEST_CASE("failed points keep their row") {
  SweepConfig c;
  c.base.k1 = 0.3;
  c.samples = {0.05, 0.3};
  c.routes = {RouteKind::analytic, RouteKind::pde};
  c.pde_Mx = 16;
  c.pde_My = 11;
  c.use_cache = false;
  c.out_dir = scratch("failed").string();
  const CsvTable t = run_sweep(c);
  REQUIRE(t.rows().size() == 4);
  const int err = t.column("error"), route = t.column("route");
  CHECK(t.rows()[1][route] == "pde");
  CHECK(t.rows()[1][err].empty());
  CHECK(t.rows()[3][route] == "pde");
  CHECK_FALSE(t.rows()[3][err].empty());
  CHECK(t.rows()[3][t.column("dF")] == "nan");
}

TEST_CASE("sweeps are deterministic and resumable") {
  SweepConfig c;
  c.base.k1 = 0.3;
  c.samples = {0.02, 0.05, 0.1};
  c.routes = {RouteKind::analytic, RouteKind::thermal};
  c.Mx = 12;
  c.My = 11;
  c.ratio = 4.0;
  c.workers = 2;
  c.out_dir = scratch("resume").string();
  const std::string first = run_sweep(c).to_string();
  c.use_cache = false;
  CHECK(run_sweep(c).to_string() == first);
  c.use_cache = true;

  // tamper with a cached group: a restart must take rows from disk
  const fs::path cache = fs::path(c.out_dir) / "cache";
  int patched = 0;
  for (const auto& e : fs::directory_iterator(cache)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("rows_", 0) != 0) continue;
    CsvTable t = CsvTable::read(e.path().string());
    if (t.rows()[0][t.column("route")] != "thermal") continue;
    CsvTable u(t.header());
    for (auto row : t.rows()) {
      row[t.column("mismatch")] = "12345";
      u.add_row(row);
    }
    u.write(e.path().string());
    ++patched;
  }
  CHECK(patched == 1);
  const CsvTable again = run_sweep(c);
  CHECK(again.numeric_column("mismatch")[1] == 12345.0);
}

TEST_CASE("figure tables and plot scripts") {
  SweepConfig c;
  c.base.k1 = 0.3;
  c.samples = {0.02, 0.05};
  c.use_cache = false;
  const CsvTable t = run_sweep(c);
  const CsvTable barrier = barrier_figure_table(t);
  CHECK(barrier.column("Lambda") == 0);
  CHECK(barrier.column("dF_thermal") >= 0);
  CHECK(barrier.column("dF_analytic") >= 0);
  const CsvTable flux = flux_figure_table(t);
  CHECK(flux.column("flux_ratio") >= 0);

  const fs::path d = scratch("plots");
  barrier.write((d / "barrier.csv").string());
  flux.write((d / "flux.csv").string());
  CsvTable maxima({"Lx2_over_Lomega2", "Lambda_M", "uncertainty"});
  maxima.add_row({"64", "0.5", "0.1"});
  maxima.write((d / "maxima.csv").string());
  const auto paths = emit_plot_scripts(
      d.string(), {{"barrier", (d / "barrier.csv").string(), "Lambda", {"dF_thermal", "dF_analytic"}, "barrier"},
                   {"maxima", (d / "maxima.csv").string(), "Lx2_over_Lomega2", {"Lambda_M"}, "maxima"},
                   {"flux", (d / "flux.csv").string(), "Lambda", {"flux_ratio"}, "flux"}});
  REQUIRE(paths.size() == 3);
  const std::string gp = slurp(paths[0]);
  CHECK(gp.find("barrier.csv") != std::string::npos);
  CHECK(gp.find("dF_thermal") != std::string::npos);
  CHECK(slurp(paths[1]).find("Lambda_M") != std::string::npos);
  CHECK_THROWS(emit_plot_scripts(d.string(), {{"bad", (d / "flux.csv").string(), "Lambda", {"nope"}, ""}}));
}

TEST_CASE("convergence ladder") {
  ChannelParams base;
  base.k1 = 0.3;
  base.k0 = k0_for_length_ratio(base, 4.0);
  const auto rows = convergence_study(base, 0.05, {8, 16}, 11, BoundaryX::periodic);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.mismatch >= 0.0);
    CHECK(std::isfinite(r.barrier));
  }
}
