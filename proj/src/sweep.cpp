#include "qfj/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "qfj/fick_jacobs.hpp"
#include "qfj/smoluchowski.hpp"
#include "qfj/thermal_equilibrium.hpp"

namespace qfj {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    const auto a = cur.find_first_not_of(" \t");
    const auto b = cur.find_last_not_of(" \t");
    out.push_back(a == std::string::npos ? "" : cur.substr(a, b - a + 1));
  }
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ParameterError("not a number: '" + s + "'");
  return v;
}

std::pair<int, int> parse_grid(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ParameterError("grid must look like MxxMy, e.g. 50x31");
  return {static_cast<int>(to_double(s.substr(0, x))), static_cast<int>(to_double(s.substr(x + 1)))};
}
}  // namespace

SweepAxis parse_axis(const std::string& s) {
  if (s == "Lambda" || s == "lambda") return SweepAxis::Lambda;
  if (s == "geometry") return SweepAxis::geometry;
  if (s == "k1") return SweepAxis::k1;
  throw ParameterError("axis must be Lambda, geometry or k1");
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Lambda: return "Lambda";
    case SweepAxis::geometry: return "geometry";
    case SweepAxis::k1: return "k1";
  }
  return "?";
}

RouteKind parse_route(const std::string& s) {
  if (s == "analytic") return RouteKind::analytic;
  if (s == "thermal") return RouteKind::thermal;
  if (s == "redfield") return RouteKind::redfield;
  if (s == "pde") return RouteKind::pde;
  throw ParameterError("route must be analytic, thermal, redfield or pde");
}

std::string to_string(RouteKind r) {
  switch (r) {
    case RouteKind::analytic: return "analytic";
    case RouteKind::thermal: return "thermal";
    case RouteKind::redfield: return "redfield";
    case RouteKind::pde: return "pde";
  }
  return "?";
}

std::vector<double> parse_samples(const std::string& s) {
  std::vector<double> v;
  if (s.rfind("lin:", 0) == 0 || s.rfind("log:", 0) == 0) {
    const auto f = split(s.substr(4), ':');
    if (f.size() != 3) throw ParameterError("sample range must be lin:a:b:n or log:a:b:n");
    const double a = to_double(f[0]), b = to_double(f[1]);
    const int n = static_cast<int>(to_double(f[2]));
    if (n < 2) throw ParameterError("sample range needs n >= 2");
    const bool lg = s[1] == 'o';
    if (lg && !(a > 0.0 && b > 0.0)) throw ParameterError("log range needs positive ends");
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / (n - 1);
      v.push_back(lg ? std::exp(std::log(a) + t * (std::log(b) - std::log(a))) : a + t * (b - a));
    }
    return v;
  }
  for (const auto& f : split(s, ','))
    if (!f.empty()) v.push_back(to_double(f));
  return v;
}

void SweepConfig::validate() const {
  if (samples.empty()) throw ParameterError("sweep needs at least one sample");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i] > samples[i - 1])) throw ParameterError("samples must be strictly increasing");
  if (routes.empty()) throw ParameterError("sweep needs at least one route");
  if (workers < 1) throw ParameterError("workers must be positive");
  if (Mx < 2 || My < 3 || My % 2 == 0) throw ParameterError("thermal grid must be Mx >= 2, odd My >= 3");
  if (transport_Mx < 2 || transport_My < 3 || transport_My % 2 == 0)
    throw ParameterError("transport grid must be Mx >= 2, odd My >= 3");
  if (pde_Mx < 3 || pde_My < 3) throw ParameterError("pde grid must be at least 3 x 3");
  ChannelParams b = base;
  b.validate();
}

SweepConfig sweep_config_from(const KeyValueMap& kv) {
  SweepConfig c;
  c.base = params_from_config(kv);
  auto str = [&](const char* k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = str("axis")) c.axis = parse_axis(*v);
  if (auto v = str("samples")) c.samples = parse_samples(*v);
  if (auto v = str("routes")) {
    c.routes.clear();
    for (const auto& r : split(*v, ','))
      if (!r.empty()) c.routes.push_back(parse_route(r));
  }
  c.Lambda = get_double(kv, "Lambda", c.Lambda);
  c.ratio = kv.count("Lx_over_Lomega") ? get_double(kv, "Lx_over_Lomega", c.ratio)
                                       : (kv.count("k0") ? 0.0 : c.ratio);
  if (auto v = str("grid")) std::tie(c.Mx, c.My) = parse_grid(*v);
  if (auto v = str("transport_grid")) std::tie(c.transport_Mx, c.transport_My) = parse_grid(*v);
  if (auto v = str("pde_grid")) std::tie(c.pde_Mx, c.pde_My) = parse_grid(*v);
  if (auto v = str("bc")) c.bc = parse_boundary(*v);
  if (auto v = str("fugacity")) c.fugacity = parse_fugacity_mode(*v);
  if (auto v = str("method")) c.method = parse_steady_method(*v);
  if (auto v = str("out")) c.out_dir = *v;
  c.workers = static_cast<int>(get_double(kv, "workers", c.workers));
  return c;
}

const std::vector<std::string>& sweep_header() {
  static const std::vector<std::string> h = {
      "axis_value", "Lambda", "Lx_over_Lomega", "k1",       "route", "dF",    "dF_analytic",
      "flux_ratio", "J_num",  "mismatch",       "residual", "valid", "error"};
  return h;
}

ChannelParams point_params(const ChannelParams& base, double ratio, double k1, double Lambda) {
  ChannelParams p = base;
  if (ratio > 0.0) p.k0 = k0_for_length_ratio(p, ratio);
  p.k1 = k1;
  if (Lambda > 0.0) p.beta = beta_for_lambda(p, Lambda);
  p.validate();
  return p;
}

namespace {

struct Point {
  double axis_value, Lambda, ratio, k1;
};

struct Group {
  RouteKind route;
  std::vector<Point> points;
};

struct RowValues {
  double dF = kNaN, dF_analytic = kNaN, flux_ratio = kNaN, J_num = kNaN, mismatch = kNaN,
         residual = kNaN;
  bool valid = false;
  std::string error;
};

std::vector<std::string> format_row(const Point& pt, RouteKind r, double ratio_out,
                                    const RowValues& v) {
  std::string err = v.error;
  std::replace(err.begin(), err.end(), ',', ';');
  std::replace(err.begin(), err.end(), '\n', ' ');
  return {format_double(pt.axis_value), format_double(pt.Lambda), format_double(ratio_out),
          format_double(pt.k1),         to_string(r),             format_double(v.dF),
          format_double(v.dF_analytic), format_double(v.flux_ratio), format_double(v.J_num),
          format_double(v.mismatch),    format_double(v.residual), v.valid ? "1" : "0",
          err};
}

std::string group_key(const SweepConfig& c, const Group& g) {
  std::ostringstream os;
  os.precision(17);
  os << "v1|" << to_string(g.route) << '|' << c.base.k0 << '|' << c.base.L << '|' << c.base.hbar
     << '|' << c.base.mass << '|' << c.Mx << 'x' << c.My << '|' << to_string(c.bc) << '|'
     << c.transport_Mx << 'x' << c.transport_My << '|' << c.pde_Mx << 'x' << c.pde_My << '|'
     << to_string(c.fugacity) << '|' << to_string(c.method);
  for (const auto& p : g.points) os << '|' << p.axis_value << ',' << p.Lambda << ',' << p.ratio << ',' << p.k1;
  const std::string s = os.str();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<RowValues> run_group(const SweepConfig& c, const Group& g, const SpectrumCache* cache) {
  std::vector<RowValues> out(g.points.size());
  const Point& first = g.points.front();
  for (std::size_t i = 0; i < g.points.size(); ++i) {
    const Point& pt = g.points[i];
    try {
      const ChannelParams p = point_params(c.base, pt.ratio, pt.k1, pt.Lambda);
      out[i].valid = check_validity(p).ok();
      out[i].dF_analytic = free_energy_barrier(p, pt.Lambda);
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  }
  std::vector<double> lams;
  for (const auto& pt : g.points) lams.push_back(pt.Lambda);

  switch (g.route) {
    case RouteKind::analytic:
      for (std::size_t i = 0; i < g.points.size(); ++i) {
        if (!out[i].error.empty()) continue;
        const Point& pt = g.points[i];
        const ChannelParams p = point_params(c.base, pt.ratio, pt.k1, pt.Lambda);
        out[i].dF = out[i].dF_analytic;
        out[i].flux_ratio = 1.0 + pt.Lambda * harmonic_flux_correction(p);
      }
      break;
    case RouteKind::thermal: {
      ThermalRunOptions opt;
      opt.Mx = c.Mx;
      opt.My = c.My;
      opt.bc = c.bc;
      opt.cache = cache;
      const ChannelParams base = point_params(c.base, first.ratio, first.k1, 0.0);
      try {
        const auto pts = thermal_run(base, lams, opt);
        for (std::size_t i = 0; i < pts.size(); ++i) {
          out[i].dF = pts[i].barrier;
          out[i].mismatch = pts[i].mismatch;
          if (!pts[i].warnings.empty() && out[i].error.empty()) out[i].error = "warning: " + pts[i].warnings.front();
        }
      } catch (const std::exception& e) {
        for (auto& r : out) r.error = e.what();
      }
      break;
    }
    case RouteKind::redfield: {
      TransportSetup ts;
      ts.base = point_params(c.base, first.ratio, first.k1, 0.0);
      ts.Mx = c.transport_Mx;
      ts.My = c.transport_My;
      ts.mode = c.fugacity;
      ts.solver.method = c.method;
      ts.cache = cache;
      try {
        const auto pts = transport_sweep(ts, lams);
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (!pts[i].error.empty()) {
            out[i].error = pts[i].error;
            continue;
          }
          out[i].flux_ratio = pts[i].R;
          out[i].J_num = pts[i].J_left;
          out[i].residual = pts[i].residual;
        }
      } catch (const std::exception& e) {
        for (auto& r : out) r.error = e.what();
      }
      break;
    }
    case RouteKind::pde:
      for (std::size_t i = 0; i < g.points.size(); ++i) {
        const Point& pt = g.points[i];
        try {
          const ChannelParams p = point_params(c.base, pt.ratio, pt.k1, pt.Lambda);
          Grid2D grid;
          grid.Mx = c.pde_Mx;
          grid.My = c.pde_My;
          grid.L = p.L;
          grid.Ycut = 4.0 * derive_scales(p).L_y;
          const auto r = solve_steady_2d(p, pt.Lambda, grid);
          std::vector<double> xs;
          for (int k = 0; k < grid.Mx; ++k) xs.push_back(grid.x(k));
          const auto marg = r.field.marginal();
          const auto [lo, hi] = std::minmax_element(marg.begin(), marg.end());
          out[i].dF = std::log(*hi / *lo);
          std::vector<double> m = marg;
          double s = 0.0;
          for (double v : m) s += v * grid.dx();
          for (double& v : m) v /= s;
          out[i].mismatch =
              mismatch_score(fj_first_order_marginal(p, pt.Lambda, xs, grid.dx()), m, grid.dx());
        } catch (const std::exception& e) {
          out[i].error = e.what();
        }
      }
      break;
  }
  return out;
}

}  // namespace

CsvTable run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  std::vector<Point> points;
  for (double s : cfg.samples) {
    Point pt{s, cfg.Lambda, cfg.ratio, cfg.base.k1};
    if (cfg.axis == SweepAxis::Lambda) pt.Lambda = s;
    if (cfg.axis == SweepAxis::geometry) pt.ratio = s;
    if (cfg.axis == SweepAxis::k1) pt.k1 = s;
    points.push_back(pt);
  }
  // a Lambda sweep shares one spectrum per route, other axes change H per point
  std::vector<Group> groups;
  for (RouteKind r : cfg.routes) {
    if (cfg.axis == SweepAxis::Lambda) {
      groups.push_back({r, points});
    } else {
      for (const auto& pt : points) groups.push_back({r, {pt}});
    }
  }

  const std::filesystem::path cache_dir = std::filesystem::path(cfg.out_dir) / "cache";
  std::optional<SpectrumCache> spec_cache;
  if (cfg.use_cache) {
    std::filesystem::create_directories(cache_dir);
    spec_cache.emplace(cache_dir.string());
  }

  std::vector<std::vector<std::vector<std::string>>> results(groups.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t gi = next++; gi < groups.size(); gi = next++) {
      const Group& g = groups[gi];
      const std::string file = (cache_dir / ("rows_" + group_key(cfg, g) + ".csv")).string();
      if (cfg.use_cache && std::filesystem::exists(file)) {
        try {
          results[gi] = CsvTable::read(file).rows();
          if (results[gi].size() == g.points.size()) continue;
        } catch (const std::exception&) {
        }
      }
      const auto vals = run_group(cfg, g, spec_cache ? &*spec_cache : nullptr);
      CsvTable part(sweep_header());
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const Point& pt = g.points[i];
        const double ratio_out = pt.ratio > 0.0 ? pt.ratio : length_ratio(cfg.base);
        part.add_row(format_row(pt, g.route, ratio_out, vals[i]));
      }
      results[gi] = part.rows();
      if (cfg.use_cache) {
        const std::string tmp = file + ".part";
        part.write(tmp);
        std::filesystem::rename(tmp, file);
      }
    }
  };
  const int nw = std::min<int>(cfg.workers, static_cast<int>(groups.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // sample-major order, routes in config order
  CsvTable table(sweep_header());
  for (std::size_t s = 0; s < points.size(); ++s)
    for (std::size_t r = 0; r < cfg.routes.size(); ++r) {
      const std::size_t gi = cfg.axis == SweepAxis::Lambda ? r : r * points.size() + s;
      const std::size_t row = cfg.axis == SweepAxis::Lambda ? s : 0;
      table.add_row(results[gi][row]);
    }
  return table;
}

ExtremumResult locate_extremum(const std::vector<double>& xs, const std::vector<double>& ys,
                               bool find_max) {
  if (xs.size() != ys.size()) throw std::invalid_argument("locate_extremum: ragged input");
  if (xs.size() < 5) throw std::invalid_argument("locate_extremum needs at least 5 samples");
  ExtremumResult r;
  r.is_max = find_max;
  const int n = static_cast<int>(xs.size());
  int m = 0;
  for (int i = 1; i < n; ++i)
    if (find_max ? ys[i] > ys[m] : ys[i] < ys[m]) m = i;
  if (m == 0 || m == n - 1) {
    r.message = "no interior extremum: discrete " + std::string(find_max ? "maximum" : "minimum") +
                " sits on the sampled boundary";
    return r;
  }
  const int lo = std::clamp(m - 2, 0, n - 5);
  Eigen::Matrix<double, 5, 3> X;
  Eigen::Matrix<double, 5, 1> Y;
  const double x0 = xs[m];
  for (int k = 0; k < 5; ++k) {
    const double t = xs[lo + k] - x0;
    X(k, 0) = t * t;
    X(k, 1) = t;
    X(k, 2) = 1.0;
    Y(k) = ys[lo + k];
  }
  const Eigen::Matrix3d XtX = X.transpose() * X;
  const Eigen::Vector3d c = XtX.ldlt().solve(X.transpose() * Y);
  const double a = c(0), b = c(1);
  if (a == 0.0 || (find_max ? a > 0.0 : a < 0.0)) {
    r.message = "fitted parabola has the wrong curvature";
    return r;
  }
  const double rss = (X * c - Y).squaredNorm();
  r.residual = std::sqrt(rss / 5.0);
  const Eigen::Matrix3d cov = (rss / 2.0) * XtX.inverse();
  const Eigen::Vector3d grad(b / (2.0 * a * a), -1.0 / (2.0 * a), 0.0);
  const double se = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
  const double spacing = 0.5 * (xs[std::min(m + 1, n - 1)] - xs[std::max(m - 1, 0)]);
  r.uncertainty = std::hypot(se, 0.25 * spacing);
  r.Lambda_M = x0 - b / (2.0 * a);
  r.value = c(2) - b * b / (4.0 * a);
  r.window_lo = xs[lo];
  r.window_hi = xs[lo + 4];
  if (!(r.Lambda_M > xs.front() && r.Lambda_M < xs.back())) {
    r.message = "parabola vertex falls outside the sampled range";
    return r;
  }
  r.found = true;
  return r;
}

LineFit scaling_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 3)
    throw std::invalid_argument("scaling_fit needs at least 3 points");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 1e-300 * std::max(1.0, mx * mx)))
    throw std::invalid_argument("scaling_fit: abscissae are degenerate");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (f.intercept + f.slope * xs[i]);
    ss_res += e * e;
    ss_tot += (ys[i] - my) * (ys[i] - my);
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
  f.monotone_increasing = true;
  for (std::size_t k = 1; k < order.size(); ++k)
    if (!(ys[order[k]] > ys[order[k - 1]])) f.monotone_increasing = false;
  return f;
}

std::vector<ConvergenceRow> convergence_study(const ChannelParams& base, double Lambda,
                                              const std::vector<int>& Ns, int My, BoundaryX bc,
                                              const SpectrumCache* cache) {
  std::vector<ConvergenceRow> rows;
  const double lam[] = {Lambda};
  for (int N : Ns) {
    ThermalRunOptions opt;
    opt.Mx = N;
    opt.My = My;
    opt.bc = bc;
    opt.cache = cache;
    const auto pts = thermal_run(base, lam, opt);
    rows.push_back({N, pts.front().mismatch, pts.front().barrier});
  }
  return rows;
}

std::optional<double> level_crossing(const std::vector<double>& xs, const std::vector<double>& ys,
                                     double level) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (ys[i - 1] < level && ys[i] >= level) {
      const double a = std::log(ys[i - 1]), b = std::log(ys[i]), t = std::log(level);
      return xs[i - 1] + (xs[i] - xs[i - 1]) * (t - a) / (b - a);
    }
  }
  return std::nullopt;
}

namespace {
std::map<double, std::pair<double, double>> collect(const CsvTable& sweep, const std::string& route,
                                                    const std::string& col_a,
                                                    const std::string& col_b) {
  const int cr = sweep.column("route"), cl = sweep.column("Lambda");
  const int ca = sweep.column(col_a), cb = col_b.empty() ? -1 : sweep.column(col_b);
  if (cr < 0 || cl < 0 || ca < 0) throw std::invalid_argument("sweep table lacks required columns");
  std::map<double, std::pair<double, double>> m;
  for (const auto& r : sweep.rows()) {
    if (r[cr] != route) continue;
    m[std::stod(r[cl])] = {std::stod(r[ca]), cb >= 0 ? std::stod(r[cb]) : kNaN};
  }
  return m;
}
}  // namespace

CsvTable barrier_figure_table(const CsvTable& sweep) {
  const auto th = collect(sweep, "thermal", "dF", "dF_analytic");
  CsvTable t({"Lambda", "dF_thermal", "dF_analytic"});
  for (const auto& [lam, v] : th)
    t.add_row({format_double(lam), format_double(v.first), format_double(v.second)});
  return t;
}

CsvTable flux_figure_table(const CsvTable& sweep) {
  const auto rf = collect(sweep, "redfield", "flux_ratio", "");
  const auto an = collect(sweep, "analytic", "flux_ratio", "");
  CsvTable t({"Lambda", "flux_ratio", "flux_ratio_analytic"});
  for (const auto& [lam, v] : rf) {
    auto it = an.find(lam);
    t.add_row({format_double(lam), format_double(v.first),
               format_double(it == an.end() ? kNaN : it->second.first)});
  }
  return t;
}

std::vector<std::string> emit_plot_scripts(const std::string& dir,
                                           const std::vector<PlotRequest>& requests) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (const auto& req : requests) {
    const CsvTable t = CsvTable::read(req.csv);
    std::vector<std::string> cols{req.x};
    cols.insert(cols.end(), req.y.begin(), req.y.end());
    std::vector<int> idx;
    for (const auto& c : cols) {
      const int k = t.column(c);
      if (k < 0) throw std::invalid_argument(req.csv + ": missing column '" + c + "'");
      idx.push_back(k + 1);
    }
    std::ostringstream gp;
    gp << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set title '" << req.title << "'\n"
       << "set xlabel '" << req.x << "'\n"
       << "set terminal pngcairo size 800,600\n"
       << "set output '" << req.name << ".png'\n"
       << "plot";
    for (std::size_t k = 0; k < req.y.size(); ++k) {
      gp << (k ? ", \\\n    " : " ") << "'" << std::filesystem::path(req.csv).filename().string()
         << "' using " << idx[0] << ':' << idx[k + 1] << " with linespoints title '" << req.y[k]
         << "'";
    }
    gp << '\n';
    const std::string path = (std::filesystem::path(dir) / (req.name + ".gp")).string();
    std::ofstream out(path, std::ios::trunc);
    out << gp.str();
    if (!out) throw std::runtime_error("cannot write " + path);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace qfj
