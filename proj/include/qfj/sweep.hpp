#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qfj/core_model.hpp"
#include "qfj/csv.hpp"
#include "qfj/grid_hamiltonian.hpp"
#include "qfj/redfield.hpp"

namespace qfj {

enum class SweepAxis { Lambda, geometry, k1 };
enum class RouteKind { analytic, thermal, redfield, pde };

SweepAxis parse_axis(const std::string& s);
std::string to_string(SweepAxis a);
RouteKind parse_route(const std::string& s);
std::string to_string(RouteKind r);

/// "0.1,0.2,0.5", "lin:a:b:n" or "log:a:b:n".
std::vector<double> parse_samples(const std::string& s);

struct SweepConfig {
  ChannelParams base;  // k0 is replaced by the geometry ratio when ratio > 0
  SweepAxis axis = SweepAxis::Lambda;
  std::vector<double> samples;
  std::vector<RouteKind> routes{RouteKind::analytic};
  double Lambda = 0.05;  // fixed value when the axis is not Lambda
  double ratio = 16.0;   // L / L_omega when the axis is not geometry; <= 0 keeps base.k0
  int Mx = 50;
  int My = 31;
  BoundaryX bc = BoundaryX::periodic;
  int transport_Mx = 24;
  int transport_My = 11;
  int pde_Mx = 64;
  int pde_My = 41;
  FugacityMode fugacity = FugacityMode::calibrated;
  SteadyMethod method = SteadyMethod::schur;
  std::string out_dir = "qfj_out";
  int workers = 1;
  bool use_cache = true;

  /// Throws ParameterError on empty or unsorted samples, no routes, bad grids.
  void validate() const;
};

SweepConfig sweep_config_from(const KeyValueMap& kv);

const std::vector<std::string>& sweep_header();

/// One row per (sample, route) in sample-major order. Per-point failures land
/// in the error column. Completed groups are cached under out_dir/cache and
/// reused on restart.
CsvTable run_sweep(const SweepConfig& cfg);

struct ExtremumResult {
  bool found = false;
  std::string message;
  double Lambda_M = 0.0;
  double value = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double residual = 0.0;     // rms of the 5-point parabola fit
  double uncertainty = 0.0;  // standard error of the vertex, combined with a quarter spacing
  bool is_max = true;
};

ExtremumResult locate_extremum(const std::vector<double>& xs, const std::vector<double>& ys,
                               bool find_max);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  bool monotone_increasing = false;
};

LineFit scaling_fit(const std::vector<double>& xs, const std::vector<double>& ys);

struct ConvergenceRow {
  int N = 0;
  double mismatch = 0.0;
  double barrier = 0.0;
};

/// sigma_mm between the thermal marginal on an N x My grid and the Fick-Jacobs profile.
std::vector<ConvergenceRow> convergence_study(const ChannelParams& base, double Lambda,
                                              const std::vector<int>& Ns, int My, BoundaryX bc,
                                              const SpectrumCache* cache = nullptr);

/// First Lambda at which the samples cross `level`, linear in log(value); nullopt if none.
std::optional<double> level_crossing(const std::vector<double>& xs, const std::vector<double>& ys,
                                     double level);

/// Figure-analog tables built from a sweep table.
CsvTable barrier_figure_table(const CsvTable& sweep);  // Lambda, dF_thermal, dF_analytic
CsvTable flux_figure_table(const CsvTable& sweep);     // Lambda, flux_ratio, flux_ratio_analytic

struct PlotRequest {
  std::string name;  // script file stem
  std::string csv;   // path of the data file
  std::string x;
  std::vector<std::string> y;
  std::string title;
};

/// Writes one gnuplot script per request into `dir` and returns the paths.
/// Throws if a referenced column is missing from its CSV.
std::vector<std::string> emit_plot_scripts(const std::string& dir,
                                           const std::vector<PlotRequest>& requests);

/// Channel parameters for a point: k0 from the ratio (when > 0), k1, beta from Lambda.
ChannelParams point_params(const ChannelParams& base, double ratio, double k1, double Lambda);

}  // namespace qfj
