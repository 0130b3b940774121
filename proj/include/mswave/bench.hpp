#pragma once

#include "mswave/config.hpp"
#include "mswave/fem.hpp"
#include "mswave/homog.hpp"
#include "mswave/timeint.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>

namespace mswave {

enum class Method { fine, homogenized, fehmm, fehmm_l, fdhmm, lod, boussinesq };
std::string to_string(Method m);
Method method_from_string(const std::string& name);

enum class ReferenceKind { fine, homogenized, boussinesq, none };
std::string to_string(ReferenceKind r);
ReferenceKind reference_from_string(const std::string& name);

/// Validated experiment description. Every key of the source config is
/// checked before anything is solved.
struct ExperimentConfig {
  // coeff.*
  std::string coeff_kind = "periodic_1d";
  double eps = 0.1;
  double alpha = 0.0;  ///< 0: derived from the field
  double beta = 0.0;
  std::vector<double> coeff_params;
  // mesh.*
  int dim = 1;
  int N_coarse = 16;
  int N_fine = 256;
  bool periodic = false;
  int fine_per_eps = 0;  ///< > 0 sizes the fine mesh as ceil(fine_per_eps / eps)
  // time.*
  double T = 1.0;
  Scheme scheme = Scheme::leapfrog;
  double safety = 0.5;
  double dt_override = 0.0;
  int snapshots = 200;
  // method and reference
  Method method = Method::fine;
  ReferenceKind reference = ReferenceKind::fine;
  bool cache = true;
  // fehmm.*
  double fehmm_delta_over_eps = 0.0;  ///< 0: coupling default
  int fehmm_n_micro = 32;
  MicroCoupling fehmm_coupling = MicroCoupling::periodic;
  bool fehmm_longtime = false;
  // fdhmm.*
  double fdhmm_tau_over_eps = 20.0;
  double fdhmm_delta_over_eps = 1.0;
  int fdhmm_n_micro = 64;
  // lod.*
  int lod_k = 0;  ///< 0: ceil(log2(1/H))
  std::string lod_init_mode = "l2_proj";
  // homog.*
  int homog_n_sample_points = 0;
  int homog_N_cell = 256;
  // data.*
  std::string data_g1 = "zero";
  std::string data_g2 = "zero";
  std::string data_f = "zero";
  double data_k = 1.0;
  // sweep.*
  std::vector<double> sweep_H;
  std::vector<double> sweep_eps;
  // output.*
  std::string output_csv;
  std::string output_traj;
  bool record_timing = true;
  std::uint64_t seed = 1;
  // longtime.*
  double longtime_T0 = 0.5;
  int longtime_checkpoints = 10;
  double longtime_budget = 0.0;  ///< max fine dofs x steps; 0 = unlimited
  int longtime_N_macro = 0;      ///< 0: same as the fine mesh
  bool longtime_hmm = true;

  Config raw;

  BoundaryCondition bc() const { return periodic ? BoundaryCondition::periodic : BoundaryCondition::dirichlet; }
};

ExperimentConfig parse_experiment(const Config& cfg);

/// Field described by coeff.* with the given eps.
CoefficientField build_field(const ExperimentConfig& cfg, double eps);

/// Initial data and source from the data.* catalog (zero, one, sin, cos,
/// bump; "travel" for g2 launches a right-moving wave with speed sqrt(a0)).
WaveData build_data(const ExperimentConfig& cfg, double a0_scalar);

/// Fine mesh cells per axis for a given eps.
int fine_cells(const ExperimentConfig& cfg, double eps);

constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

struct RunRecord {
  std::string method;
  int dim = 1;
  double eps = kNotApplicable;
  double H = kNotApplicable;
  double h = kNotApplicable;
  int k = -1;
  double delta = kNotApplicable;
  double tau = kNotApplicable;
  double T = 0.0;
  long dofs = 0;
  double wall_time_s = kNotApplicable;
  double linf_l2 = 0.0;
  double linf_h1 = 0.0;
  double rate_l2 = kNotApplicable;
  double rate_h1 = kNotApplicable;
};

struct RateEstimate {
  std::vector<double> pairwise;  ///< NaN where a pair is undefined
  std::vector<bool> flagged;     ///< true where a pair had a zero error
  double least_squares = kNotApplicable;
};

/// Rates log(e1/e2)/log(x1/x2) for consecutive points plus the
/// least-squares slope of log e against log x over all positive errors.
RateEstimate estimate_rate(const std::vector<double>& x, const std::vector<double>& err);

/// Serializes records under the fixed header; empty fields for NaN and k < 0.
class CsvAppender {
 public:
  explicit CsvAppender(std::ostream* out, bool record_timing = true);
  void append(const RunRecord& r);
  static std::string header();
  static std::string format(const RunRecord& r, bool record_timing = true);

 private:
  std::ostream* out_;
  bool record_timing_;
};

/// Method trajectory mapped to the fine dofs of the reference mesh.
struct MethodRun {
  Trajectory traj;
  SparseMatrix to_fine;
  RunRecord record;
};

/// All sweep points: reference, method, error norms and rates. Records are
/// appended to `csv` (if given) as soon as they are complete.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, std::ostream* csv = nullptr,
                                      std::ostream* log = nullptr);

/// Reference trajectory for one sweep point on the fine mesh, read from or
/// written to the snapshot cache when enabled.
Trajectory reference_trajectory(const ExperimentConfig& cfg, double eps, const Mesh& fine, const TimeGrid& grid);

/// Method run on a coarse mesh with N cells per axis.
MethodRun run_method(const ExperimentConfig& cfg, double eps, int N, const Mesh& fine, const TimeGrid& grid);

/// Time grid shared by every sweep point.
TimeGrid experiment_grid(const ExperimentConfig& cfg);

struct LongtimeTable {
  std::vector<double> t;
  std::vector<double> err_vs_u0;
  std::vector<double> err_vs_boussinesq;
  std::vector<double> err_fehmm;    ///< empty unless longtime.hmm
  std::vector<double> err_fehmm_l;  ///< empty unless longtime.hmm
  double a0 = 0.0;
  double b0 = 0.0;
  double T_long = 0.0;
};

/// Fine solve to T0/eps^2 on the periodic 1D domain and the L2 errors of
/// the homogenized, Boussinesq and (optionally) FE-HMM / FE-HMM-L solutions
/// at the checkpoints. Each entry is the largest error over the stored
/// snapshots in (previous checkpoint, checkpoint]. Refuses with ConfigError
/// when fine dofs x steps exceeds longtime.budget.
LongtimeTable longtime_compare(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Invariant suite for the configured field and method: spectral bounds,
/// symmetry, periodicity, cell-problem consistency, leapfrog energy and
/// method structure checks. Writes one PASS/FAIL line per check.
bool verify_invariants(const ExperimentConfig& cfg, std::ostream& out);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

/// Snapshot cache directory: MSWAVE_CACHE_DIR or a folder under the system temp dir.
std::string cache_directory();

}  // namespace mswave
