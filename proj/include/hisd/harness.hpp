#pragma once

#include "hisd/dynamics.hpp"
#include "hisd/energy.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace hisd {

/// Largest per-step quantities seen over a whole run, including steps whose
/// states were not retained.
struct DefectSummary {
  double x_tilde_norm = 0.0;
  double transport = 0.0;
  double gram_schmidt = 0.0;
  double y_identity = 0.0;
  ConstraintDefects constraints;

  void absorb(const StepDiagnostics &diag, const SaddleState &state);
};

struct RunOptions {
  /// Keep every stride-th node (node 0 and node N are always multiples).
  std::size_t stride = 1;
  bool keep_diagnostics = true;
};

struct Trajectory {
  double tau = 0.0;
  double final_time = 0.0;
  std::size_t steps = 0;
  std::size_t stride = 1;
  Scheme scheme = Scheme::SemiImplicit;
  std::vector<double> times;
  std::vector<SaddleState> states;
  /// diagnostics[m] belongs to the step that produced states[m + 1].
  std::vector<StepDiagnostics> diagnostics;
  DefectSummary max_defects;
};

/// Number of steps T / tau; throws ValidationError unless it is a whole number.
std::size_t step_count(double final_time, double tau);

/// Runs N = T / tau steps from s0. NumericalErrors carry the failing step.
Trajectory run_trajectory(const EnergyModel &m, const SchemeConfig &cfg,
                          const SaddleState &s0, double final_time,
                          const RunOptions &opts = {});

/// One of the four Rosenbrock test problems on S^2.
struct ExperimentPreset {
  char name = 'a';
  RosenbrockParams params;
  Vec x0;
  std::vector<Vec> v0;
  double final_time = 10.0;

  std::size_t k() const noexcept { return v0.size(); }
  SaddleState initial_state() const;
};

/// Presets a-d; initial vectors are normalized here. Throws ValidationError
/// for other names.
ExperimentPreset preset(char name);
std::vector<ExperimentPreset> all_presets();

/// (1,1,1)/sqrt3
Vec rosenbrock_saddle();

inline constexpr double kReferenceTau = 1.0 / 8192.0; // 2^-13

struct ReferenceOptions {
  double tau_ref = kReferenceTau;
  /// Nodes are kept on this grid; pass the finest step that will be
  /// compared against the reference.
  double retain_tau = 1.0 / 512.0;
};

Trajectory reference_solution(const EnergyModel &m, const Splitting &split,
                              const SaddleState &s0, double final_time,
                              const ReferenceOptions &opts = {});

struct TrajectoryErrors {
  double err_x = 0.0;
  std::vector<double> err_v;
  std::size_t shared_nodes = 0;
  /// Some shared node had v_i . v_i_ref < 0.
  bool sign_flip = false;
};

/// Max over shared nodes with t > 0 of |x - x_ref| and |v_i - v_i_ref|.
/// One grid must contain the other; throws ValidationError otherwise.
TrajectoryErrors error_against_reference(const Trajectory &traj,
                                         const Trajectory &ref);

/// CR_j = log2(err_j / err_{j+1}); nullopt when either error is not positive.
std::vector<std::optional<double>>
convergence_rates(const std::vector<double> &errors);

struct ConvergenceReport {
  std::vector<double> taus;
  std::vector<double> err_x;
  /// err_v[level][i]
  std::vector<std::vector<double>> err_v;
  std::vector<std::optional<double>> rate_x;
  /// rate_v[i][pair]
  std::vector<std::vector<std::optional<double>>> rate_v;
  std::vector<DefectSummary> defects;
  std::vector<Vec> final_x;
  bool sign_flip = false;

  std::size_t k() const noexcept { return rate_v.size(); }
};

struct StudyOptions {
  double tau_ref = kReferenceTau;
  Scheme scheme = Scheme::SemiImplicit;
  Tolerances tol;
  /// 0 picks HISD_THREADS or the hardware concurrency.
  unsigned threads = 0;
};

/// Taus must be strictly decreasing by exact factors of two, each a
/// multiple of tau_ref. The reference always uses the semi-implicit scheme.
ConvergenceReport convergence_study(const EnergyModel &m,
                                    const Splitting &split,
                                    const SaddleState &s0, double final_time,
                                    const std::vector<double> &taus,
                                    const StudyOptions &opts = {});

struct ScalingRow {
  double tau = 0.0;
  DefectSummary defects;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  /// Least-squares log-log slopes for x_tilde_norm, transport, gram_schmidt.
  /// nullopt when a column has a non-positive entry.
  std::array<std::optional<double>, 3> slopes;
};

ScalingTable scaling_probe(const EnergyModel &m, const SchemeConfig &base,
                           const SaddleState &s0, double final_time,
                           const std::vector<double> &taus,
                           unsigned threads = 0);

/// Least-squares slope of log2(y) against log2(x).
std::optional<double> loglog_slope(const std::vector<double> &x,
                                   const std::vector<double> &y);

/// Classical RK4 on the continuous flow, no projection. Independent of the
/// stepper pipeline; used as a cross-check for reference trajectories.
Trajectory rk4_trajectory(const EnergyModel &m, const SaddleState &s0,
                          double final_time, double tau,
                          const RunOptions &opts = {});

/// Worker count: explicit request, else HISD_THREADS, else hardware.
unsigned resolve_threads(unsigned requested);

} // namespace hisd
