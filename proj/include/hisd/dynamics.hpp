#pragma once

// Sphere-constrained high-index saddle dynamics and its time stepping.
//
// Continuous flow for an index-k saddle on S^{d-1}:
//   dx/dt   = (I - x x^T - 2 sum_j v_j v_j^T) F(x)
//   dv_i/dt = (I - x x^T - v_i v_i^T - 2 sum_{j<i} v_j v_j^T) J(x) v_i
//             + x v_i^T F(x)
//
// The semi-implicit step treats the linear part of F and the J(x_n) v term
// implicitly, then restores the constraints with a retraction, a vector
// transport and Gram-Schmidt. Directions are advanced one at a time and the
// i-th direction sees the already committed v_{j,n}, j < i, of the new step.

#include "hisd/energy.hpp"
#include "hisd/linalg.hpp"

#include <vector>

namespace hisd {

struct SaddleState {
  Vec x;
  std::vector<Vec> directions;
  double t = 0.0;

  std::size_t k() const noexcept { return directions.size(); }
  std::size_t dimension() const noexcept { return x.size(); }
};

/// Worst violations of |x| = 1, v_i . x = 0 and v_i . v_j = delta_ij.
struct ConstraintDefects {
  double norm = 0.0;
  double tangency = 0.0;
  double orthonormality = 0.0;
};

ConstraintDefects constraint_defects(const SaddleState &s);

/// Throws ValidationError naming the first violated relation when any defect
/// exceeds tol, or when dimensions / finiteness are wrong.
void validate_state(const SaddleState &s, double tol = 1e-10);

struct Tolerances {
  double tol_solve = 1e-10;
  double tol_state = 1e-10;
  double y_min = 1e-8;
  /// Retraction input must keep at least this norm.
  double min_x_tilde_norm = 0.5;
};

enum class Scheme { SemiImplicit, Explicit };

struct SchemeConfig {
  double tau = 0.0;
  Scheme scheme = Scheme::SemiImplicit;
  Splitting splitting;
  Tolerances tol;
};

struct DirectionDiagnostics {
  Vec v_tilde;
  Vec v_hat;
  /// |v_tilde . x_n|
  double transport_defect = 0.0;
  /// |v_n - v_hat|
  double gs_defect = 0.0;
  double y = 0.0;
  /// |Y^2 - (|v_hat|^2 - sum_j (v_hat . v_j)^2)|
  double y_identity_defect = 0.0;
};

struct StepDiagnostics {
  Vec x_tilde;
  /// ||x_tilde| - 1|, which equals |x_n - x_tilde|.
  double x_tilde_norm_defect = 0.0;
  std::vector<DirectionDiagnostics> directions;
};

struct ContinuousRhs {
  Vec dx;
  std::vector<Vec> dv;
};

ContinuousRhs rhs_continuous(const EnergyModel &m, const SaddleState &s);

/// x / |x|; throws ZeroVector when |x| < y_min.
Vec retract(const Vec &x_tilde, double y_min = 1e-8);

/// v - (v . x) x
Vec vector_transport(const Vec &v_tilde, const Vec &x_n);

struct GramSchmidtResult {
  Vec v;
  double y = 0.0;
  /// sqrt(max(0, |v_hat|^2 - sum_j (v_hat . v_j)^2))
  double y_identity = 0.0;
  double y_identity_defect = 0.0;
};

/// Orthonormalizes v_hat against an orthonormal prior set.
/// Throws DegenerateDirection when the residual norm Y drops below y_min.
GramSchmidtResult gram_schmidt(const Vec &v_hat, const std::vector<Vec> &prior,
                               double y_min = 1e-8);

struct XSubstep {
  Vec x_tilde;
  Vec x;
};

/// Solves (I - tau P L) x_tilde = x + tau P N(x) - tau x (x . F(x)) with
/// P = I - 2 sum_j v_j v_j^T at the previous step, then retracts.
XSubstep semi_implicit_x_substep(const EnergyModel &m, const Splitting &split,
                                 const SaddleState &prev, double tau,
                                 const Tolerances &tol = {});

/// Solves
///   (I - tau (I - x x^T - 2 sum_{j<i} c_j c_j^T) J(x) - tau x F(x)^T) v_tilde
///     = v - tau v (v . J(x) v)
/// where c_j are the directions already committed at the current step.
Vec semi_implicit_v_substep(const EnergyModel &m, const Vec &v_prev,
                            const Vec &x_n, const std::vector<Vec> &committed,
                            double tau, const Tolerances &tol = {});

struct StepResult {
  SaddleState state;
  StepDiagnostics diagnostics;
};

StepResult step(const EnergyModel &m, const SchemeConfig &cfg,
                const SaddleState &prev);

StepResult semi_implicit_step(const EnergyModel &m, const Splitting &split,
                              const SaddleState &prev, double tau,
                              const Tolerances &tol = {});

/// Forward Euler on every right-hand-side quantity at t_{n-1}, followed by the
/// same retraction / transport / Gram-Schmidt pipeline.
StepResult explicit_step(const EnergyModel &m, const SaddleState &prev,
                         double tau, const Tolerances &tol = {});

} // namespace hisd
