#include "hisd/dynamics.hpp"

#include "hisd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace hisd {

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

void require_finite(const Vec &v, const char *what) {
  if (!v.all_finite())
    throw StepTooLarge(std::string(what) + " became non-finite");
}

// (I - x x^T - v_i v_i^T - 2 sum_{j<i} v_j v_j^T) w, applied as vector ops.
Vec project_direction(const Vec &w, const Vec &x, const Vec &vi,
                      const std::vector<Vec> &lower) {
  Vec out = w;
  out -= dot(x, w) * x;
  out -= dot(vi, w) * vi;
  for (const Vec &vj : lower)
    out -= (2.0 * dot(vj, w)) * vj;
  return out;
}

// I - 2 sum_j v_j v_j^T
Mat reflector(std::size_t d, const std::vector<Vec> &dirs) {
  Mat p = Mat::identity(d);
  for (const Vec &v : dirs)
    p -= 2.0 * outer(v, v);
  return p;
}

Vec v_substep_with(const Mat &jx, const Vec &fx, const Vec &v_prev,
                   const Vec &x_n, const std::vector<Vec> &committed,
                   double tau, const Tolerances &tol) {
  const std::size_t d = x_n.size();
  Mat proj = Mat::identity(d) - outer(x_n, x_n);
  for (const Vec &c : committed)
    proj -= 2.0 * outer(c, c);
  const Mat system =
      Mat::identity(d) - tau * (proj * jx) - tau * outer(x_n, fx);
  const Vec rhs = v_prev - (tau * dot(v_prev, jx * v_prev)) * v_prev;
  Vec v_tilde = solve(system, rhs, {.tol_solve = tol.tol_solve});
  require_finite(v_tilde, "v_tilde");
  return v_tilde;
}

// Transport + Gram-Schmidt for one direction; records diagnostics.
Vec finish_direction(const Vec &v_tilde, const Vec &x_n,
                     const std::vector<Vec> &committed, const Tolerances &tol,
                     DirectionDiagnostics &rec) {
  rec.v_tilde = v_tilde;
  rec.v_hat = vector_transport(v_tilde, x_n);
  rec.transport_defect = std::abs(dot(v_tilde, x_n));
  GramSchmidtResult gs = gram_schmidt(rec.v_hat, committed, tol.y_min);
  const double scale = std::max(1.0, dot(rec.v_hat, rec.v_hat));
  if (gs.y_identity_defect > tol.tol_state * scale) {
    throw InvariantViolation("Gram-Schmidt normalization identity off by " +
                             fmt_double(gs.y_identity_defect));
  }
  rec.gs_defect = norm(gs.v - rec.v_hat);
  rec.y = gs.y;
  rec.y_identity_defect = gs.y_identity_defect;
  return std::move(gs.v);
}

void check_post_step(const SaddleState &s, const Tolerances &tol) {
  const ConstraintDefects d = constraint_defects(s);
  if (d.norm > tol.tol_state || d.tangency > tol.tol_state ||
      d.orthonormality > tol.tol_state) {
    throw InvariantViolation(
        "constraint defects after step: norm " + fmt_double(d.norm) +
        ", tangency " + fmt_double(d.tangency) + ", orthonormality " +
        fmt_double(d.orthonormality));
  }
}

} // namespace

ConstraintDefects constraint_defects(const SaddleState &s) {
  ConstraintDefects d;
  d.norm = std::abs(norm(s.x) - 1.0);
  for (std::size_t i = 0; i < s.k(); ++i) {
    d.tangency = std::max(d.tangency, std::abs(dot(s.directions[i], s.x)));
    for (std::size_t j = 0; j <= i; ++j) {
      const double target = i == j ? 1.0 : 0.0;
      d.orthonormality =
          std::max(d.orthonormality,
                   std::abs(dot(s.directions[i], s.directions[j]) - target));
    }
  }
  return d;
}

void validate_state(const SaddleState &s, double tol) {
  const std::size_t d = s.dimension();
  if (d == 0)
    throw ValidationError("state: position vector is empty");
  if (!s.x.all_finite())
    throw ValidationError("state: position has non-finite entries");
  if (s.k() >= d)
    throw ValidationError("state: index k = " + std::to_string(s.k()) +
                          " must be smaller than the dimension " +
                          std::to_string(d));
  for (std::size_t i = 0; i < s.k(); ++i) {
    if (s.directions[i].size() != d)
      throw ValidationError("state: v" + std::to_string(i + 1) +
                            " has the wrong length");
    if (!s.directions[i].all_finite())
      throw ValidationError("state: v" + std::to_string(i + 1) +
                            " has non-finite entries");
  }
  const double xn = norm(s.x);
  if (std::abs(xn - 1.0) > tol)
    throw ValidationError("state: |x| = " + fmt_double(xn) +
                          " is not on the unit sphere");
  for (std::size_t i = 0; i < s.k(); ++i) {
    const std::string vi = "v" + std::to_string(i + 1);
    const double vx = dot(s.directions[i], s.x);
    if (std::abs(vx) > tol)
      throw ValidationError("state: " + vi + ".x = " + fmt_double(vx) +
                            " (must be 0)");
    for (std::size_t j = 0; j <= i; ++j) {
      const double vv = dot(s.directions[i], s.directions[j]);
      const double target = i == j ? 1.0 : 0.0;
      if (std::abs(vv - target) > tol)
        throw ValidationError("state: " + vi + ".v" + std::to_string(j + 1) +
                              " = " + fmt_double(vv) + " (must be " +
                              (i == j ? "1" : "0") + ")");
    }
  }
}

ContinuousRhs rhs_continuous(const EnergyModel &m, const SaddleState &s) {
  const Vec f = m.force(s.x);
  const Mat jx = m.hessian_neg(s.x);

  ContinuousRhs out;
  out.dx = f - dot(s.x, f) * s.x;
  for (const Vec &v : s.directions)
    out.dx -= (2.0 * dot(v, f)) * v;

  std::vector<Vec> lower;
  lower.reserve(s.k());
  for (const Vec &vi : s.directions) {
    Vec dv = project_direction(jx * vi, s.x, vi, lower);
    dv += dot(vi, f) * s.x;
    out.dv.push_back(std::move(dv));
    lower.push_back(vi);
  }
  return out;
}

Vec retract(const Vec &x_tilde, double y_min) {
  const double n = norm(x_tilde);
  if (!(n >= y_min))
    throw ZeroVector("retract: |x_tilde| = " + fmt_double(n));
  return (1.0 / n) * x_tilde;
}

Vec vector_transport(const Vec &v_tilde, const Vec &x_n) {
  return v_tilde - dot(v_tilde, x_n) * x_n;
}

GramSchmidtResult gram_schmidt(const Vec &v_hat, const std::vector<Vec> &prior,
                               double y_min) {
  Vec r = v_hat;
  double coef_sq = 0.0;
  for (const Vec &p : prior) {
    const double c = dot(v_hat, p);
    r -= c * p;
    coef_sq += c * c;
  }
  GramSchmidtResult out;
  out.y = norm(r);
  const double y_sq_alt = dot(v_hat, v_hat) - coef_sq;
  out.y_identity = std::sqrt(std::max(0.0, y_sq_alt));
  out.y_identity_defect = std::abs(out.y * out.y - y_sq_alt);
  if (!(out.y >= y_min))
    throw DegenerateDirection("Gram-Schmidt: residual norm " +
                              fmt_double(out.y) + " below threshold");
  out.v = (1.0 / out.y) * r;
  return out;
}

XSubstep semi_implicit_x_substep(const EnergyModel &m, const Splitting &split,
                                 const SaddleState &prev, double tau,
                                 const Tolerances &tol) {
  const std::size_t d = prev.dimension();
  const Mat p = reflector(d, prev.directions);
  const Vec f = m.force(prev.x);
  const Vec nl = split.nonlinear_part(m, prev.x);

  const Mat system = Mat::identity(d) - tau * (p * split.linear_part());
  const Vec rhs = prev.x + tau * (p * nl) - (tau * dot(prev.x, f)) * prev.x;

  XSubstep out;
  out.x_tilde = solve(system, rhs, {.tol_solve = tol.tol_solve});
  require_finite(out.x_tilde, "x_tilde");
  const double n = norm(out.x_tilde);
  if (n < tol.min_x_tilde_norm)
    throw StepTooLarge("|x_tilde| = " + fmt_double(n) + " < " +
                       fmt_double(tol.min_x_tilde_norm));
  out.x = retract(out.x_tilde, tol.y_min);
  return out;
}

Vec semi_implicit_v_substep(const EnergyModel &m, const Vec &v_prev,
                            const Vec &x_n, const std::vector<Vec> &committed,
                            double tau, const Tolerances &tol) {
  return v_substep_with(m.hessian_neg(x_n), m.force(x_n), v_prev, x_n,
                        committed, tau, tol);
}

StepResult semi_implicit_step(const EnergyModel &m, const Splitting &split,
                              const SaddleState &prev, double tau,
                              const Tolerances &tol) {
  StepResult out;
  XSubstep xs = semi_implicit_x_substep(m, split, prev, tau, tol);
  out.diagnostics.x_tilde_norm_defect = std::abs(norm(xs.x_tilde) - 1.0);
  out.diagnostics.x_tilde = std::move(xs.x_tilde);

  SaddleState &next = out.state;
  next.x = std::move(xs.x);
  next.t = prev.t + tau;

  const Vec fx = m.force(next.x);
  const Mat jx = m.hessian_neg(next.x);
  for (const Vec &v_prev : prev.directions) {
    const Vec v_tilde =
        v_substep_with(jx, fx, v_prev, next.x, next.directions, tau, tol);
    DirectionDiagnostics rec;
    Vec v = finish_direction(v_tilde, next.x, next.directions, tol, rec);
    next.directions.push_back(std::move(v));
    out.diagnostics.directions.push_back(std::move(rec));
  }
  check_post_step(next, tol);
  return out;
}

StepResult explicit_step(const EnergyModel &m, const SaddleState &prev,
                         double tau, const Tolerances &tol) {
  const ContinuousRhs rhs = rhs_continuous(m, prev);

  StepResult out;
  out.diagnostics.x_tilde = prev.x + tau * rhs.dx;
  require_finite(out.diagnostics.x_tilde, "x_tilde");
  const double n = norm(out.diagnostics.x_tilde);
  if (n < tol.min_x_tilde_norm)
    throw StepTooLarge("|x_tilde| = " + fmt_double(n) + " < " +
                       fmt_double(tol.min_x_tilde_norm));
  out.diagnostics.x_tilde_norm_defect = std::abs(n - 1.0);

  SaddleState &next = out.state;
  next.x = retract(out.diagnostics.x_tilde, tol.y_min);
  next.t = prev.t + tau;

  for (std::size_t i = 0; i < prev.k(); ++i) {
    Vec v_tilde = prev.directions[i] + tau * rhs.dv[i];
    require_finite(v_tilde, "v_tilde");
    DirectionDiagnostics rec;
    Vec v = finish_direction(v_tilde, next.x, next.directions, tol, rec);
    next.directions.push_back(std::move(v));
    out.diagnostics.directions.push_back(std::move(rec));
  }
  check_post_step(next, tol);
  return out;
}

StepResult step(const EnergyModel &m, const SchemeConfig &cfg,
                const SaddleState &prev) {
  if (!(cfg.tau > 0.0))
    throw ValidationError("step size tau must be positive");
  switch (cfg.scheme) {
  case Scheme::SemiImplicit:
    return semi_implicit_step(m, cfg.splitting, prev, cfg.tau, cfg.tol);
  case Scheme::Explicit:
    return explicit_step(m, prev, cfg.tau, cfg.tol);
  }
  throw ValidationError("unknown scheme");
}

} // namespace hisd
