#include "hisd/harness.hpp"

#include "hisd/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>

namespace hisd {

namespace {

// Runs task(0..n-1) on up to `threads` workers. Results are written by index,
// so the outcome does not depend on scheduling. The lowest-index exception
// wins.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)> &task) {
  std::vector<std::exception_ptr> errors(n);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    pool.clear();
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

// Positive integer r with a / b == r to 1e-9 relative, if any.
std::optional<std::size_t> integer_ratio(double a, double b) {
  const double r = a / b;
  const double rr = std::round(r);
  if (rr < 1.0 || std::abs(r - rr) > 1e-9 * rr)
    return std::nullopt;
  return static_cast<std::size_t>(rr);
}

} // namespace

void DefectSummary::absorb(const StepDiagnostics &diag,
                           const SaddleState &state) {
  x_tilde_norm = std::max(x_tilde_norm, diag.x_tilde_norm_defect);
  for (const auto &d : diag.directions) {
    transport = std::max(transport, d.transport_defect);
    gram_schmidt = std::max(gram_schmidt, d.gs_defect);
    y_identity = std::max(y_identity, d.y_identity_defect);
  }
  const ConstraintDefects c = constraint_defects(state);
  constraints.norm = std::max(constraints.norm, c.norm);
  constraints.tangency = std::max(constraints.tangency, c.tangency);
  constraints.orthonormality =
      std::max(constraints.orthonormality, c.orthonormality);
}

std::size_t step_count(double final_time, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw ValidationError("tau must be a positive finite number");
  if (!(final_time > 0.0) || !std::isfinite(final_time))
    throw ValidationError("T must be a positive finite number");
  const auto n = integer_ratio(final_time, tau);
  if (!n)
    throw ValidationError("tau does not divide T into a whole number of steps");
  return *n;
}

Trajectory run_trajectory(const EnergyModel &m, const SchemeConfig &cfg,
                          const SaddleState &s0, double final_time,
                          const RunOptions &opts) {
  if (s0.dimension() != m.dimension())
    throw ValidationError("initial state dimension " +
                          std::to_string(s0.dimension()) +
                          " does not match the energy dimension " +
                          std::to_string(m.dimension()));
  validate_state(s0, cfg.tol.tol_state);
  const std::size_t n_steps = step_count(final_time, cfg.tau);
  const std::size_t stride = std::max<std::size_t>(1, opts.stride);
  if (n_steps % stride != 0)
    throw ValidationError("retention stride does not divide the step count");

  Trajectory traj;
  traj.tau = cfg.tau;
  traj.final_time = final_time;
  traj.steps = n_steps;
  traj.stride = stride;
  traj.scheme = cfg.scheme;
  traj.times.reserve(n_steps / stride + 1);
  traj.states.reserve(n_steps / stride + 1);

  SaddleState current = s0;
  current.t = 0.0;
  traj.times.push_back(0.0);
  traj.states.push_back(current);

  for (std::size_t n = 1; n <= n_steps; ++n) {
    StepResult r;
    try {
      r = step(m, cfg, current);
    } catch (NumericalError &e) {
      e.set_step(n);
      throw;
    }
    r.state.t = static_cast<double>(n) * cfg.tau;
    traj.max_defects.absorb(r.diagnostics, r.state);
    current = std::move(r.state);
    if (n % stride == 0) {
      traj.times.push_back(current.t);
      traj.states.push_back(current);
      if (opts.keep_diagnostics)
        traj.diagnostics.push_back(std::move(r.diagnostics));
    }
  }
  return traj;
}

SaddleState ExperimentPreset::initial_state() const {
  SaddleState s;
  s.x = x0;
  s.directions = v0;
  return s;
}

ExperimentPreset preset(char name) {
  auto unit = [](Vec v) { return (1.0 / norm(v)) * v; };
  ExperimentPreset p;
  p.name = name;
  switch (name) {
  case 'a':
    p.params = {-1.0, 5.5};
    p.x0 = unit({0.8, 1.0, 1.0});
    p.v0 = {unit({1.0, -0.4, -0.4})};
    break;
  case 'b':
    p.params = {-1.0, 5.5};
    p.x0 = unit({1.0, 1.0, 1.4});
    p.v0 = {unit({-1.0, 1.0, 0.0})};
    break;
  case 'c':
    p.params = {-0.5, 1.5};
    p.x0 = unit({0.8, 1.0, 1.0});
    p.v0 = {unit({1.0, -0.4, -0.4}), unit({0.0, 1.0, -1.0})};
    break;
  case 'd':
    p.params = {-0.5, 1.5};
    p.x0 = unit({1.0, 1.0, 1.4});
    p.v0 = {unit({-1.0, 1.0, 0.0}), unit({-0.7, -0.7, 1.0})};
    break;
  default:
    throw ValidationError(std::string("unknown preset '") + name +
                          "' (expected a, b, c or d)");
  }
  return p;
}

std::vector<ExperimentPreset> all_presets() {
  return {preset('a'), preset('b'), preset('c'), preset('d')};
}

Vec rosenbrock_saddle() {
  const double c = 1.0 / std::sqrt(3.0);
  return Vec{c, c, c};
}

Trajectory reference_solution(const EnergyModel &m, const Splitting &split,
                              const SaddleState &s0, double final_time,
                              const ReferenceOptions &opts) {
  const auto stride = integer_ratio(opts.retain_tau, opts.tau_ref);
  if (!stride)
    throw ValidationError("reference step must divide the retained grid step");
  SchemeConfig cfg{.tau = opts.tau_ref,
                   .scheme = Scheme::SemiImplicit,
                   .splitting = split,
                   .tol = {}};
  return run_trajectory(m, cfg, s0, final_time,
                        {.stride = *stride, .keep_diagnostics = false});
}

TrajectoryErrors error_against_reference(const Trajectory &traj,
                                         const Trajectory &ref) {
  if (traj.states.empty() || ref.states.empty())
    throw ValidationError("error comparison: empty trajectory");
  if (std::abs(traj.final_time - ref.final_time) >
      1e-12 * std::max(1.0, ref.final_time))
    throw ValidationError("error comparison: final times differ");
  const std::size_t k = traj.states.front().k();
  if (ref.states.front().k() != k)
    throw ValidationError("error comparison: index k differs");

  const double traj_dt = traj.tau * static_cast<double>(traj.stride);
  const double ref_dt = ref.tau * static_cast<double>(ref.stride);
  std::size_t traj_step = 0, ref_step = 0;
  if (auto r = integer_ratio(ref_dt, traj_dt)) {
    traj_step = *r;
    ref_step = 1;
  } else if (auto r2 = integer_ratio(traj_dt, ref_dt)) {
    traj_step = 1;
    ref_step = *r2;
  } else {
    throw ValidationError("error comparison: grids are not nested");
  }

  TrajectoryErrors out;
  out.err_v.assign(k, 0.0);
  for (std::size_t a = traj_step, b = ref_step;
       a < traj.states.size() && b < ref.states.size();
       a += traj_step, b += ref_step) {
    const SaddleState &s = traj.states[a];
    const SaddleState &r = ref.states[b];
    out.err_x = std::max(out.err_x, norm(s.x - r.x));
    for (std::size_t i = 0; i < k; ++i) {
      out.err_v[i] =
          std::max(out.err_v[i], norm(s.directions[i] - r.directions[i]));
      if (dot(s.directions[i], r.directions[i]) < 0.0)
        out.sign_flip = true;
    }
    ++out.shared_nodes;
  }
  if (out.shared_nodes == 0)
    throw ValidationError("error comparison: no shared nodes after t = 0");
  return out;
}

std::vector<std::optional<double>>
convergence_rates(const std::vector<double> &errors) {
  std::vector<std::optional<double>> rates;
  for (std::size_t j = 0; j + 1 < errors.size(); ++j) {
    if (errors[j] > 0.0 && errors[j + 1] > 0.0)
      rates.emplace_back(std::log2(errors[j] / errors[j + 1]));
    else
      rates.emplace_back(std::nullopt);
  }
  return rates;
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0)
    return requested;
  if (const char *env = std::getenv("HISD_THREADS")) {
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0)
      return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ConvergenceReport convergence_study(const EnergyModel &m,
                                    const Splitting &split,
                                    const SaddleState &s0, double final_time,
                                    const std::vector<double> &taus,
                                    const StudyOptions &opts) {
  if (taus.empty())
    throw ValidationError("convergence study needs at least one tau");
  for (std::size_t j = 0; j + 1 < taus.size(); ++j)
    if (taus[j + 1] * 2.0 != taus[j])
      throw ValidationError("tau levels must halve exactly");
  for (double tau : taus)
    if (!integer_ratio(tau, opts.tau_ref))
      throw ValidationError("every tau must be a multiple of the reference tau");

  const std::size_t levels = taus.size();
  Trajectory ref;
  std::vector<Trajectory> runs(levels);
  parallel_for(levels + 1, resolve_threads(opts.threads), [&](std::size_t i) {
    if (i == 0) {
      ref = reference_solution(
          m, split, s0, final_time,
          {.tau_ref = opts.tau_ref, .retain_tau = taus.back()});
      return;
    }
    SchemeConfig cfg{.tau = taus[i - 1],
                     .scheme = opts.scheme,
                     .splitting = split,
                     .tol = opts.tol};
    runs[i - 1] =
        run_trajectory(m, cfg, s0, final_time, {.keep_diagnostics = false});
  });

  ConvergenceReport rep;
  rep.taus = taus;
  const std::size_t k = s0.k();
  for (const Trajectory &t : runs) {
    const TrajectoryErrors e = error_against_reference(t, ref);
    rep.err_x.push_back(e.err_x);
    rep.err_v.push_back(e.err_v);
    rep.sign_flip = rep.sign_flip || e.sign_flip;
    rep.defects.push_back(t.max_defects);
    rep.final_x.push_back(t.states.back().x);
  }
  rep.rate_x = convergence_rates(rep.err_x);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> col;
    for (const auto &row : rep.err_v)
      col.push_back(row[i]);
    rep.rate_v.push_back(convergence_rates(col));
  }
  return rep;
}

std::optional<double> loglog_slope(const std::vector<double> &x,
                                   const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2)
    return std::nullopt;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i]))
      return std::nullopt;
    lx.push_back(std::log2(x[i]));
    ly.push_back(std::log2(y[i]));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0)
    return std::nullopt;
  return sxy / sxx;
}

ScalingTable scaling_probe(const EnergyModel &m, const SchemeConfig &base,
                           const SaddleState &s0, double final_time,
                           const std::vector<double> &taus,
                           unsigned threads) {
  ScalingTable table;
  table.rows.resize(taus.size());
  parallel_for(taus.size(), resolve_threads(threads), [&](std::size_t i) {
    SchemeConfig cfg = base;
    cfg.tau = taus[i];
    const std::size_t n = step_count(final_time, cfg.tau);
    const Trajectory t = run_trajectory(
        m, cfg, s0, final_time, {.stride = n, .keep_diagnostics = false});
    table.rows[i] = {taus[i], t.max_defects};
  });
  std::vector<double> xs, c0, c1, c2;
  for (const auto &r : table.rows) {
    xs.push_back(r.tau);
    c0.push_back(r.defects.x_tilde_norm);
    c1.push_back(r.defects.transport);
    c2.push_back(r.defects.gram_schmidt);
  }
  table.slopes = {loglog_slope(xs, c0), loglog_slope(xs, c1),
                  loglog_slope(xs, c2)};
  return table;
}

namespace {

struct FlatState {
  Vec x;
  std::vector<Vec> v;
};

FlatState axpy(const FlatState &s, double h, const ContinuousRhs &r) {
  FlatState out{s.x + h * r.dx, {}};
  for (std::size_t i = 0; i < s.v.size(); ++i)
    out.v.push_back(s.v[i] + h * r.dv[i]);
  return out;
}

ContinuousRhs eval(const EnergyModel &m, const FlatState &s) {
  SaddleState st;
  st.x = s.x;
  st.directions = s.v;
  return rhs_continuous(m, st);
}

} // namespace

Trajectory rk4_trajectory(const EnergyModel &m, const SaddleState &s0,
                          double final_time, double tau,
                          const RunOptions &opts) {
  validate_state(s0);
  const std::size_t n_steps = step_count(final_time, tau);
  const std::size_t stride = std::max<std::size_t>(1, opts.stride);
  if (n_steps % stride != 0)
    throw ValidationError("retention stride does not divide the step count");

  Trajectory traj;
  traj.tau = tau;
  traj.final_time = final_time;
  traj.steps = n_steps;
  traj.stride = stride;
  traj.scheme = Scheme::Explicit;
  traj.times.push_back(0.0);
  traj.states.push_back(s0);

  FlatState y{s0.x, s0.directions};
  for (std::size_t n = 1; n <= n_steps; ++n) {
    const ContinuousRhs k1 = eval(m, y);
    const ContinuousRhs k2 = eval(m, axpy(y, 0.5 * tau, k1));
    const ContinuousRhs k3 = eval(m, axpy(y, 0.5 * tau, k2));
    const ContinuousRhs k4 = eval(m, axpy(y, tau, k3));
    y.x += (tau / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    for (std::size_t i = 0; i < y.v.size(); ++i)
      y.v[i] += (tau / 6.0) *
                (k1.dv[i] + 2.0 * k2.dv[i] + 2.0 * k3.dv[i] + k4.dv[i]);
    if (!y.x.all_finite())
      throw StepTooLarge("rk4: state became non-finite");
    if (n % stride == 0) {
      SaddleState s;
      s.x = y.x;
      s.directions = y.v;
      s.t = static_cast<double>(n) * tau;
      traj.times.push_back(s.t);
      traj.states.push_back(std::move(s));
    }
  }
  return traj;
}

} // namespace hisd
