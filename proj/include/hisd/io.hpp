#pragma once

// Text formats: JSON-lines trajectories, CSV trajectories and convergence
// tables, and the rounded console table.

#include "hisd/harness.hpp"

#include <iosfwd>
#include <string>
#include <string_view>

namespace hisd::io {

/// Parses "2^-6", "2^{-6}", "2^3" exactly as powers of two, or a plain
/// decimal. Throws ValidationError on anything else or a non-positive value.
double parse_step(std::string_view text);

/// "2^-6" when tau is an exact power of two, otherwise %.17g.
std::string step_label(double tau);

/// %.17g
std::string full_precision(double v);

/// Comma-separated numbers, e.g. "0.8,1,1".
Vec parse_vector(std::string_view text);
/// Rows separated by ';', entries by ','.
Mat parse_matrix(std::string_view text);

/// One JSON object per retained node: n, t, x, v and, for n > 0 when
/// available, the step diagnostics.
void write_trajectory_jsonl(std::ostream &os, const Trajectory &traj);
/// Reads nodes back (times and states; diagnostics are not restored).
Trajectory read_trajectory_jsonl(std::istream &is);

void write_trajectory_csv(std::ostream &os, const Trajectory &traj);

/// Columns: tau_label, tau, err_x, CR_x, err_v1, CR_v1, ... ; full precision.
std::string convergence_csv(const ConvergenceReport &rep);
/// One JSON object per tau level.
std::string convergence_jsonl(const ConvergenceReport &rep);
/// Console layout rounded to 3 significant digits.
std::string convergence_table(const ConvergenceReport &rep);

} // namespace hisd::io
