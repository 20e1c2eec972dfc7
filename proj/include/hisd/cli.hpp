#pragma once

#include "hisd/dynamics.hpp"
#include "hisd/energy.hpp"
#include "hisd/harness.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hisd::cli {

enum ExitCode : int {
  kSuccess = 0,
  kValidationError = 1,
  kNumericalFailure = 2,
  kIoError = 3,
};

/// Raw option values as given on the command line or in a config file.
struct RunConfig {
  std::string energy = "rosenbrock";
  std::optional<double> a;
  std::optional<double> b;
  std::string matrix;
  std::string preset;
  std::optional<std::size_t> k;
  std::string x0;
  std::vector<std::string> v;
  std::optional<double> final_time;
  std::vector<std::string> taus;
  std::string tau_ref = "2^-13";
  std::string scheme = "semi";
  std::string splitting = "explicit-x";
  std::string splitting_file;
  std::string out;
  std::string format;
};

/// Everything a command needs, validated.
struct Problem {
  EnergyPtr model;
  SaddleState initial;
  double final_time = 10.0;
  std::vector<double> taus;
  double tau_ref = kReferenceTau;
  Scheme scheme = Scheme::SemiImplicit;
  Splitting splitting{Mat()};
};

/// Applies defaults and checks consistency. Throws ValidationError.
Problem resolve(const RunConfig &cfg);

/// Machine-readable failure record (one JSON line).
std::string error_record(const std::string &kind, const std::string &message,
                         int exit_code, std::size_t step = 0);

int cmd_run(const RunConfig &cfg, std::ostream &out, std::ostream &err);
int cmd_converge(const RunConfig &cfg, std::ostream &out, std::ostream &err);
int cmd_check(const RunConfig &cfg, std::ostream &out, std::ostream &err);

/// Full command-line entry point (subcommands run, converge, check).
int main(int argc, const char *const *argv);

} // namespace hisd::cli
