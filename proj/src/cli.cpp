#include "hisd/cli.hpp"

#include "hisd/errors.hpp"
#include "hisd/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

namespace hisd::cli {

namespace {

class IoFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Config files are either a JSON object or TOML/INI-style key = value lines.
class KeyValueOrJsonConfig : public CLI::ConfigBase {
public:
  std::vector<CLI::ConfigItem> from_config(std::istream &input) const override {
    std::string text((std::istreambuf_iterator<char>(input)),
                     std::istreambuf_iterator<char>());
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream ss(text);
      return CLI::ConfigBase::from_config(ss);
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
      throw ValidationError(std::string("config file: ") + e.what());
    }
    auto as_input = [](const nlohmann::json &v) {
      return v.is_string() ? v.get<std::string>() : v.dump();
    };
    std::vector<CLI::ConfigItem> items;
    for (const auto &[key, value] : doc.items()) {
      if (value.is_null())
        continue;
      CLI::ConfigItem item;
      item.name = key;
      if (value.is_array()) {
        for (const auto &e : value)
          item.inputs.push_back(as_input(e));
      } else {
        item.inputs.push_back(as_input(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

Vec normalized(const Vec &v, const std::string &what) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n))
    throw ValidationError(what + " must be a nonzero finite vector");
  return (1.0 / n) * v;
}

Scheme parse_scheme(const std::string &s) {
  if (s == "semi" || s == "semi-implicit")
    return Scheme::SemiImplicit;
  if (s == "explicit")
    return Scheme::Explicit;
  throw ValidationError("unknown scheme '" + s + "' (expected semi|explicit)");
}

std::string read_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoFailure("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Mat read_matrix_file(const std::string &path) {
  std::string text = read_file(path);
  std::string rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos ||
        line.front() == '#')
      continue;
    if (!rows.empty())
      rows += ';';
    rows += line;
  }
  return io::parse_matrix(rows);
}

Splitting make_splitting(const RunConfig &cfg, const EnergyModel &m) {
  const std::string &mode = cfg.splitting;
  if (mode == "explicit-x")
    return explicit_x_splitting(m.dimension());
  if (mode == "hessian0")
    return default_splitting(m);
  if (mode == "file") {
    if (cfg.splitting_file.empty())
      throw ValidationError("--splitting file requires --splitting-file");
    Mat l = read_matrix_file(cfg.splitting_file);
    if (l.size() != m.dimension())
      throw ValidationError("splitting matrix has dimension " +
                            std::to_string(l.size()) + ", energy has " +
                            std::to_string(m.dimension()));
    return Splitting(std::move(l));
  }
  throw ValidationError("unknown splitting '" + mode +
                        "' (expected hessian0|explicit-x|file)");
}

std::vector<double> parse_taus(const std::vector<std::string> &raw) {
  std::vector<double> taus;
  for (const auto &t : raw)
    taus.push_back(io::parse_step(t));
  return taus;
}

std::vector<double> default_sweep() {
  return {1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};
}

// Writes through `fallback` when path is empty or "-".
template <typename Writer>
void emit(const std::string &path, std::ostream &fallback, Writer &&write) {
  if (path.empty() || path == "-") {
    write(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw IoFailure("cannot open '" + path + "' for writing");
  write(f);
  f.flush();
  if (!f)
    throw IoFailure("write to '" + path + "' failed");
}

template <typename Body>
int guarded(std::ostream &err, Body &&body) {
  try {
    return body();
  } catch (const ValidationError &e) {
    err << error_record("ValidationError", e.what(), kValidationError) << '\n';
    return kValidationError;
  } catch (const DimensionMismatch &e) {
    err << error_record("ValidationError", e.what(), kValidationError) << '\n';
    return kValidationError;
  } catch (const NumericalError &e) {
    err << error_record(e.kind(), e.what(), kNumericalFailure, e.step())
        << '\n';
    return kNumericalFailure;
  } catch (const IoFailure &e) {
    err << error_record("IoError", e.what(), kIoError) << '\n';
    return kIoError;
  }
}

struct Verdict {
  bool ok = true;
  std::ostringstream text;

  void line(bool pass, const std::string &name, const std::string &detail) {
    ok = ok && pass;
    text << (pass ? "PASS  " : "FAIL  ") << name << "  " << detail << '\n';
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

} // namespace

std::string error_record(const std::string &kind, const std::string &message,
                         int exit_code, std::size_t step) {
  nlohmann::json rec{{"error", kind}, {"message", message},
                     {"exit_code", exit_code}};
  if (step > 0)
    rec["step"] = step;
  return rec.dump();
}

Problem resolve(const RunConfig &cfg) {
  Problem p;
  p.taus = parse_taus(cfg.taus);
  p.tau_ref = io::parse_step(cfg.tau_ref);
  p.scheme = parse_scheme(cfg.scheme);

  auto user_initial = [&](std::size_t d) {
    SaddleState s;
    s.x = cfg.x0.empty() ? Vec::unit(d, d - 1)
                         : normalized(io::parse_vector(cfg.x0), "x0");
    for (std::size_t i = 0; i < cfg.v.size(); ++i)
      s.directions.push_back(normalized(io::parse_vector(cfg.v[i]),
                                        "v" + std::to_string(i + 1)));
    return s;
  };

  if (cfg.energy == "rosenbrock") {
    if (!cfg.matrix.empty())
      throw ValidationError("--matrix only applies to --energy quadratic");
    RosenbrockParams params;
    if (cfg.x0.empty()) {
      const std::string name = cfg.preset.empty() ? "a" : cfg.preset;
      if (name.size() != 1)
        throw ValidationError("unknown preset '" + name +
                              "' (expected a, b, c or d)");
      if (!cfg.v.empty())
        throw ValidationError("--v requires --x0 (or use a preset alone)");
      const ExperimentPreset pre = preset(name[0]);
      params = pre.params;
      p.initial = pre.initial_state();
      p.final_time = pre.final_time;
      if (cfg.k) {
        if (*cfg.k > pre.k())
          throw ValidationError("preset " + name + " provides " +
                                std::to_string(pre.k()) +
                                " direction(s); --k " +
                                std::to_string(*cfg.k) + " is too large");
        p.initial.directions.resize(*cfg.k);
      }
    } else {
      if (!cfg.preset.empty())
        throw ValidationError("--preset and --x0 are mutually exclusive");
      p.initial = user_initial(3);
      if (cfg.k && *cfg.k != p.initial.k())
        throw ValidationError("--k " + std::to_string(*cfg.k) + " but " +
                              std::to_string(p.initial.k()) +
                              " --v vector(s) given");
    }
    if (cfg.a)
      params.a = *cfg.a;
    if (cfg.b)
      params.b = *cfg.b;
    p.model = make_rosenbrock(params);
  } else if (cfg.energy == "quadratic") {
    if (!cfg.preset.empty())
      throw ValidationError("presets only apply to --energy rosenbrock");
    if (cfg.a || cfg.b)
      throw ValidationError("--a/--b only apply to --energy rosenbrock");
    Mat a = cfg.matrix.empty() ? Mat::diagonal(Vec{1.0, 2.0, 3.0})
                               : io::parse_matrix(cfg.matrix);
    p.model = quadratic_model(std::move(a));
    const std::size_t d = p.model->dimension();
    p.initial = user_initial(d);
    if (cfg.v.empty()) {
      const std::size_t k = cfg.k.value_or(1);
      if (k >= d)
        throw ValidationError("--k must be smaller than the dimension");
      for (std::size_t i = 0; i < k; ++i)
        p.initial.directions.push_back(Vec::unit(d, i));
    } else if (cfg.k && *cfg.k != p.initial.k()) {
      throw ValidationError("--k " + std::to_string(*cfg.k) + " but " +
                            std::to_string(p.initial.k()) +
                            " --v vector(s) given");
    }
  } else {
    throw ValidationError("unknown energy '" + cfg.energy +
                          "' (expected rosenbrock|quadratic)");
  }

  if (cfg.final_time)
    p.final_time = *cfg.final_time;
  if (p.initial.x.size() != p.model->dimension())
    throw ValidationError("x0 has dimension " +
                          std::to_string(p.initial.x.size()) +
                          ", energy has " +
                          std::to_string(p.model->dimension()));
  validate_state(p.initial);
  for (double tau : p.taus)
    step_count(p.final_time, tau);
  p.splitting = make_splitting(cfg, *p.model);
  return p;
}

int cmd_run(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    const Problem p = resolve(cfg);
    if (p.taus.size() > 1)
      throw ValidationError("run takes a single --tau");
    const double tau = p.taus.empty() ? 1.0 / 64 : p.taus.front();
    const SchemeConfig sc{.tau = tau,
                          .scheme = p.scheme,
                          .splitting = p.splitting,
                          .tol = {}};
    const Trajectory traj =
        run_trajectory(*p.model, sc, p.initial, p.final_time);
    const std::string format = cfg.format.empty() ? "jsonl" : cfg.format;
    if (format != "jsonl" && format != "csv")
      throw ValidationError("unknown format '" + format + "'");
    emit(cfg.out, out, [&](std::ostream &os) {
      if (format == "csv")
        io::write_trajectory_csv(os, traj);
      else
        io::write_trajectory_jsonl(os, traj);
    });
    return static_cast<int>(kSuccess);
  });
}

int cmd_converge(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    const Problem p = resolve(cfg);
    const std::vector<double> taus = p.taus.empty() ? default_sweep() : p.taus;
    StudyOptions opts;
    opts.tau_ref = p.tau_ref;
    opts.scheme = p.scheme;
    const ConvergenceReport rep = convergence_study(
        *p.model, p.splitting, p.initial, p.final_time, taus, opts);
    const std::string format = cfg.format.empty() ? "csv" : cfg.format;
    if (format != "jsonl" && format != "csv")
      throw ValidationError("unknown format '" + format + "'");
    const std::string body =
        format == "csv" ? io::convergence_csv(rep) : io::convergence_jsonl(rep);
    const bool to_file = !cfg.out.empty() && cfg.out != "-";
    emit(cfg.out, out, [&](std::ostream &os) { os << body; });
    (to_file ? out : err) << io::convergence_table(rep);
    if (rep.sign_flip)
      err << "warning: a direction vector points opposite to the reference "
             "at some node; errors were not sign-aligned\n";
    return static_cast<int>(kSuccess);
  });
}

int cmd_check(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    const Problem p = resolve(cfg);
    std::vector<double> taus = p.taus;
    if (taus.empty())
      taus = default_sweep();
    if (taus.size() == 1)
      taus = {taus[0], taus[0] / 2, taus[0] / 4, taus[0] / 8};
    for (double tau : taus)
      step_count(p.final_time, tau);

    const SchemeConfig base{.tau = taus.front(),
                            .scheme = p.scheme,
                            .splitting = p.splitting,
                            .tol = {}};
    Verdict v;
    ScalingTable table;
    try {
      table = scaling_probe(*p.model, base, p.initial, p.final_time, taus);
    } catch (const NumericalError &e) {
      v.line(false, "stepping",
             e.kind() + " at step " + std::to_string(e.step()) + ": " +
                 e.what());
      emit(cfg.out, out, [&](std::ostream &os) { os << v.text.str(); });
      if (!cfg.out.empty() && cfg.out != "-")
        out << v.text.str();
      err << error_record(e.kind(), e.what(), kNumericalFailure, e.step())
          << '\n';
      return static_cast<int>(kNumericalFailure);
    }

    DefectSummary worst;
    for (const auto &row : table.rows) {
      worst.constraints.norm =
          std::max(worst.constraints.norm, row.defects.constraints.norm);
      worst.constraints.tangency = std::max(worst.constraints.tangency,
                                            row.defects.constraints.tangency);
      worst.constraints.orthonormality =
          std::max(worst.constraints.orthonormality,
                   row.defects.constraints.orthonormality);
      worst.y_identity = std::max(worst.y_identity, row.defects.y_identity);
    }
    v.line(worst.constraints.norm <= 1e-12, "unit-norm",
           "max ||x_n|-1| = " + sci(worst.constraints.norm) + " (<= 1e-12)");
    v.line(worst.constraints.tangency <= 1e-10, "tangency",
           "max |v_i.x_n| = " + sci(worst.constraints.tangency) +
               " (<= 1e-10)");
    v.line(worst.constraints.orthonormality <= 1e-10, "orthonormality",
           "max |v_i.v_j - d_ij| = " + sci(worst.constraints.orthonormality) +
               " (<= 1e-10)");
    v.line(worst.y_identity <= 1e-10, "gram-schmidt-factor",
           "max |Y^2 - Y'^2| = " + sci(worst.y_identity) + " (<= 1e-10)");

    const char *names[3] = {"scaling |x_n - x_tilde|", "scaling |v_tilde.x_n|",
                            "scaling |v_n - v_hat|"};
    for (int c = 0; c < 3; ++c) {
      double largest = 0.0;
      for (const auto &row : table.rows) {
        const double vals[3] = {row.defects.x_tilde_norm,
                                row.defects.transport,
                                row.defects.gram_schmidt};
        largest = std::max(largest, vals[c]);
      }
      if (largest <= 1e-12) {
        v.line(true, names[c], "negligible (max " + sci(largest) + ")");
        continue;
      }
      const auto &slope = table.slopes[static_cast<std::size_t>(c)];
      const bool pass = slope && std::abs(*slope - 2.0) <= 0.2;
      v.line(pass, names[c],
             "slope = " + (slope ? sci(*slope) : std::string("undefined")) +
                 " (2 +/- 0.2)");
    }

    v.text << "tau         |x_n-x_tilde|  |v_tilde.x_n|  |v_n-v_hat|\n";
    for (const auto &row : table.rows) {
      std::string label = io::step_label(row.tau);
      label.resize(std::max<std::size_t>(label.size(), 12), ' ');
      v.text << label << sci(row.defects.x_tilde_norm) << "      "
             << sci(row.defects.transport) << "      "
             << sci(row.defects.gram_schmidt) << '\n';
    }

    emit(cfg.out, out, [&](std::ostream &os) { os << v.text.str(); });
    if (!cfg.out.empty() && cfg.out != "-")
      out << v.text.str();
    return static_cast<int>(v.ok ? kSuccess : kNumericalFailure);
  });
}

int main(int argc, const char *const *argv) {
  CLI::App app{"High-index saddle dynamics on the unit sphere"};
  app.require_subcommand(1);

  app.fallthrough();
  app.config_formatter(std::make_shared<KeyValueOrJsonConfig>());
  app.set_config("--config", "", "Config file (JSON object or key = value)");

  RunConfig cfg;
  double a = 0, b = 0, final_time = 0;
  std::size_t k = 0;
  app.add_option("--energy", cfg.energy, "rosenbrock | quadratic");
  CLI::Option *a_opt = app.add_option("--a", a, "Rosenbrock parameter a");
  CLI::Option *b_opt = app.add_option("--b", b, "Rosenbrock parameter b");
  app.add_option("--matrix", cfg.matrix,
                 "Quadratic energy matrix, rows separated by ';'");
  app.add_option("--preset", cfg.preset, "Initial data preset a|b|c|d");
  CLI::Option *k_opt = app.add_option("--k", k, "Saddle index");
  app.add_option("--x0", cfg.x0, "Initial position, comma separated");
  app.add_option("--v", cfg.v, "Initial direction (repeatable)");
  CLI::Option *t_opt = app.add_option("--T", final_time, "Final time");
  app.add_option("--tau", cfg.taus, "Step size, e.g. 2^-6 (repeatable)");
  app.add_option("--tau-ref", cfg.tau_ref, "Reference step size");
  app.add_option("--scheme", cfg.scheme, "semi | explicit");
  app.add_option("--splitting", cfg.splitting,
                 "hessian0 | explicit-x | file");
  app.add_option("--splitting-file", cfg.splitting_file,
                 "Matrix file for --splitting file");
  app.add_option("--out", cfg.out, "Output path (default stdout)");
  app.add_option("--format", cfg.format, "csv | jsonl");

  CLI::App *run = app.add_subcommand("run", "Integrate one trajectory");
  CLI::App *converge =
      app.add_subcommand("converge", "Error and convergence-rate table");
  app.add_subcommand("check", "Constraint and defect-scaling checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::FileError &e) {
    std::cerr << error_record("IoError", e.what(), kIoError) << '\n';
    return kIoError;
  } catch (const CLI::ParseError &e) {
    std::cerr << error_record("ValidationError", e.what(), kValidationError)
              << '\n';
    return kValidationError;
  } catch (const ValidationError &e) {
    std::cerr << error_record("ValidationError", e.what(), kValidationError)
              << '\n';
    return kValidationError;
  }

  if (a_opt->count())
    cfg.a = a;
  if (b_opt->count())
    cfg.b = b;
  if (k_opt->count())
    cfg.k = k;
  if (t_opt->count())
    cfg.final_time = final_time;

  if (run->parsed())
    return cmd_run(cfg, std::cout, std::cerr);
  if (converge->parsed())
    return cmd_converge(cfg, std::cout, std::cerr);
  return cmd_check(cfg, std::cout, std::cerr);
}

} // namespace hisd::cli
