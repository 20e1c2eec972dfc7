#include "hisd/io.hpp"

#include "hisd/errors.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace hisd::io {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(std::string_view text, const char *what) {
  const std::string s = trim(text);
  if (s.empty())
    throw ValidationError(std::string(what) + ": empty number");
  char *end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    throw ValidationError(std::string(what) + ": cannot parse '" + s + "'");
  return v;
}

std::string sci3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2E", v);
  return buf;
}

std::string rate2(const std::optional<double> &r) {
  if (!r)
    return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *r);
  return buf;
}

json vec_json(const Vec &v) { return json(v.raw()); }

Vec json_vec(const json &j) { return Vec(j.get<std::vector<double>>()); }

} // namespace

double parse_step(std::string_view text) {
  std::string s = trim(text);
  if (s.rfind("2^", 0) == 0) {
    std::string e = s.substr(2);
    if (e.size() >= 2 && e.front() == '{' && e.back() == '}')
      e = e.substr(1, e.size() - 2);
    char *end = nullptr;
    errno = 0;
    const long p = std::strtol(e.c_str(), &end, 10);
    if (e.empty() || end != e.c_str() + e.size() || errno == ERANGE ||
        p < -1000 || p > 1000)
      throw ValidationError("step size: cannot parse exponent in '" + s + "'");
    return std::ldexp(1.0, static_cast<int>(p));
  }
  const double v = parse_number(s, "step size");
  if (!(v > 0.0))
    throw ValidationError("step size must be positive, got '" + s + "'");
  return v;
}

std::string step_label(double tau) {
  int e = 0;
  const double m = std::frexp(tau, &e);
  if (m == 0.5)
    return "2^" + std::to_string(e - 1);
  return full_precision(tau);
}

std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Vec parse_vector(std::string_view text) {
  std::vector<double> out;
  std::string s = trim(text);
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')')
    s = s.substr(1, s.size() - 2);
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto stop = comma == std::string::npos ? s.size() : comma;
    out.push_back(parse_number(std::string_view(s).substr(start, stop - start),
                               "vector"));
    if (comma == std::string::npos)
      break;
    start = comma + 1;
  }
  return Vec(std::move(out));
}

Mat parse_matrix(std::string_view text) {
  std::vector<Vec> rows;
  const std::string s = trim(text);
  std::size_t start = 0;
  while (true) {
    const auto semi = s.find(';', start);
    const auto stop = semi == std::string::npos ? s.size() : semi;
    rows.push_back(parse_vector(std::string_view(s).substr(start, stop - start)));
    if (semi == std::string::npos)
      break;
    start = semi + 1;
  }
  Mat m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size())
      throw ValidationError("matrix: row " + std::to_string(i + 1) + " has " +
                            std::to_string(rows[i].size()) +
                            " entries, expected " +
                            std::to_string(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j)
      m(i, j) = rows[i][j];
  }
  return m;
}

void write_trajectory_jsonl(std::ostream &os, const Trajectory &traj) {
  for (std::size_t m = 0; m < traj.states.size(); ++m) {
    const SaddleState &s = traj.states[m];
    json rec;
    rec["n"] = m * traj.stride;
    rec["t"] = traj.times[m];
    rec["x"] = vec_json(s.x);
    json vs = json::array();
    for (const Vec &v : s.directions)
      vs.push_back(vec_json(v));
    rec["v"] = std::move(vs);
    if (m > 0 && m - 1 < traj.diagnostics.size()) {
      const StepDiagnostics &d = traj.diagnostics[m - 1];
      json dj;
      dj["x_tilde"] = vec_json(d.x_tilde);
      dj["x_tilde_norm_defect"] = d.x_tilde_norm_defect;
      json dirs = json::array();
      for (const auto &r : d.directions) {
        dirs.push_back({{"v_tilde", vec_json(r.v_tilde)},
                        {"v_hat", vec_json(r.v_hat)},
                        {"transport_defect", r.transport_defect},
                        {"gs_defect", r.gs_defect},
                        {"Y", r.y}});
      }
      dj["directions"] = std::move(dirs);
      rec["diag"] = std::move(dj);
    }
    os << rec.dump() << '\n';
  }
}

Trajectory read_trajectory_jsonl(std::istream &is) {
  Trajectory traj;
  std::string line;
  std::vector<std::size_t> steps;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    json rec;
    try {
      rec = json::parse(line);
      SaddleState s;
      s.x = json_vec(rec.at("x"));
      for (const auto &v : rec.at("v"))
        s.directions.push_back(json_vec(v));
      s.t = rec.at("t").get<double>();
      steps.push_back(rec.at("n").get<std::size_t>());
      traj.times.push_back(s.t);
      traj.states.push_back(std::move(s));
    } catch (const json::exception &e) {
      throw ValidationError("trajectory line " + std::to_string(lineno) +
                            ": " + e.what());
    }
  }
  if (traj.states.empty())
    throw ValidationError("trajectory file has no records");
  traj.stride = steps.size() > 1 ? steps[1] - steps[0] : 1;
  traj.steps = steps.back();
  traj.final_time = traj.times.back();
  if (traj.steps > 0)
    traj.tau = traj.final_time / static_cast<double>(traj.steps);
  return traj;
}

void write_trajectory_csv(std::ostream &os, const Trajectory &traj) {
  const std::size_t d = traj.states.front().dimension();
  const std::size_t k = traj.states.front().k();
  os << "n,t";
  for (std::size_t c = 0; c < d; ++c)
    os << ",x" << c + 1;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t c = 0; c < d; ++c)
      os << ",v" << i + 1 << '_' << c + 1;
  os << '\n';
  for (std::size_t m = 0; m < traj.states.size(); ++m) {
    const SaddleState &s = traj.states[m];
    os << m * traj.stride << ',' << full_precision(traj.times[m]);
    for (std::size_t c = 0; c < d; ++c)
      os << ',' << full_precision(s.x[c]);
    for (const Vec &v : s.directions)
      for (std::size_t c = 0; c < d; ++c)
        os << ',' << full_precision(v[c]);
    os << '\n';
  }
}

std::string convergence_csv(const ConvergenceReport &rep) {
  std::ostringstream os;
  os << "tau_label,tau,err_x,CR_x";
  for (std::size_t i = 0; i < rep.k(); ++i)
    os << ",err_v" << i + 1 << ",CR_v" << i + 1;
  os << '\n';
  auto rate = [](const std::optional<double> &r) {
    return r ? full_precision(*r) : std::string();
  };
  for (std::size_t j = 0; j < rep.taus.size(); ++j) {
    os << step_label(rep.taus[j]) << ',' << full_precision(rep.taus[j]) << ','
       << full_precision(rep.err_x[j]) << ','
       << (j > 0 ? rate(rep.rate_x[j - 1]) : "");
    for (std::size_t i = 0; i < rep.k(); ++i)
      os << ',' << full_precision(rep.err_v[j][i]) << ','
         << (j > 0 ? rate(rep.rate_v[i][j - 1]) : "");
    os << '\n';
  }
  return os.str();
}

std::string convergence_jsonl(const ConvergenceReport &rep) {
  std::ostringstream os;
  for (std::size_t j = 0; j < rep.taus.size(); ++j) {
    json rec;
    rec["tau"] = rep.taus[j];
    rec["tau_label"] = step_label(rep.taus[j]);
    rec["err_x"] = rep.err_x[j];
    rec["CR_x"] = j > 0 && rep.rate_x[j - 1] ? json(*rep.rate_x[j - 1]) : json();
    json ev = json::array(), cv = json::array();
    for (std::size_t i = 0; i < rep.k(); ++i) {
      ev.push_back(rep.err_v[j][i]);
      cv.push_back(j > 0 && rep.rate_v[i][j - 1] ? json(*rep.rate_v[i][j - 1])
                                                  : json());
    }
    rec["err_v"] = std::move(ev);
    rec["CR_v"] = std::move(cv);
    os << rec.dump() << '\n';
  }
  return os.str();
}

std::string convergence_table(const ConvergenceReport &rep) {
  std::ostringstream os;
  auto cell = [&](const std::string &s, int w) {
    os << s;
    for (int p = static_cast<int>(s.size()); p < w; ++p)
      os << ' ';
  };
  cell("tau", 10);
  cell("max|e^x|", 12);
  cell("CR", 7);
  for (std::size_t i = 0; i < rep.k(); ++i) {
    cell("max|e^v" + std::to_string(i + 1) + "|", 12);
    cell("CR", 7);
  }
  os << '\n';
  for (std::size_t j = 0; j < rep.taus.size(); ++j) {
    cell(step_label(rep.taus[j]), 10);
    cell(sci3(rep.err_x[j]), 12);
    cell(j > 0 ? rate2(rep.rate_x[j - 1]) : "", 7);
    for (std::size_t i = 0; i < rep.k(); ++i) {
      cell(sci3(rep.err_v[j][i]), 12);
      cell(j > 0 ? rate2(rep.rate_v[i][j - 1]) : "", 7);
    }
    os << '\n';
  }
  return os.str();
}

} // namespace hisd::io
