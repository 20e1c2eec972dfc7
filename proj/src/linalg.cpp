#include "hisd/linalg.hpp"

#include "hisd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hisd {

namespace {

void require_same(std::size_t a, std::size_t b, const char *op) {
  if (a != b) {
    throw DimensionMismatch(std::string(op) + ": dimension mismatch (" +
                            std::to_string(a) + " vs " + std::to_string(b) +
                            ")");
  }
}

} // namespace

Vec Vec::unit(std::size_t n, std::size_t i) {
  Vec e(n);
  e[i] = 1.0;
  return e;
}

bool Vec::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Vec &Vec::operator+=(const Vec &other) {
  require_same(size(), other.size(), "Vec +=");
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] += other.data_[i];
  return *this;
}

Vec &Vec::operator-=(const Vec &other) {
  require_same(size(), other.size(), "Vec -=");
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] -= other.data_[i];
  return *this;
}

Vec &Vec::operator*=(double s) {
  for (double &v : data_)
    v *= s;
  return *this;
}

Vec operator+(Vec a, const Vec &b) { return a += b; }
Vec operator-(Vec a, const Vec &b) { return a -= b; }
Vec operator-(Vec a) { return a *= -1.0; }
Vec operator*(double s, Vec a) { return a *= s; }
Vec operator*(Vec a, double s) { return a *= s; }

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows)
    : n_(rows.size()) {
  data_.reserve(n_ * n_);
  for (const auto &row : rows) {
    require_same(row.size(), n_, "Mat literal");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n);
  for (std::size_t i = 0; i < n; ++i)
    m(i, i) = 1.0;
  return m;
}

Mat Mat::diagonal(const Vec &d) {
  Mat m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    m(i, i) = d[i];
  return m;
}

bool Mat::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Mat Mat::transpose() const {
  Mat t(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      t(j, i) = (*this)(i, j);
  return t;
}

double Mat::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_)
    m = std::max(m, std::abs(v));
  return m;
}

Mat &Mat::operator+=(const Mat &other) {
  require_same(n_, other.n_, "Mat +=");
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] += other.data_[i];
  return *this;
}

Mat &Mat::operator-=(const Mat &other) {
  require_same(n_, other.n_, "Mat -=");
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] -= other.data_[i];
  return *this;
}

Mat &Mat::operator*=(double s) {
  for (double &v : data_)
    v *= s;
  return *this;
}

Mat operator+(Mat a, const Mat &b) { return a += b; }
Mat operator-(Mat a, const Mat &b) { return a -= b; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat operator*(const Mat &a, const Mat &b) {
  require_same(a.size(), b.size(), "Mat * Mat");
  const std::size_t n = a.size();
  Mat c(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < n; ++l)
        s += a(i, l) * b(l, j);
      c(i, j) = s;
    }
  return c;
}

Vec operator*(const Mat &a, const Vec &x) {
  require_same(a.size(), x.size(), "Mat * Vec");
  const std::size_t n = a.size();
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

double dot(const Vec &a, const Vec &b) {
  require_same(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

double norm(const Vec &a) { return std::sqrt(dot(a, a)); }

Mat outer(const Vec &a, const Vec &b) {
  require_same(a.size(), b.size(), "outer");
  Mat m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      m(i, j) = a[i] * b[j];
  return m;
}

double frobenius_norm(const Mat &a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

double asymmetry(const Mat &a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      m = std::max(m, std::abs(a(i, j) - a(j, i)));
  return m;
}

double relative_residual(const Mat &a, const Vec &x, const Vec &b) {
  const double denom = frobenius_norm(a) * norm(x) + norm(b);
  if (denom == 0.0)
    return 0.0;
  return norm(a * x - b) / denom;
}

Vec solve(const Mat &a, const Vec &b, const SolveOptions &opts) {
  require_same(a.size(), b.size(), "solve");
  const std::size_t n = a.size();
  Mat lu = a;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  const double pivot_eps = opts.pivot_rel * a.max_abs();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(lu(r, col)) > std::abs(lu(piv, col)))
        piv = r;
    if (!(std::abs(lu(piv, col)) > pivot_eps)) {
      throw SingularMatrix("solve: pivot " + std::to_string(col) +
                           " below threshold");
    }
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j)
        std::swap(lu(piv, j), lu(col, j));
      std::swap(perm[piv], perm[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = lu(r, col) / lu(col, col);
      lu(r, col) = f;
      for (std::size_t j = col + 1; j < n; ++j)
        lu(r, j) -= f * lu(col, j);
    }
  }

  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[perm[i]];
    for (std::size_t j = 0; j < i; ++j)
      s -= lu(i, j) * y[j];
    y[i] = s;
  }
  Vec x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < n; ++j)
      s -= lu(ii, j) * x[j];
    x[ii] = s / lu(ii, ii);
  }

  const double res = relative_residual(a, x, b);
  if (!(res <= opts.tol_solve)) {
    throw InvariantViolation("solve: relative residual " +
                             std::to_string(res) + " exceeds tolerance");
  }
  return x;
}

} // namespace hisd
