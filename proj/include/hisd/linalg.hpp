#pragma once

// Small dense real linear algebra for the saddle dynamics stepper.
// Sizes are runtime values but expected to be tiny (d = 3 in the test
// problems), so everything is stored densely and summed left to right.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace hisd {

class DimensionMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class Vec {
public:
  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vec(std::initializer_list<double> values) : data_(values) {}
  explicit Vec(std::vector<double> values) : data_(std::move(values)) {}

  static Vec unit(std::size_t n, std::size_t i);

  std::size_t size() const noexcept { return data_.size(); }
  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double> &raw() const noexcept { return data_; }

  bool all_finite() const noexcept;

  Vec &operator+=(const Vec &other);
  Vec &operator-=(const Vec &other);
  Vec &operator*=(double s);

  friend bool operator==(const Vec &, const Vec &) = default;

private:
  std::vector<double> data_;
};

Vec operator+(Vec a, const Vec &b);
Vec operator-(Vec a, const Vec &b);
Vec operator-(Vec a);
Vec operator*(double s, Vec a);
Vec operator*(Vec a, double s);

/// Square matrix, row-major.
class Mat {
public:
  Mat() = default;
  explicit Mat(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);
  static Mat diagonal(const Vec &d);

  std::size_t size() const noexcept { return n_; }
  double &operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * n_ + j];
  }

  bool all_finite() const noexcept;
  Mat transpose() const;
  double max_abs() const noexcept;

  Mat &operator+=(const Mat &other);
  Mat &operator-=(const Mat &other);
  Mat &operator*=(double s);

  friend bool operator==(const Mat &, const Mat &) = default;

private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat &b);
Mat operator-(Mat a, const Mat &b);
Mat operator*(double s, Mat a);
Mat operator*(const Mat &a, const Mat &b);
Vec operator*(const Mat &a, const Vec &x);

double dot(const Vec &a, const Vec &b);
double norm(const Vec &a);
Mat outer(const Vec &a, const Vec &b);

/// Spectral-norm upper bound used in residual checks (Frobenius norm).
double frobenius_norm(const Mat &a);

/// Largest |A_ij - A_ji|.
double asymmetry(const Mat &a);

struct SolveOptions {
  double tol_solve = 1e-10;
  /// Pivots below pivot_rel * max|A| count as singular.
  double pivot_rel = 1e-14;
};

/// Dense LU with partial pivoting. Throws SingularMatrix on a tiny pivot and
/// InvariantViolation when the relative residual exceeds tol_solve.
Vec solve(const Mat &a, const Vec &b, const SolveOptions &opts = {});

/// Relative residual |A x - b| / (|A| |x| + |b|); 0 when the denominator is 0.
double relative_residual(const Mat &a, const Vec &x, const Vec &b);

} // namespace hisd
