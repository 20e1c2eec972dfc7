#include "hisd/energy.hpp"

#include "hisd/errors.hpp"

#include <cmath>
#include <sstream>

namespace hisd {

namespace {

const double kSqrt3 = std::sqrt(3.0);

void require_dim3(const Vec &x) {
  if (x.size() != 3)
    throw DimensionMismatch("rosenbrock: expected a 3-vector");
}

} // namespace

double rosenbrock_energy(const RosenbrockParams &p, const Vec &x) {
  require_dim3(x);
  const double u1 = kSqrt3 * x[1] - 3.0 * x[0] * x[0];
  const double w1 = kSqrt3 * x[0] - 1.0;
  const double u2 = kSqrt3 * x[2] - 3.0 * x[1] * x[1];
  const double w2 = kSqrt3 * x[1] - 1.0;
  return p.a * u1 * u1 + p.b * w1 * w1 + p.a * u2 * u2 + p.b * w2 * w2;
}

Vec rosenbrock_force(const RosenbrockParams &p, const Vec &x) {
  require_dim3(x);
  const double u1 = kSqrt3 * x[1] - 3.0 * x[0] * x[0];
  const double w1 = kSqrt3 * x[0] - 1.0;
  const double u2 = kSqrt3 * x[2] - 3.0 * x[1] * x[1];
  const double w2 = kSqrt3 * x[1] - 1.0;
  const double g0 = -12.0 * p.a * u1 * x[0] + 2.0 * kSqrt3 * p.b * w1;
  const double g1 = 2.0 * kSqrt3 * p.a * u1 - 12.0 * p.a * u2 * x[1] +
                    2.0 * kSqrt3 * p.b * w2;
  const double g2 = 2.0 * kSqrt3 * p.a * u2;
  return Vec{-g0, -g1, -g2};
}

Mat rosenbrock_hessian_neg(const RosenbrockParams &p, const Vec &x) {
  require_dim3(x);
  const double u1 = kSqrt3 * x[1] - 3.0 * x[0] * x[0];
  const double u2 = kSqrt3 * x[2] - 3.0 * x[1] * x[1];
  const double h00 = 72.0 * p.a * x[0] * x[0] - 12.0 * p.a * u1 + 6.0 * p.b;
  const double h01 = -12.0 * kSqrt3 * p.a * x[0];
  const double h11 = 6.0 * p.a + 72.0 * p.a * x[1] * x[1] - 12.0 * p.a * u2 +
                     6.0 * p.b;
  const double h12 = -12.0 * kSqrt3 * p.a * x[1];
  const double h22 = 6.0 * p.a;
  return Mat{{-h00, -h01, 0.0}, {-h01, -h11, -h12}, {0.0, -h12, -h22}};
}

double RosenbrockEnergy::energy(const Vec &x) const {
  return rosenbrock_energy(p_, x);
}
Vec RosenbrockEnergy::force(const Vec &x) const {
  return rosenbrock_force(p_, x);
}
Mat RosenbrockEnergy::hessian_neg(const Vec &x) const {
  return rosenbrock_hessian_neg(p_, x);
}

std::string RosenbrockEnergy::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "rosenbrock(a=" << p_.a << ", b=" << p_.b << ")";
  return os.str();
}

QuadraticEnergy::QuadraticEnergy(Mat a) : a_(std::move(a)) {
  if (a_.size() == 0)
    throw ValidationError("quadratic energy: empty matrix");
  if (!a_.all_finite())
    throw ValidationError("quadratic energy: non-finite matrix entry");
  if (asymmetry(a_) > 1e-12)
    throw ValidationError("quadratic energy: matrix is not symmetric");
}

double QuadraticEnergy::energy(const Vec &x) const {
  return 0.5 * dot(x, a_ * x);
}
Vec QuadraticEnergy::force(const Vec &x) const { return -(a_ * x); }
Mat QuadraticEnergy::hessian_neg(const Vec &) const { return -1.0 * a_; }

std::string QuadraticEnergy::describe() const {
  return "quadratic(d=" + std::to_string(a_.size()) + ")";
}

EnergyPtr make_rosenbrock(RosenbrockParams p) {
  return std::make_shared<RosenbrockEnergy>(p);
}

EnergyPtr quadratic_model(Mat a) {
  return std::make_shared<QuadraticEnergy>(std::move(a));
}

Vec Splitting::nonlinear_part(const EnergyModel &m, const Vec &x) const {
  return m.force(x) - linear_ * x;
}

double Splitting::reconstruction_defect(const EnergyModel &m,
                                        const Vec &x) const {
  const Vec f = m.force(x);
  return norm(linear_ * x + nonlinear_part(m, x) - f) / (1.0 + norm(f));
}

Splitting default_splitting(const EnergyModel &m, const Vec &x_ref) {
  return Splitting(m.hessian_neg(x_ref));
}

Splitting default_splitting(const EnergyModel &m) {
  return default_splitting(m, Vec(m.dimension()));
}

Splitting explicit_x_splitting(std::size_t d) { return Splitting(Mat(d)); }

Vec fd_gradient(const ScalarField &e, const Vec &x, double h) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (e(xp) - e(xm)) / (2.0 * h);
  }
  return g;
}

Mat fd_hessian(const ScalarField &e, const Vec &x, double h) {
  const std::size_t d = x.size();
  Mat hess(d);
  auto shifted = [&](std::size_t i, double si, std::size_t j, double sj) {
    Vec y = x;
    y[i] += si;
    y[j] += sj;
    return e(y);
  };
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      const double v = (shifted(i, h, j, h) - shifted(i, h, j, -h) -
                        shifted(i, -h, j, h) + shifted(i, -h, j, -h)) /
                       (4.0 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  return hess;
}

} // namespace hisd
