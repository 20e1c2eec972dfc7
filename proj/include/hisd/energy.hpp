#pragma once

#include "hisd/linalg.hpp"

#include <functional>
#include <memory>
#include <string>

namespace hisd {

/// Smooth energy E on R^d. Implementations supply the force F = -grad E and
/// J = -Hess E. Evaluators must be pure so models can be shared across threads.
class EnergyModel {
public:
  virtual ~EnergyModel() = default;

  virtual std::size_t dimension() const = 0;
  virtual double energy(const Vec &x) const = 0;
  virtual Vec force(const Vec &x) const = 0;
  /// Returns J(x) = -Hess E(x); symmetric.
  virtual Mat hessian_neg(const Vec &x) const = 0;
  virtual std::string describe() const = 0;
};

using EnergyPtr = std::shared_ptr<const EnergyModel>;

struct RosenbrockParams {
  double a = -1.0;
  double b = 5.5;
};

/// E(x) = a(sqrt3 x2 - 3x1^2)^2 + b(sqrt3 x1 - 1)^2
///      + a(sqrt3 x3 - 3x2^2)^2 + b(sqrt3 x2 - 1)^2  on R^3.
/// x* = (1,1,1)/sqrt3 is a constrained saddle: index 1 for (a,b) = (-1,5.5),
/// index 2 for (a,b) = (-0.5,1.5).
class RosenbrockEnergy final : public EnergyModel {
public:
  explicit RosenbrockEnergy(RosenbrockParams p) : p_(p) {}

  std::size_t dimension() const override { return 3; }
  double energy(const Vec &x) const override;
  Vec force(const Vec &x) const override;
  Mat hessian_neg(const Vec &x) const override;
  std::string describe() const override;

  const RosenbrockParams &params() const noexcept { return p_; }

private:
  RosenbrockParams p_;
};

double rosenbrock_energy(const RosenbrockParams &p, const Vec &x);
Vec rosenbrock_force(const RosenbrockParams &p, const Vec &x);
Mat rosenbrock_hessian_neg(const RosenbrockParams &p, const Vec &x);

/// E(x) = x^T A x / 2 with symmetric A.
class QuadraticEnergy final : public EnergyModel {
public:
  /// Throws ValidationError unless A is symmetric (to 1e-12).
  explicit QuadraticEnergy(Mat a);

  std::size_t dimension() const override { return a_.size(); }
  double energy(const Vec &x) const override;
  Vec force(const Vec &x) const override;
  Mat hessian_neg(const Vec &x) const override;
  std::string describe() const override;

  const Mat &matrix() const noexcept { return a_; }

private:
  Mat a_;
};

EnergyPtr make_rosenbrock(RosenbrockParams p);
EnergyPtr quadratic_model(Mat a);

/// F(x) = L x + N(x) with a fixed matrix L. The nonlinear part is always the
/// exact remainder F(x) - L x, so the decomposition reconstructs F.
class Splitting {
public:
  explicit Splitting(Mat linear_part) : linear_(std::move(linear_part)) {}

  const Mat &linear_part() const noexcept { return linear_; }
  Vec nonlinear_part(const EnergyModel &m, const Vec &x) const;

  /// |L x + N(x) - F(x)| / (1 + |F(x)|).
  double reconstruction_defect(const EnergyModel &m, const Vec &x) const;

private:
  Mat linear_;
};

enum class SplittingMode { HessianAtOrigin, ExplicitX, UserMatrix };

/// L = J(x_ref), evaluated once.
Splitting default_splitting(const EnergyModel &m, const Vec &x_ref);
Splitting default_splitting(const EnergyModel &m);
/// L = 0: the position sub-step becomes fully explicit.
Splitting explicit_x_splitting(std::size_t d);

using ScalarField = std::function<double(const Vec &)>;

/// Central differences.
Vec fd_gradient(const ScalarField &e, const Vec &x, double h = 1e-5);
/// Nested central differences, symmetrized.
Mat fd_hessian(const ScalarField &e, const Vec &x, double h = 1e-4);

} // namespace hisd
