#pragma once

#include "radstereo/geometry.hpp"

#include <Eigen/Core>

namespace radstereo {

struct DistortedPoint {
  Eigen::Vector2d xy = Eigen::Vector2d::Zero();
  CoordinateSpace space = CoordinateSpace::normalized;
};

struct UndistortedPoint {
  Eigen::Vector2d xy = Eigen::Vector2d::Zero();
  CoordinateSpace space = CoordinateSpace::normalized;
};

// Radial polynomial x_d = (1 + k1 r^2 + k2 r^4 + k3 r^6) x_n on normalized
// coordinates. Construction checks that the gain stays positive and that
// r * gain(r) is strictly increasing on [0, working_radius], which is what
// makes the model invertible there.
class PolyDistortion {
 public:
  static constexpr double kDefaultWorkingRadius = 0.8;

  PolyDistortion() = default;
  PolyDistortion(double k1, double k2, double k3,
                 double working_radius = kDefaultWorkingRadius);

  double k1() const { return k1_; }
  double k2() const { return k2_; }
  double k3() const { return k3_; }
  double working_radius() const { return working_radius_; }

  double gain(double r) const;
  // Largest distorted radius reachable from inside the working radius.
  double max_distorted_radius() const;

 private:
  double k1_ = 0.0;
  double k2_ = 0.0;
  double k3_ = 0.0;
  double working_radius_ = kDefaultWorkingRadius;
};

// Single-parameter division model about `center`, with the radius measured
// as |p - center| / scale before lambda is applied.
class DivisionDistortion {
 public:
  DivisionDistortion() = default;
  DivisionDistortion(double lambda, Eigen::Vector2d center, double scale,
                     CoordinateSpace space, double working_radius);

  // Centered on the principal point of normalized coordinates.
  static DivisionDistortion normalized(double lambda,
                                       double working_radius = PolyDistortion::kDefaultWorkingRadius);
  // Centered on the image center, scale = half the image width, working
  // radius = half the image diagonal.
  static DivisionDistortion pixel(double lambda, ImageSize image = {});

  double lambda() const { return lambda_; }
  const Eigen::Vector2d& center() const { return center_; }
  double scale() const { return scale_; }
  CoordinateSpace space() const { return space_; }
  double working_radius() const { return working_radius_; }

  // 1 + lambda * (|p - center| / scale)^2
  double denominator(const Eigen::Vector2d& p) const;

 private:
  double lambda_ = 0.0;
  Eigen::Vector2d center_ = Eigen::Vector2d::Zero();
  double scale_ = 1.0;
  CoordinateSpace space_ = CoordinateSpace::normalized;
  double working_radius_ = PolyDistortion::kDefaultWorkingRadius;
};

DistortedPoint poly_distort(const PolyDistortion& d, const NormalizedPoint& p);

// Numeric inversion: fixed-point iteration on x = p / gain(|x|), falling back
// to a safeguarded Newton solve of the scalar radial equation. Throws
// NumericalError (carrying the last residual) when neither converges.
NormalizedPoint poly_undistort(const PolyDistortion& d, const DistortedPoint& p);

UndistortedPoint division_undistort(const DivisionDistortion& d, const DistortedPoint& p);

// Closed-form inverse of division_undistort: the radial equation
// rho_u (1 + lambda rho_d^2) = rho_d is a quadratic in rho_d. Throws
// NumericalError when no positive root lies within the working radius.
DistortedPoint division_distort(const DivisionDistortion& d, const UndistortedPoint& p);

// Homogeneous vector ((p - c) + c * w, w) with w = 1 + lambda * rho^2. For a
// zero center this is (x_d, y_d, w); in every case it dehomogenizes to
// division_undistort(p).
Eigen::Vector3d lift_distorted_homogeneous(const DivisionDistortion& d, const DistortedPoint& p);

// Re-expresses a pixel-space division model in normalized coordinates. Only
// exact for square pixels without skew; anything else throws InvalidArgument.
DivisionDistortion to_normalized_space(const DivisionDistortion& d, const Intrinsics& intr);

}  // namespace radstereo
