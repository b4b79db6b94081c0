#include "radstereo/distortion.hpp"

#include "radstereo/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace radstereo {

namespace {

constexpr int kFixedPointMaxIter = 100;
constexpr double kFixedPointTol = 1e-12;
constexpr int kNewtonMaxIter = 100;

// Minimum of c0 + c1 u + c2 u^2 + c3 u^3 over u in [0, umax].
double cubic_min(double c0, double c1, double c2, double c3, double umax) {
  auto f = [&](double u) { return c0 + u * (c1 + u * (c2 + u * c3)); };
  double best = std::min(f(0.0), f(umax));
  // Critical points: c1 + 2 c2 u + 3 c3 u^2 = 0.
  const double a = 3.0 * c3, b = 2.0 * c2, c = c1;
  std::array<double, 2> roots{};
  int n = 0;
  if (a == 0.0) {
    if (b != 0.0) roots[n++] = -c / b;
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      roots[n++] = (-b + s) / (2.0 * a);
      roots[n++] = (-b - s) / (2.0 * a);
    }
  }
  for (int i = 0; i < n; ++i)
    if (roots[i] > 0.0 && roots[i] < umax) best = std::min(best, f(roots[i]));
  return best;
}

void require_space(const DistortedPoint& p, CoordinateSpace space, const char* what) {
  if (p.space != space)
    throw InvalidArgument(std::string(what) + ": point is in " + to_string(p.space) +
                          " space, model expects " + to_string(space));
}

// Smallest positive root t of c t^2 - t + 1 = 0, the distorted/undistorted
// radius ratio for c = lambda * rho_u^2. Written as 2 / (1 + sqrt(1 - 4c)) to
// stay accurate as c -> 0.
double division_radial_ratio(double c) {
  const double disc = 1.0 - 4.0 * c;
  if (disc < 0.0) throw NumericalError("division model: no real distorted radius", disc);
  return 2.0 / (1.0 + std::sqrt(disc));
}

}  // namespace

PolyDistortion::PolyDistortion(double k1, double k2, double k3, double working_radius)
    : k1_(k1), k2_(k2), k3_(k3), working_radius_(working_radius) {
  if (!std::isfinite(k1) || !std::isfinite(k2) || !std::isfinite(k3))
    throw InvalidArgument("polynomial coefficients must be finite");
  if (!(working_radius > 0.0)) throw InvalidArgument("working radius must be positive");
  const double umax = working_radius * working_radius;
  if (cubic_min(1.0, k1, k2, k3, umax) <= 0.0)
    throw InvalidArgument("polynomial gain is not positive over the working radius");
  // d/dr (r g(r)) = 1 + 3 k1 u + 5 k2 u^2 + 7 k3 u^3 with u = r^2.
  if (cubic_min(1.0, 3.0 * k1, 5.0 * k2, 7.0 * k3, umax) <= 0.0)
    throw InvalidArgument("polynomial distortion is not monotone over the working radius");
}

double PolyDistortion::gain(double r) const {
  const double u = r * r;
  return 1.0 + u * (k1_ + u * (k2_ + u * k3_));
}

double PolyDistortion::max_distorted_radius() const {
  return working_radius_ * gain(working_radius_);
}

DivisionDistortion::DivisionDistortion(double lambda, Eigen::Vector2d center, double scale,
                                       CoordinateSpace space, double working_radius)
    : lambda_(lambda), center_(std::move(center)), scale_(scale), space_(space),
      working_radius_(working_radius) {
  if (!std::isfinite(lambda)) throw InvalidArgument("lambda must be finite");
  if (!center_.allFinite()) throw InvalidArgument("distortion center must be finite");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("scale must be positive");
  if (!(working_radius > 0.0)) throw InvalidArgument("working radius must be positive");
  const double rho = working_radius / scale;
  if (1.0 + lambda * rho * rho <= 0.0)
    throw InvalidArgument("division denominator vanishes inside the working radius");
}

DivisionDistortion DivisionDistortion::normalized(double lambda, double working_radius) {
  return {lambda, Eigen::Vector2d::Zero(), 1.0, CoordinateSpace::normalized, working_radius};
}

DivisionDistortion DivisionDistortion::pixel(double lambda, ImageSize image) {
  const Eigen::Vector2d center{0.5 * image.width, 0.5 * image.height};
  return {lambda, center, 0.5 * image.width, CoordinateSpace::pixel, center.norm()};
}

double DivisionDistortion::denominator(const Eigen::Vector2d& p) const {
  return 1.0 + lambda_ * (p - center_).squaredNorm() / (scale_ * scale_);
}

DistortedPoint poly_distort(const PolyDistortion& d, const NormalizedPoint& p) {
  const double r = std::hypot(p.x, p.y);
  return {d.gain(r) * p.vec(), CoordinateSpace::normalized};
}

NormalizedPoint poly_undistort(const PolyDistortion& d, const DistortedPoint& p) {
  require_space(p, CoordinateSpace::normalized, "poly_undistort");
  const Eigen::Vector2d target = p.xy;
  const double rd = target.norm();
  if (rd == 0.0) return {0.0, 0.0};

  Eigen::Vector2d x = target;
  for (int i = 0; i < kFixedPointMaxIter; ++i) {
    const Eigen::Vector2d next = target / d.gain(x.norm());
    const double step = (next - x).norm();
    x = next;
    if (step < kFixedPointTol) {
      if (x.norm() <= d.working_radius()) return {x.x(), x.y()};
      break;
    }
    if (!x.allFinite()) break;
  }

  // Scalar solve of r g(r) = rd on [0, working radius], where r g(r) is
  // increasing. Newton steps leaving the bracket fall back to bisection.
  double lo = 0.0, hi = d.working_radius();
  auto h = [&](double r) { return r * d.gain(r) - rd; };
  if (h(hi) < 0.0)
    throw NumericalError("poly_undistort: point lies outside the invertible region", h(hi));
  double r = std::min(rd, hi);
  double residual = h(r);
  for (int i = 0; i < kNewtonMaxIter; ++i) {
    if (residual < 0.0) lo = r; else hi = r;
    const double u = r * r;
    const double dh = 1.0 + u * (3.0 * d.k1() + u * (5.0 * d.k2() + u * 7.0 * d.k3()));
    double next = r - residual / dh;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - r);
    r = next;
    residual = h(r);
    if (step < kFixedPointTol || residual == 0.0) {
      const Eigen::Vector2d out = target * (r / rd);
      return {out.x(), out.y()};
    }
  }
  throw NumericalError("poly_undistort: radial solve did not converge", residual);
}

UndistortedPoint division_undistort(const DivisionDistortion& d, const DistortedPoint& p) {
  require_space(p, d.space(), "division_undistort");
  const double w = d.denominator(p.xy);
  if (!(w > 1e-12)) throw NumericalError("division_undistort: vanishing denominator", w);
  return {d.center() + (p.xy - d.center()) / w, p.space};
}

DistortedPoint division_distort(const DivisionDistortion& d, const UndistortedPoint& p) {
  if (p.space != d.space())
    throw InvalidArgument(std::string("division_distort: point is in ") + to_string(p.space) +
                          " space, model expects " + to_string(d.space()));
  const Eigen::Vector2d offset = p.xy - d.center();
  const double rho_u = offset.norm() / d.scale();
  if (rho_u == 0.0 || d.lambda() == 0.0) return {p.xy, p.space};
  const double t = division_radial_ratio(d.lambda() * rho_u * rho_u);
  const Eigen::Vector2d distorted_offset = t * offset;
  if (distorted_offset.norm() > d.working_radius() * (1.0 + 1e-9))
    throw NumericalError("division_distort: distorted point outside working radius",
                         distorted_offset.norm());
  return {d.center() + distorted_offset, p.space};
}

Eigen::Vector3d lift_distorted_homogeneous(const DivisionDistortion& d, const DistortedPoint& p) {
  require_space(p, d.space(), "lift_distorted_homogeneous");
  const double w = d.denominator(p.xy);
  const Eigen::Vector2d xy = (p.xy - d.center()) + d.center() * w;
  return {xy.x(), xy.y(), w};
}

DivisionDistortion to_normalized_space(const DivisionDistortion& d, const Intrinsics& intr) {
  if (d.space() == CoordinateSpace::normalized) return d;
  if (std::abs(intr.fx - intr.fy) > 1e-12 * intr.fx || intr.skew != 0.0)
    throw InvalidArgument("pixel-space division model maps to normalized space only for square pixels");
  const NormalizedPoint c = unproject(intr, PixelPoint{d.center().x(), d.center().y()});
  return {d.lambda(), c.vec(), d.scale() / intr.fx, CoordinateSpace::normalized,
          d.working_radius() / intr.fx};
}

}  // namespace radstereo
