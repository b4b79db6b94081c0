#include "radstereo/geometry.hpp"

#include "radstereo/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace radstereo {

const char* to_string(CoordinateSpace space) {
  return space == CoordinateSpace::pixel ? "pixel" : "normalized";
}

void Intrinsics::validate(std::optional<ImageSize> image) const {
  if (!std::isfinite(fx) || fx <= 0.0) throw InvalidArgument("fx must be positive and finite");
  if (!std::isfinite(fy) || fy <= 0.0) throw InvalidArgument("fy must be positive and finite");
  if (!std::isfinite(u0)) throw InvalidArgument("u0 must be finite");
  if (!std::isfinite(v0)) throw InvalidArgument("v0 must be finite");
  if (!std::isfinite(skew)) throw InvalidArgument("skew must be finite");
  if (image) {
    if (u0 < 0.0 || u0 >= image->width) throw InvalidArgument("u0 outside the image");
    if (v0 < 0.0 || v0 >= image->height) throw InvalidArgument("v0 outside the image");
  }
}

Matrix3 Intrinsics::matrix() const {
  Matrix3 k;
  k << fx, skew, u0, 0.0, fy, v0, 0.0, 0.0, 1.0;
  return k;
}

void StereoRig::validate() const {
  if (!translation.allFinite() || !rotation.vec().allFinite())
    throw InvalidArgument("rig pose must be finite");
  if (translation.norm() <= 0.0) throw InvalidArgument("rig baseline must be non-zero");
}

StereoRig StereoRig::inverse() const {
  const Matrix3 r = rodrigues_to_matrix(rotation);
  StereoRig inv;
  inv.rotation = {-rotation.wx, -rotation.wy, -rotation.wz};
  inv.translation = -(r.transpose() * translation);
  return inv;
}

Matrix3 skew_symmetric(const Eigen::Vector3d& v) {
  Matrix3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Matrix3 rodrigues_to_matrix(const RodriguesRotation& r) {
  const Eigen::Vector3d w = r.vec();
  const double theta = w.norm();
  const Matrix3 k = skew_symmetric(w);
  if (theta < 1e-8) {
    return Matrix3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Matrix3::Identity() + a * k + b * k * k;
}

RodriguesRotation matrix_to_rodrigues(const Matrix3& m) {
  const double cos_theta = std::clamp((m.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Eigen::Vector3d axis_sin{m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)};
  if (theta < 1e-8) {
    const Eigen::Vector3d w = 0.5 * axis_sin;
    return {w.x(), w.y(), w.z()};
  }
  if (M_PI - theta < 1e-6) {
    // Near a half turn the antisymmetric part vanishes; read the axis from
    // the symmetric part instead.
    const Matrix3 s = 0.5 * (m + Matrix3::Identity());
    int i = 0;
    s.diagonal().maxCoeff(&i);
    Eigen::Vector3d axis = s.col(i) / std::sqrt(s(i, i));
    if (axis.dot(axis_sin) < 0.0) axis = -axis;
    const Eigen::Vector3d w = theta * axis.normalized();
    return {w.x(), w.y(), w.z()};
  }
  const Eigen::Vector3d w = axis_sin * (theta / (2.0 * std::sin(theta)));
  return {w.x(), w.y(), w.z()};
}

PixelPoint project(const Intrinsics& intr, const NormalizedPoint& p) {
  return {intr.fx * p.x + intr.skew * p.y + intr.u0, intr.fy * p.y + intr.v0};
}

NormalizedPoint unproject(const Intrinsics& intr, const PixelPoint& p) {
  if (intr.fx == 0.0 || intr.fy == 0.0) throw InvalidArgument("intrinsic matrix is not invertible");
  const double y = (p.y - intr.v0) / intr.fy;
  const double x = (p.x - intr.u0 - intr.skew * y) / intr.fx;
  return {x, y};
}

Point3 transform_to_right(const StereoRig& rig, const Point3& p) {
  return rodrigues_to_matrix(rig.rotation) * p + rig.translation;
}

std::optional<NormalizedPoint> normalize(const Point3& p) {
  if (!(p.z() > 0.0)) return std::nullopt;
  return NormalizedPoint{p.x() / p.z(), p.y() / p.z()};
}

namespace {

void check_spec(const FrontoParallelSpec& spec) {
  if (!(spec.focal_px > 0.0)) throw InvalidArgument("focal length must be positive");
  if (!(spec.baseline_mm > 0.0)) throw InvalidArgument("baseline must be positive");
}

}  // namespace

double disparity(const FrontoParallelSpec& spec, double depth_mm) {
  check_spec(spec);
  if (!(depth_mm > 0.0)) throw InvalidArgument("depth must be positive");
  return spec.focal_px * spec.baseline_mm / depth_mm;
}

double depth_uncertainty(const FrontoParallelSpec& spec, double depth_mm, double dd) {
  check_spec(spec);
  if (!(depth_mm > 0.0)) throw InvalidArgument("depth must be positive");
  if (!(dd >= 0.0)) throw InvalidArgument("disparity uncertainty must be non-negative");
  return depth_mm * depth_mm / (spec.focal_px * spec.baseline_mm) * dd;
}

}  // namespace radstereo
