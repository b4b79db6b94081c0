#pragma once

#include <Eigen/Core>

#include <compare>
#include <optional>

namespace radstereo {

using Point3 = Eigen::Vector3d;  // mm, left camera (= world) frame unless noted
using Matrix3 = Eigen::Matrix3d;

enum class CoordinateSpace { normalized, pixel };

const char* to_string(CoordinateSpace space);

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;

  Eigen::Vector2d vec() const { return {x, y}; }
};

struct NormalizedPoint {
  double x = 0.0;
  double y = 0.0;

  Eigen::Vector2d vec() const { return {x, y}; }
  // Homogeneous ray direction (x, y, 1).
  Eigen::Vector3d ray() const { return {x, y, 1.0}; }
};

// Identifies a checkerboard corner within a dataset.
struct PointId {
  int board = 0;
  int row = 0;
  int col = 0;

  auto operator<=>(const PointId&) const = default;
};

struct ImageSize {
  int width = 250;
  int height = 250;
};

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;
  double skew = 0.0;

  // Throws InvalidArgument on fx <= 0, fy <= 0 or non-finite values. When an
  // image size is given the principal point must lie inside it.
  void validate(std::optional<ImageSize> image = std::nullopt) const;

  Matrix3 matrix() const;
};

struct RodriguesRotation {
  double wx = 0.0;
  double wy = 0.0;
  double wz = 0.0;

  Eigen::Vector3d vec() const { return {wx, wy, wz}; }
  double angle() const { return vec().norm(); }
};

// Relative pose: a point p in the left frame is R * p + T in the right frame.
struct StereoRig {
  RodriguesRotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // mm

  void validate() const;  // rejects a zero baseline
  double baseline() const { return translation.norm(); }
  // Rig describing the left camera relative to the right one.
  StereoRig inverse() const;
};

struct FrontoParallelSpec {
  double focal_px = 1.0;
  double baseline_mm = 1.0;
};

Matrix3 rodrigues_to_matrix(const RodriguesRotation& r);
RodriguesRotation matrix_to_rodrigues(const Matrix3& m);

// Pixel coordinates of a (distorted) normalized point.
PixelPoint project(const Intrinsics& intr, const NormalizedPoint& p_dist);
NormalizedPoint unproject(const Intrinsics& intr, const PixelPoint& p);

Point3 transform_to_right(const StereoRig& rig, const Point3& p);

// Pinhole normalization X/Z, Y/Z. Empty when the point is not in front of
// the camera.
std::optional<NormalizedPoint> normalize(const Point3& p_camera);

double disparity(const FrontoParallelSpec& spec, double depth_mm);
double depth_uncertainty(const FrontoParallelSpec& spec, double depth_mm,
                         double disparity_uncertainty_px);

Matrix3 skew_symmetric(const Eigen::Vector3d& v);

}  // namespace radstereo
