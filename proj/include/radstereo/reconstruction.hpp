#pragma once

#include "radstereo/distortion.hpp"
#include "radstereo/geometry.hpp"

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace radstereo {

struct PolyCamera {
  Intrinsics intrinsics;
  PolyDistortion distortion;
};

struct DivisionCamera {
  Intrinsics intrinsics;
  DivisionDistortion distortion;
};

using CameraModel = std::variant<PolyCamera, DivisionCamera>;

// Pixel position of a camera-frame point through the full forward model
// (normalize, distort, K). Empty when the point is behind the camera or the
// distortion cannot be applied.
std::optional<PixelPoint> project_point(const CameraModel& camera, const Point3& p_camera);

// Undistorted normalized ray coordinates of an observed pixel.
NormalizedPoint undistort_pixel(const CameraModel& camera, const PixelPoint& p);

struct StereoObservation {
  PixelPoint left;
  PixelPoint right;
  PointId id;
};

enum class ReconstructionMethod { baseline, division_triangulate, division_sweep, distorted_direct };

const char* to_string(ReconstructionMethod m);
ReconstructionMethod method_from_string(const std::string& name);

enum class PointStatus {
  ok,
  undistortion_failed,
  parallel_rays,
  sweep_at_boundary,
  rank_deficient,
};

const char* to_string(PointStatus s);

struct ReconstructedPoint {
  PointId id;
  Point3 position = Point3::Zero();
  PointStatus status = PointStatus::ok;
  std::optional<double> scale;  // depth factor of the direct method

  bool ok() const { return status == PointStatus::ok; }
};

struct ReconstructionResult {
  ReconstructionMethod method = ReconstructionMethod::baseline;
  std::vector<ReconstructedPoint> points;

  std::size_t failed_count() const;
};

enum class TriangulationKind { midpoint, linear };

// Midpoint of the shortest segment between the two back-projected rays, in
// the left frame. Throws NumericalError for parallel rays.
Point3 triangulate_midpoint(const StereoRig& rig, const NormalizedPoint& left,
                            const NormalizedPoint& right);
// Homogeneous linear (DLT) triangulation, for comparison.
Point3 triangulate_linear(const StereoRig& rig, const NormalizedPoint& left,
                          const NormalizedPoint& right);
Point3 triangulate(TriangulationKind kind, const StereoRig& rig, const NormalizedPoint& left,
                   const NormalizedPoint& right);

ReconstructionResult reconstruct_baseline(const PolyCamera& left, const PolyCamera& right,
                                          const StereoRig& rig,
                                          std::span<const StereoObservation> obs,
                                          TriangulationKind kind = TriangulationKind::midpoint);

// Division undistortion in the model's space (pixel: before K^-1, normalized:
// after), then triangulation.
ReconstructionResult reconstruct_division_triangulate(
    const DivisionCamera& left, const DivisionCamera& right, const StereoRig& rig,
    std::span<const StereoObservation> obs,
    TriangulationKind kind = TriangulationKind::midpoint);

enum class SweepScore { squared_distance, distance };

struct SweepConfig {
  double z_min = 5.0;
  double z_max = 120.0;
  double step = 0.5;
  SweepScore score = SweepScore::squared_distance;

  void validate() const;
};

// Fronto-parallel plane sweep along each left ray, scored by the pixel
// distance between the hypothesis' right projection and the undistorted
// right observation. Parabolic refinement around the best sample.
ReconstructionResult reconstruct_plane_sweep(const DivisionCamera& left,
                                             const DivisionCamera& right, const StereoRig& rig,
                                             std::span<const StereoObservation> obs,
                                             const SweepConfig& cfg = {});

struct DistortedPair {
  DistortedPoint left;   // normalized space
  DistortedPoint right;  // normalized space
  PointId id;
};

// Single-step triangulation on distorted normalized coordinates: solves
// alpha * [x'_d]_x R x_d + [x'_d]_x T = 0 per point for the depth alpha,
// with x_d the left lifted vector scaled to unit third coordinate.
ReconstructionResult reconstruct_distorted_direct(const DivisionDistortion& left,
                                                  const DivisionDistortion& right,
                                                  const StereoRig& rig,
                                                  std::span<const DistortedPair> obs);

// Pixel-observation convenience: unprojects and converts pixel-space models
// to normalized space first (square pixels only).
ReconstructionResult reconstruct_distorted_direct(const DivisionCamera& left,
                                                  const DivisionCamera& right,
                                                  const StereoRig& rig,
                                                  std::span<const StereoObservation> obs);

}  // namespace radstereo
