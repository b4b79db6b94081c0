#pragma once

#include "radstereo/estimation.hpp"
#include "radstereo/reconstruction.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace radstereo {

struct BoardGroundTruth {
  int rows = 6;
  int cols = 8;
  double spacing = 5.99;  // mm between consecutive corners

  void validate() const;
  int point_count() const { return rows * cols; }
};

struct PlanarityOptions {
  bool use_ransac = false;
  RansacConfig ransac;
};

struct PlanarityResult {
  double p_average = 0.0;  // mm
  PlaneModel plane;
  std::size_t points_used = 0;
};

// Mean orthogonal distance to the fitted plane. With RANSAC the mean runs
// over the consensus inliers only.
PlanarityResult planarity_error(std::span<const Point3> points, const PlanarityOptions& opts = {});

struct IdentifiedPoint {
  PointId id;
  Point3 position;
};

// Horizontal and vertical neighbor pairs, as (index a, index b) into the
// given points. Throws InvalidArgument when the grid is incomplete.
std::vector<std::pair<std::size_t, std::size_t>> grid_neighbor_pairs(
    std::span<const IdentifiedPoint> points, const BoardGroundTruth& gt);

// Mean (or median) of |measured neighbor distance - spacing|.
double distance_error(std::span<const IdentifiedPoint> points, const BoardGroundTruth& gt,
                      bool use_median = false);

struct StereoModel {
  CameraModel left;
  CameraModel right;
  StereoRig rig;
};

struct ReprojectionResult {
  double r = 0.0;  // pixels, mean over both images
  std::size_t excluded = 0;
  double left_mean = 0.0;
  double right_mean = 0.0;
};

// Reprojects each successfully reconstructed point into both images through
// `model` and averages the pixel distance to the observations. Points that
// cannot be projected are excluded and counted.
ReprojectionResult reprojection_error(const ReconstructionResult& result,
                                      std::span<const StereoObservation> obs,
                                      const StereoModel& model);

struct EvalRow {
  std::string label;
  double p_average = 0.0;
  double d_average = 0.0;
  double r = 0.0;
  std::size_t points = 0;
  std::size_t failed = 0;
  std::size_t excluded = 0;
};

struct EvalConfig {
  PlanarityOptions planarity;
  bool use_median = false;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  // Everything needed to re-run the report: method, seeds, thresholds,
  // input digests. Values are stored as text.
  std::map<std::string, std::string> config;
};

struct PlaneInput {
  std::string label;
  BoardGroundTruth gt;
  std::vector<StereoObservation> observations;
  ReconstructionResult reconstruction;
  StereoModel model;
};

EvalRow evaluate_plane(const PlaneInput& plane, const EvalConfig& cfg);
EvalReport evaluate_planes(std::span<const PlaneInput> planes, const EvalConfig& cfg);

// Ok points of a reconstruction paired with their ids.
std::vector<IdentifiedPoint> identified_points(const ReconstructionResult& result);

}  // namespace radstereo
