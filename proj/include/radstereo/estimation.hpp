#pragma once

#include "radstereo/distortion.hpp"
#include "radstereo/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace radstereo {

// 3x3 projective map, canonicalized to unit Frobenius norm.
struct Homography {
  Matrix3 h = Matrix3::Identity();

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
};

struct PointPair {
  Eigen::Vector3d left;   // homogeneous
  Eigen::Vector3d right;  // homogeneous
};

// Corresponding distorted observations of one plane in the two cameras.
struct PlanarCorrespondences {
  std::vector<std::pair<DistortedPoint, DistortedPoint>> pairs;
  CoordinateSpace space = CoordinateSpace::pixel;

  void validate(std::size_t min_pairs) const;
};

struct HomographyFit {
  Homography h;
  // Sum of squared algebraic residuals (two rows of [x']_x H x per pair) in
  // the Hartley-normalized frame, at unit ||h||.
  double residual = 0.0;
};

// DLT with Hartley normalization of both point sets. Inputs are homogeneous
// and may have any non-zero last coordinate.
HomographyFit estimate_homography_dlt_homogeneous(std::span<const PointPair> pairs);
Homography estimate_homography_dlt(std::span<const std::pair<Eigen::Vector2d, Eigen::Vector2d>> pairs);

struct CoefficientSearch {
  double min = -1.0;
  double max = 1.0;
  double step = 0.05;
  // Coordinate descent stops when a full sweep changes the residual by less
  // than this.
  double tolerance = 1e-14;
  int max_sweeps = 500;
};

struct DivisionPairEstimate {
  double lambda_left = 0.0;
  double lambda_right = 0.0;
  Homography h;
  double residual = 0.0;
};

// Algebraic homography residual after lifting both point sets with their
// division coefficients. +inf when a lifted point has a non-positive weight.
double division_pair_residual(const PlanarCorrespondences& pc, const DivisionDistortion& left,
                              const DivisionDistortion& right);

// Joint (lambda, lambda', H) estimate: exhaustive grid over the search range,
// then alternating golden-section refinement of each coefficient. `left` and
// `right` supply center, scale and space; their lambdas are ignored.
DivisionPairEstimate estimate_division_pair(const PlanarCorrespondences& pc,
                                            const DivisionDistortion& left,
                                            const DivisionDistortion& right,
                                            const CoefficientSearch& search = {});

struct PlaneModel {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();  // unit length
  double offset = 0.0;                                // plane: normal . p = offset

  double distance(const Point3& p) const { return std::abs(normal.dot(p) - offset); }
};

PlaneModel fit_plane_lsq(std::span<const Point3> points);

struct RansacConfig {
  double threshold_fraction = 0.15;
  int iterations = 500;
  std::uint64_t seed = 0;
};

struct RansacPlaneFit {
  PlaneModel plane;
  std::vector<bool> inliers;
  std::size_t inlier_count = 0;
};

// Consensus plane with inlier cutoff threshold_fraction * |offset| of each
// candidate, refit by least squares on the winning inlier set.
RansacPlaneFit fit_plane_ransac(std::span<const Point3> points, const RansacConfig& cfg);

}  // namespace radstereo
