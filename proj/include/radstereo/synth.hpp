#pragma once

#include "radstereo/evaluation.hpp"
#include "radstereo/reconstruction.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace radstereo {

// Board plane pose in the left frame: corners sit at rotation * local + center,
// with local coordinates centered on the grid.
struct BoardPose {
  RodriguesRotation rotation;
  Point3 center{0.0, 0.0, 70.0};
};

struct SyntheticScene {
  std::vector<IdentifiedPoint> points;
  std::optional<BoardGroundTruth> board;  // empty for free points
  BoardPose pose;
};

struct NoiseSpec {
  double sigma = 0.0;  // pixels
  std::uint64_t seed = 0;
  bool round_to_tenth = false;

  void validate() const;
};

SyntheticScene make_board(const BoardGroundTruth& gt, const BoardPose& pose, int board_index = 0,
                          const Eigen::Vector2d& offset = Eigen::Vector2d::Zero());

enum class RenderFlag { ok, outside_image, behind_camera };

struct RenderOutput {
  std::vector<StereoObservation> observations;  // points behind a camera are dropped
  std::vector<std::pair<PointId, RenderFlag>> flags;

  bool all_ok() const;
};

// Rigid transform, normalization, distortion and K per camera, then seeded
// Gaussian pixel noise. Each point draws its noise from a generator keyed by
// (seed, id), so the result does not depend on point order. Points outside
// the image or beyond a polynomial model's working radius are flagged.
RenderOutput render_observations(const SyntheticScene& scene, const CameraModel& left,
                                 const CameraModel& right, const StereoRig& rig,
                                 const NoiseSpec& noise, ImageSize image = {});

// Ground-truth stereo calibration with the polynomial model. The default is a
// 250 x 250 pixel micro-camera rig with a 1.08 mm baseline.
struct StereoCalibration {
  PolyCamera left;
  PolyCamera right;
  StereoRig rig;
  ImageSize image;
};

StereoCalibration reference_calibration();

struct BoardSetConfig {
  int count = 19;
  BoardGroundTruth gt{6, 8, 5.99};
  double depth_min = 55.0;
  double depth_max = 85.0;
  double max_tilt = 0.45;  // rad
  std::uint64_t seed = 0;
};

// Random board poses whose corners render inside both images and inside the
// distortion models' working radii. Deterministic for a fixed seed.
std::vector<BoardPose> random_board_poses(const BoardSetConfig& cfg, const CameraModel& left,
                                          const CameraModel& right, const StereoRig& rig,
                                          ImageSize image = {});

// The six-point comparison scene: a 2 x 3 grid with 2.189 mm spacing.
BoardGroundTruth six_point_board();
BoardPose six_point_pose();

struct ComparisonConfig {
  NoiseSpec noise;
  SweepConfig sweep;
  BoardPose pose = six_point_pose();
};

struct ComparisonOutcome {
  EvalReport report;  // rows Baseline, DivisionTriang, DivisionSweep
  SyntheticScene scene;
  std::vector<StereoObservation> observations;
  ReconstructionResult baseline, division_triangulate, division_sweep;
};

ComparisonOutcome comparison_experiment(const StereoCalibration& truth,
                                        const DivisionCamera& left_division,
                                        const DivisionCamera& right_division,
                                        const ComparisonConfig& cfg = {});

}  // namespace radstereo
