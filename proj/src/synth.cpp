#include "radstereo/synth.hpp"

#include "radstereo/error.hpp"

#include <cmath>
#include <random>

namespace radstereo {

namespace {

bool beyond_working_radius(const CameraModel& camera, const Point3& p_camera) {
  const auto* poly = std::get_if<PolyCamera>(&camera);
  if (!poly) return false;
  const auto n = normalize(p_camera);
  return n && n->vec().norm() > poly->distortion.working_radius();
}

bool inside(const PixelPoint& p, ImageSize image) {
  return p.x >= 0.0 && p.x < image.width && p.y >= 0.0 && p.y < image.height;
}

}  // namespace

void NoiseSpec::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("noise sigma must be >= 0");
}

bool RenderOutput::all_ok() const {
  for (const auto& [id, flag] : flags)
    if (flag != RenderFlag::ok) return false;
  return true;
}

SyntheticScene make_board(const BoardGroundTruth& gt, const BoardPose& pose, int board_index,
                          const Eigen::Vector2d& offset) {
  gt.validate();
  const Matrix3 r = rodrigues_to_matrix(pose.rotation);
  SyntheticScene scene;
  scene.board = gt;
  scene.pose = pose;
  scene.points.reserve(static_cast<std::size_t>(gt.point_count()));
  const double cx = 0.5 * (gt.cols - 1), cy = 0.5 * (gt.rows - 1);
  for (int row = 0; row < gt.rows; ++row) {
    for (int col = 0; col < gt.cols; ++col) {
      const Point3 local{(col - cx) * gt.spacing + offset.x(), (row - cy) * gt.spacing + offset.y(),
                         0.0};
      scene.points.push_back({PointId{board_index, row, col}, r * local + pose.center});
    }
  }
  return scene;
}

RenderOutput render_observations(const SyntheticScene& scene, const CameraModel& left,
                                 const CameraModel& right, const StereoRig& rig,
                                 const NoiseSpec& noise, ImageSize image) {
  noise.validate();
  RenderOutput out;
  out.observations.reserve(scene.points.size());
  for (const auto& sp : scene.points) {
    const Point3 pl = sp.position;
    const Point3 pr = transform_to_right(rig, pl);
    if (!(pl.z() > 0.0) || !(pr.z() > 0.0)) {
      out.flags.emplace_back(sp.id, RenderFlag::behind_camera);
      continue;
    }
    const auto xl = project_point(left, pl);
    const auto xr = project_point(right, pr);
    if (!xl || !xr) {
      out.flags.emplace_back(sp.id, RenderFlag::outside_image);
      continue;
    }
    StereoObservation o{*xl, *xr, sp.id};
    if (noise.sigma > 0.0) {
      std::seed_seq seq{static_cast<std::uint32_t>(noise.seed),
                        static_cast<std::uint32_t>(noise.seed >> 32),
                        static_cast<std::uint32_t>(sp.id.board),
                        static_cast<std::uint32_t>(sp.id.row),
                        static_cast<std::uint32_t>(sp.id.col)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> n(0.0, noise.sigma);
      o.left.x += n(rng);
      o.left.y += n(rng);
      o.right.x += n(rng);
      o.right.y += n(rng);
    }
    if (noise.round_to_tenth) {
      for (double* v : {&o.left.x, &o.left.y, &o.right.x, &o.right.y}) *v = std::round(*v * 10.0) / 10.0;
    }
    const bool in_view = inside(o.left, image) && inside(o.right, image) &&
                         !beyond_working_radius(left, pl) && !beyond_working_radius(right, pr);
    out.flags.emplace_back(sp.id, in_view ? RenderFlag::ok : RenderFlag::outside_image);
    out.observations.push_back(o);
  }
  return out;
}

StereoCalibration reference_calibration() {
  StereoCalibration c;
  c.left.intrinsics = {216.360, 216.315, 122.414, 111.535, 0.0};
  c.left.distortion = PolyDistortion(-0.369, 0.303, -0.366);
  c.right.intrinsics = {216.258, 216.379, 124.419, 122.283, 0.0};
  c.right.distortion = PolyDistortion(-0.336, -0.103, 0.866);
  c.rig.rotation = {-0.0034, 0.0134, 0.0341};
  c.rig.translation = {1.063, -0.203, 0.118};
  c.image = {250, 250};
  return c;
}

std::vector<BoardPose> random_board_poses(const BoardSetConfig& cfg, const CameraModel& left,
                                          const CameraModel& right, const StereoRig& rig,
                                          ImageSize image) {
  if (cfg.count < 0) throw InvalidArgument("board count must be non-negative");
  if (!(cfg.depth_min > 0.0) || !(cfg.depth_max >= cfg.depth_min))
    throw InvalidArgument("invalid board depth range");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<BoardPose> poses;
  constexpr int kMaxTries = 100000;
  int tries = 0;
  while (static_cast<int>(poses.size()) < cfg.count) {
    if (++tries > kMaxTries)
      throw NumericalError("could not place boards inside both images; relax the pose ranges");
    const double depth = cfg.depth_min + (cfg.depth_max - cfg.depth_min) * unit(rng);
    const double tilt = cfg.max_tilt * unit(rng);
    const double axis_angle = 2.0 * M_PI * unit(rng);
    const double spin = 0.3 * (2.0 * unit(rng) - 1.0);
    const double lateral = 0.15 * depth;
    const double cx = lateral * (2.0 * unit(rng) - 1.0);
    const double cy = lateral * (2.0 * unit(rng) - 1.0);

    // Tilt about an in-plane axis, then spin about the optical axis.
    const Matrix3 r = rodrigues_to_matrix({tilt * std::cos(axis_angle), tilt * std::sin(axis_angle), 0.0}) *
                      rodrigues_to_matrix({0.0, 0.0, spin});
    BoardPose pose{matrix_to_rodrigues(r), Point3{cx, cy, depth}};
    const SyntheticScene scene = make_board(cfg.gt, pose, static_cast<int>(poses.size()));
    const RenderOutput rendered = render_observations(scene, left, right, rig, {}, image);
    if (rendered.all_ok()) poses.push_back(pose);
  }
  return poses;
}

BoardGroundTruth six_point_board() { return {2, 3, 2.189}; }

BoardPose six_point_pose() {
  BoardPose pose;
  pose.rotation = {0.15, -0.25, 0.05};
  pose.center = {8.0, 6.0, 30.0};
  return pose;
}

ComparisonOutcome comparison_experiment(const StereoCalibration& truth,
                                        const DivisionCamera& left_division,
                                        const DivisionCamera& right_division,
                                        const ComparisonConfig& cfg) {
  ComparisonOutcome out;
  out.scene = make_board(six_point_board(), cfg.pose);
  const RenderOutput rendered =
      render_observations(out.scene, truth.left, truth.right, truth.rig, cfg.noise, truth.image);
  if (!rendered.all_ok()) throw InvalidArgument("comparison scene does not fit inside both images");
  out.observations = rendered.observations;

  out.baseline = reconstruct_baseline(truth.left, truth.right, truth.rig, out.observations);
  out.division_triangulate = reconstruct_division_triangulate(left_division, right_division,
                                                              truth.rig, out.observations);
  out.division_sweep = reconstruct_plane_sweep(left_division, right_division, truth.rig,
                                               out.observations, cfg.sweep);

  const StereoModel poly_model{truth.left, truth.right, truth.rig};
  const StereoModel division_model{left_division, right_division, truth.rig};
  const BoardGroundTruth gt = six_point_board();
  std::vector<PlaneInput> planes{
      {"Baseline", gt, out.observations, out.baseline, poly_model},
      {"DivisionTriang", gt, out.observations, out.division_triangulate, division_model},
      {"DivisionSweep", gt, out.observations, out.division_sweep, division_model},
  };
  out.report = evaluate_planes(planes, EvalConfig{});
  return out;
}

}  // namespace radstereo
