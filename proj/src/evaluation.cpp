#include "radstereo/evaluation.hpp"

#include "radstereo/error.hpp"
#include "radstereo/format.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace radstereo {

namespace {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Neighbor pairs among the points that are present; `require_complete`
// turns a missing grid id into an error.
std::vector<std::pair<std::size_t, std::size_t>> neighbor_pairs(
    std::span<const IdentifiedPoint> points, const BoardGroundTruth& gt, bool require_complete) {
  gt.validate();
  std::map<std::pair<int, int>, std::size_t> index;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& id = points[i].id;
    if (id.row < 0 || id.row >= gt.rows || id.col < 0 || id.col >= gt.cols)
      throw InvalidArgument("point id outside the board grid");
    if (!index.emplace(std::pair{id.row, id.col}, i).second)
      throw InvalidArgument("duplicate point id in board");
  }
  if (require_complete && static_cast<int>(index.size()) != gt.point_count())
    throw InvalidArgument("board grid is incomplete: " + std::to_string(index.size()) + " of " +
                          std::to_string(gt.point_count()) + " points");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (int r = 0; r < gt.rows; ++r) {
    for (int c = 0; c < gt.cols; ++c) {
      const auto a = index.find({r, c});
      if (a == index.end()) continue;
      if (const auto b = index.find({r, c + 1}); b != index.end())
        pairs.emplace_back(a->second, b->second);
      if (const auto b = index.find({r + 1, c}); b != index.end())
        pairs.emplace_back(a->second, b->second);
    }
  }
  return pairs;
}

double distance_error_impl(std::span<const IdentifiedPoint> points, const BoardGroundTruth& gt,
                           bool use_median, bool require_complete) {
  std::vector<double> errors;
  for (const auto& [a, b] : neighbor_pairs(points, gt, require_complete))
    errors.push_back(std::abs((points[a].position - points[b].position).norm() - gt.spacing));
  return use_median ? median(std::move(errors)) : mean(errors);
}

}  // namespace

void BoardGroundTruth::validate() const {
  if (rows < 1 || cols < 1) throw InvalidArgument("board grid must have at least one row and column");
  if (!(spacing > 0.0)) throw InvalidArgument("board spacing must be positive");
}

PlanarityResult planarity_error(std::span<const Point3> points, const PlanarityOptions& opts) {
  PlanarityResult out;
  if (!opts.use_ransac) {
    out.plane = fit_plane_lsq(points);
    double sum = 0.0;
    for (const auto& p : points) sum += out.plane.distance(p);
    out.points_used = points.size();
    out.p_average = sum / static_cast<double>(points.size());
    return out;
  }
  const RansacPlaneFit fit = fit_plane_ransac(points, opts.ransac);
  out.plane = fit.plane;
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (fit.inliers[i]) sum += out.plane.distance(points[i]);
  out.points_used = fit.inlier_count;
  out.p_average = sum / static_cast<double>(fit.inlier_count);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> grid_neighbor_pairs(
    std::span<const IdentifiedPoint> points, const BoardGroundTruth& gt) {
  return neighbor_pairs(points, gt, true);
}

double distance_error(std::span<const IdentifiedPoint> points, const BoardGroundTruth& gt,
                      bool use_median) {
  return distance_error_impl(points, gt, use_median, true);
}

ReprojectionResult reprojection_error(const ReconstructionResult& result,
                                      std::span<const StereoObservation> obs,
                                      const StereoModel& model) {
  std::map<PointId, const StereoObservation*> by_id;
  for (const auto& o : obs) by_id.emplace(o.id, &o);

  ReprojectionResult out;
  double sum_left = 0.0, sum_right = 0.0;
  std::size_t used = 0;
  for (const auto& p : result.points) {
    if (!p.ok()) continue;
    const auto it = by_id.find(p.id);
    if (it == by_id.end()) throw InvalidArgument("reconstructed point has no observation");
    const auto pl = project_point(model.left, p.position);
    const auto pr = project_point(model.right, transform_to_right(model.rig, p.position));
    if (!pl || !pr) {
      ++out.excluded;
      continue;
    }
    sum_left += (pl->vec() - it->second->left.vec()).norm();
    sum_right += (pr->vec() - it->second->right.vec()).norm();
    ++used;
  }
  if (used > 0) {
    out.left_mean = sum_left / static_cast<double>(used);
    out.right_mean = sum_right / static_cast<double>(used);
    out.r = 0.5 * (out.left_mean + out.right_mean);
  }
  return out;
}

std::vector<IdentifiedPoint> identified_points(const ReconstructionResult& result) {
  std::vector<IdentifiedPoint> out;
  out.reserve(result.points.size());
  for (const auto& p : result.points)
    if (p.ok()) out.push_back({p.id, p.position});
  return out;
}

EvalRow evaluate_plane(const PlaneInput& plane, const EvalConfig& cfg) {
  const std::vector<IdentifiedPoint> pts = identified_points(plane.reconstruction);
  std::vector<Point3> positions;
  positions.reserve(pts.size());
  for (const auto& p : pts) positions.push_back(p.position);

  EvalRow row;
  row.label = plane.label;
  row.points = plane.reconstruction.points.size();
  row.failed = plane.reconstruction.failed_count();
  row.p_average = planarity_error(positions, cfg.planarity).p_average;
  // Failed points leave holes in the grid; the remaining neighbor pairs
  // still measure the spacing.
  row.d_average = distance_error_impl(pts, plane.gt, cfg.use_median, row.failed == 0);
  const ReprojectionResult rep =
      reprojection_error(plane.reconstruction, plane.observations, plane.model);
  row.r = rep.r;
  row.excluded = rep.excluded;
  return row;
}

EvalReport evaluate_planes(std::span<const PlaneInput> planes, const EvalConfig& cfg) {
  if (planes.empty()) throw InvalidArgument("evaluation needs at least one plane");
  EvalReport report;
  for (const auto& p : planes) report.rows.push_back(evaluate_plane(p, cfg));
  report.config["planarity"] = cfg.planarity.use_ransac ? "ransac" : "lsq";
  if (cfg.planarity.use_ransac) {
    report.config["ransac.threshold_fraction"] = format_double(cfg.planarity.ransac.threshold_fraction);
    report.config["ransac.iterations"] = std::to_string(cfg.planarity.ransac.iterations);
    report.config["ransac.seed"] = std::to_string(cfg.planarity.ransac.seed);
  }
  report.config["distance"] = cfg.use_median ? "median" : "mean";
  report.config["reprojection"] = "mean-over-both-images";
  return report;
}

}  // namespace radstereo
