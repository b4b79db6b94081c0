#include "radstereo/reconstruction.hpp"

#include "radstereo/error.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace radstereo {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

template <typename Solve>
ReconstructionResult reconstruct_each(ReconstructionMethod method,
                                      std::span<const StereoObservation> obs, Solve&& solve) {
  ReconstructionResult result;
  result.method = method;
  result.points.reserve(obs.size());
  for (const auto& o : obs) {
    ReconstructedPoint rp;
    rp.id = o.id;
    try {
      solve(o, rp);
    } catch (const NumericalError&) {
      if (rp.status == PointStatus::ok) rp.status = PointStatus::undistortion_failed;
    }
    result.points.push_back(rp);
  }
  return result;
}

}  // namespace

const char* to_string(ReconstructionMethod m) {
  switch (m) {
    case ReconstructionMethod::baseline: return "baseline";
    case ReconstructionMethod::division_triangulate: return "division-triangulate";
    case ReconstructionMethod::division_sweep: return "division-sweep";
    case ReconstructionMethod::distorted_direct: return "distorted-direct";
  }
  return "unknown";
}

ReconstructionMethod method_from_string(const std::string& name) {
  for (auto m : {ReconstructionMethod::baseline, ReconstructionMethod::division_triangulate,
                 ReconstructionMethod::division_sweep, ReconstructionMethod::distorted_direct})
    if (name == to_string(m)) return m;
  throw InvalidArgument("unknown reconstruction method '" + name + "'");
}

const char* to_string(PointStatus s) {
  switch (s) {
    case PointStatus::ok: return "ok";
    case PointStatus::undistortion_failed: return "undistortion-failed";
    case PointStatus::parallel_rays: return "parallel-rays";
    case PointStatus::sweep_at_boundary: return "sweep-at-boundary";
    case PointStatus::rank_deficient: return "rank-deficient";
  }
  return "unknown";
}

std::size_t ReconstructionResult::failed_count() const {
  std::size_t n = 0;
  for (const auto& p : points) n += !p.ok();
  return n;
}

std::optional<PixelPoint> project_point(const CameraModel& camera, const Point3& p_camera) {
  const auto n = normalize(p_camera);
  if (!n) return std::nullopt;
  return std::visit(
      overloaded{
          [&](const PolyCamera& c) -> std::optional<PixelPoint> {
            const DistortedPoint d = poly_distort(c.distortion, *n);
            return project(c.intrinsics, NormalizedPoint{d.xy.x(), d.xy.y()});
          },
          [&](const DivisionCamera& c) -> std::optional<PixelPoint> {
            try {
              if (c.distortion.space() == CoordinateSpace::pixel) {
                const PixelPoint u = project(c.intrinsics, *n);
                const DistortedPoint d =
                    division_distort(c.distortion, {u.vec(), CoordinateSpace::pixel});
                return PixelPoint{d.xy.x(), d.xy.y()};
              }
              const DistortedPoint d =
                  division_distort(c.distortion, {n->vec(), CoordinateSpace::normalized});
              return project(c.intrinsics, NormalizedPoint{d.xy.x(), d.xy.y()});
            } catch (const NumericalError&) {
              return std::nullopt;
            }
          }},
      camera);
}

NormalizedPoint undistort_pixel(const CameraModel& camera, const PixelPoint& p) {
  return std::visit(
      overloaded{
          [&](const PolyCamera& c) {
            const NormalizedPoint d = unproject(c.intrinsics, p);
            return poly_undistort(c.distortion, {d.vec(), CoordinateSpace::normalized});
          },
          [&](const DivisionCamera& c) {
            if (c.distortion.space() == CoordinateSpace::pixel) {
              const UndistortedPoint u =
                  division_undistort(c.distortion, {p.vec(), CoordinateSpace::pixel});
              return unproject(c.intrinsics, PixelPoint{u.xy.x(), u.xy.y()});
            }
            const NormalizedPoint d = unproject(c.intrinsics, p);
            const UndistortedPoint u =
                division_undistort(c.distortion, {d.vec(), CoordinateSpace::normalized});
            return NormalizedPoint{u.xy.x(), u.xy.y()};
          }},
      camera);
}

Point3 triangulate_midpoint(const StereoRig& rig, const NormalizedPoint& left,
                            const NormalizedPoint& right) {
  const Matrix3 rt = rodrigues_to_matrix(rig.rotation).transpose();
  const Eigen::Vector3d c = -(rt * rig.translation);  // right center, left frame
  const Eigen::Vector3d a = left.ray();
  const Eigen::Vector3d b = rt * right.ray();
  const Eigen::Vector3d w0 = -c;
  const double aa = a.dot(a), ab = a.dot(b), bb = b.dot(b);
  const double d = a.dot(w0), e = b.dot(w0);
  const double denom = aa * bb - ab * ab;
  if (!(denom > 1e-14 * aa * bb)) throw NumericalError("triangulation: parallel rays", denom);
  const double s = (ab * e - bb * d) / denom;
  const double t = (aa * e - ab * d) / denom;
  return 0.5 * (s * a + c + t * b);
}

Point3 triangulate_linear(const StereoRig& rig, const NormalizedPoint& left,
                          const NormalizedPoint& right) {
  Eigen::Matrix<double, 3, 4> pl = Eigen::Matrix<double, 3, 4>::Zero();
  pl.leftCols<3>().setIdentity();
  Eigen::Matrix<double, 3, 4> pr;
  pr.leftCols<3>() = rodrigues_to_matrix(rig.rotation);
  pr.col(3) = rig.translation;

  Eigen::Matrix4d a;
  a.row(0) = left.x * pl.row(2) - pl.row(0);
  a.row(1) = left.y * pl.row(2) - pl.row(1);
  a.row(2) = right.x * pr.row(2) - pr.row(0);
  a.row(3) = right.y * pr.row(2) - pr.row(1);
  const Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
  const Eigen::Vector4d x = svd.matrixV().col(3);
  if (!(std::abs(x(3)) > 1e-14 * x.head<3>().norm()))
    throw NumericalError("triangulation: point at infinity (parallel rays)");
  return x.head<3>() / x(3);
}

Point3 triangulate(TriangulationKind kind, const StereoRig& rig, const NormalizedPoint& left,
                   const NormalizedPoint& right) {
  return kind == TriangulationKind::midpoint ? triangulate_midpoint(rig, left, right)
                                             : triangulate_linear(rig, left, right);
}

namespace {

template <typename Camera>
ReconstructionResult triangulate_all(ReconstructionMethod method, const Camera& left,
                                     const Camera& right, const StereoRig& rig,
                                     std::span<const StereoObservation> obs,
                                     TriangulationKind kind) {
  rig.validate();
  const CameraModel cl = left, cr = right;
  return reconstruct_each(method, obs, [&](const StereoObservation& o, ReconstructedPoint& rp) {
    const NormalizedPoint nl = undistort_pixel(cl, o.left);
    const NormalizedPoint nr = undistort_pixel(cr, o.right);
    rp.status = PointStatus::parallel_rays;
    rp.position = triangulate(kind, rig, nl, nr);
    rp.status = PointStatus::ok;
  });
}

}  // namespace

ReconstructionResult reconstruct_baseline(const PolyCamera& left, const PolyCamera& right,
                                          const StereoRig& rig,
                                          std::span<const StereoObservation> obs,
                                          TriangulationKind kind) {
  return triangulate_all(ReconstructionMethod::baseline, left, right, rig, obs, kind);
}

ReconstructionResult reconstruct_division_triangulate(const DivisionCamera& left,
                                                      const DivisionCamera& right,
                                                      const StereoRig& rig,
                                                      std::span<const StereoObservation> obs,
                                                      TriangulationKind kind) {
  return triangulate_all(ReconstructionMethod::division_triangulate, left, right, rig, obs, kind);
}

void SweepConfig::validate() const {
  if (!(z_min > 0.0)) throw InvalidArgument("sweep z_min must be positive");
  if (!(z_max > z_min)) throw InvalidArgument("sweep range is empty (z_min >= z_max)");
  if (!(step > 0.0)) throw InvalidArgument("sweep step must be positive");
}

ReconstructionResult reconstruct_plane_sweep(const DivisionCamera& left,
                                             const DivisionCamera& right, const StereoRig& rig,
                                             std::span<const StereoObservation> obs,
                                             const SweepConfig& cfg) {
  cfg.validate();
  rig.validate();
  const CameraModel cl = left, cr = right;
  const Matrix3 r = rodrigues_to_matrix(rig.rotation);
  const int samples = static_cast<int>(std::floor((cfg.z_max - cfg.z_min) / cfg.step + 1e-9)) + 1;

  return reconstruct_each(
      ReconstructionMethod::division_sweep, obs,
      [&](const StereoObservation& o, ReconstructedPoint& rp) {
        const Eigen::Vector3d ray = undistort_pixel(cl, o.left).ray();
        const Eigen::Vector2d target =
            project(right.intrinsics, undistort_pixel(cr, o.right)).vec();

        auto score = [&](double z) {
          const Eigen::Vector3d q = r * (z * ray) + rig.translation;
          if (!(q.z() > 0.0)) return std::numeric_limits<double>::infinity();
          const Eigen::Vector2d px =
              project(right.intrinsics, NormalizedPoint{q.x() / q.z(), q.y() / q.z()}).vec();
          const double d2 = (px - target).squaredNorm();
          return cfg.score == SweepScore::squared_distance ? d2 : std::sqrt(d2);
        };

        int best = 0;
        double best_score = std::numeric_limits<double>::infinity();
        std::vector<double> scores(samples);
        for (int k = 0; k < samples; ++k) {
          scores[k] = score(cfg.z_min + k * cfg.step);
          if (scores[k] < best_score) {
            best_score = scores[k];
            best = k;
          }
        }
        double z = cfg.z_min + best * cfg.step;
        if (best == 0 || best == samples - 1) {
          rp.position = z * ray;
          rp.status = PointStatus::sweep_at_boundary;
          return;
        }
        const double fm = scores[best - 1], f0 = scores[best], fp = scores[best + 1];
        const double curvature = fm - 2.0 * f0 + fp;
        if (curvature > 0.0 && std::isfinite(curvature))
          z += 0.5 * (fm - fp) / curvature * cfg.step;
        rp.position = z * ray;
      });
}

ReconstructionResult reconstruct_distorted_direct(const DivisionDistortion& left,
                                                  const DivisionDistortion& right,
                                                  const StereoRig& rig,
                                                  std::span<const DistortedPair> obs) {
  if (left.space() != CoordinateSpace::normalized || right.space() != CoordinateSpace::normalized)
    throw InvalidArgument("distorted-direct triangulation works on normalized coordinates");
  rig.validate();
  const Matrix3 r = rodrigues_to_matrix(rig.rotation);

  ReconstructionResult result;
  result.method = ReconstructionMethod::distorted_direct;
  result.points.reserve(obs.size());
  for (const auto& o : obs) {
    ReconstructedPoint rp;
    rp.id = o.id;
    const Eigen::Vector3d xl = lift_distorted_homogeneous(left, o.left);
    const Eigen::Vector3d xr = lift_distorted_homogeneous(right, o.right);
    if (!(std::abs(xl.z()) > 1e-12) || !(std::abs(xr.z()) > 1e-12)) {
      rp.status = PointStatus::undistortion_failed;
      result.points.push_back(rp);
      continue;
    }
    const Eigen::Vector3d ray = xl / xl.z();
    const Matrix3 s = skew_symmetric(xr / xr.z());
    const Eigen::Vector3d a = s * r * ray;
    const Eigen::Vector3d b = s * rig.translation;
    const double aa = a.squaredNorm();
    if (!(aa > 1e-24 * ray.squaredNorm())) {
      rp.status = PointStatus::rank_deficient;
      result.points.push_back(rp);
      continue;
    }
    const double alpha = -a.dot(b) / aa;
    rp.scale = alpha;
    rp.position = alpha * ray;
    result.points.push_back(rp);
  }
  return result;
}

ReconstructionResult reconstruct_distorted_direct(const DivisionCamera& left,
                                                  const DivisionCamera& right,
                                                  const StereoRig& rig,
                                                  std::span<const StereoObservation> obs) {
  const DivisionDistortion dl = to_normalized_space(left.distortion, left.intrinsics);
  const DivisionDistortion dr = to_normalized_space(right.distortion, right.intrinsics);
  std::vector<DistortedPair> pairs;
  pairs.reserve(obs.size());
  for (const auto& o : obs) {
    pairs.push_back({{unproject(left.intrinsics, o.left).vec(), CoordinateSpace::normalized},
                     {unproject(right.intrinsics, o.right).vec(), CoordinateSpace::normalized},
                     o.id});
  }
  return reconstruct_distorted_direct(dl, dr, rig, pairs);
}

}  // namespace radstereo
