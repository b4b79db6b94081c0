#include "radstereo/estimation.hpp"

#include "radstereo/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace radstereo {

namespace {

struct Normalization {
  Matrix3 t = Matrix3::Identity();
  std::vector<Eigen::Vector2d> points;
};

// Translate the centroid to the origin and scale the mean distance to sqrt(2).
Normalization hartley_normalize(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) throw NumericalError("homography: all points coincide");
  const double s = std::sqrt(2.0) / mean_dist;

  Normalization n;
  n.t << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
  n.points.reserve(pts.size());
  for (const auto& p : pts) n.points.emplace_back(s * (p - centroid));
  return n;
}

Eigen::Vector2d dehomogenize(const Eigen::Vector3d& v) {
  if (!(std::abs(v.z()) > 1e-12)) throw NumericalError("homography: point at infinity");
  return v.head<2>() / v.z();
}

void canonicalize(Matrix3& h) {
  h /= h.norm();
  Eigen::Index r = 0, c = 0;
  if (std::abs(h(2, 2)) > 1e-6) {
    r = c = 2;
  } else {
    h.cwiseAbs().maxCoeff(&r, &c);
  }
  if (h(r, c) < 0.0) h = -h;
}

// Lifted point in the model's own space for a candidate coefficient.
Eigen::Vector3d lift(double lambda, const Eigen::Vector2d& center, double scale,
                     const Eigen::Vector2d& p) {
  const double w = 1.0 + lambda * (p - center).squaredNorm() / (scale * scale);
  const Eigen::Vector2d xy = (p - center) + center * w;
  return {xy.x(), xy.y(), w};
}

struct LiftedSets {
  const PlanarCorrespondences* pc;
  Eigen::Vector2d center_left, center_right;
  double scale_left, scale_right;

  // Residual for a candidate pair, +inf when any weight is non-positive.
  HomographyFit fit(double lambda_left, double lambda_right) const {
    std::vector<PointPair> pairs;
    pairs.reserve(pc->pairs.size());
    for (const auto& [l, r] : pc->pairs) {
      PointPair pp{lift(lambda_left, center_left, scale_left, l.xy),
                   lift(lambda_right, center_right, scale_right, r.xy)};
      if (!(pp.left.z() > 1e-9) || !(pp.right.z() > 1e-9))
        return {Homography{}, std::numeric_limits<double>::infinity()};
      pairs.push_back(pp);
    }
    return estimate_homography_dlt_homogeneous(pairs);
  }
};

LiftedSets make_lifted(const PlanarCorrespondences& pc, const DivisionDistortion& left,
                       const DivisionDistortion& right) {
  if (left.space() != pc.space || right.space() != pc.space)
    throw InvalidArgument("division models and correspondences use different coordinate spaces");
  return {&pc, left.center(), right.center(), left.scale(), right.scale()};
}

constexpr double kInvPhi = 0.6180339887498949;

template <typename F>
std::pair<double, double> golden_section(F&& f, double a, double b, double tol) {
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

Eigen::Vector2d Homography::apply(const Eigen::Vector2d& p) const {
  const Eigen::Vector3d q = h * Eigen::Vector3d{p.x(), p.y(), 1.0};
  return q.head<2>() / q.z();
}

void PlanarCorrespondences::validate(std::size_t min_pairs) const {
  if (pairs.size() < min_pairs)
    throw InvalidArgument("need at least " + std::to_string(min_pairs) + " correspondences");
  std::set<std::pair<double, double>> seen;
  for (const auto& [l, r] : pairs) {
    if (l.space != space || r.space != space)
      throw InvalidArgument("correspondence space tag mismatch");
    if (!l.xy.allFinite() || !r.xy.allFinite()) throw InvalidArgument("non-finite correspondence");
    if (!seen.emplace(l.xy.x(), l.xy.y()).second)
      throw InvalidArgument("duplicate left point in correspondences");
  }
}

HomographyFit estimate_homography_dlt_homogeneous(std::span<const PointPair> pairs) {
  if (pairs.size() < 4) throw InvalidArgument("homography needs at least 4 pairs");
  std::vector<Eigen::Vector2d> left, right;
  left.reserve(pairs.size());
  right.reserve(pairs.size());
  for (const auto& p : pairs) {
    left.push_back(dehomogenize(p.left));
    right.push_back(dehomogenize(p.right));
  }
  const Normalization nl = hartley_normalize(left);
  const Normalization nr = hartley_normalize(right);

  const auto n = static_cast<Eigen::Index>(pairs.size());
  // Four pairs give eight rows; a zero row keeps all nine singular values.
  Eigen::Matrix<double, Eigen::Dynamic, 9> a =
      Eigen::Matrix<double, Eigen::Dynamic, 9>::Zero(std::max<Eigen::Index>(2 * n, 9), 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d x{nl.points[i].x(), nl.points[i].y(), 1.0};
    const double xp = nr.points[i].x(), yp = nr.points[i].y(), wp = 1.0;
    a.row(2 * i) << 0.0, 0.0, 0.0, -wp * x.transpose(), yp * x.transpose();
    a.row(2 * i + 1) << wp * x.transpose(), 0.0, 0.0, 0.0, -xp * x.transpose();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(7) > 1e-10 * sv(0)))
    throw NumericalError("homography: degenerate configuration (rank-deficient design matrix)");

  const Eigen::Matrix<double, 9, 1> hv = svd.matrixV().col(8);
  Matrix3 hn;
  hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
  Matrix3 h = nr.t.inverse() * hn * nl.t;
  canonicalize(h);
  return {Homography{h}, sv(8) * sv(8)};
}

Homography estimate_homography_dlt(
    std::span<const std::pair<Eigen::Vector2d, Eigen::Vector2d>> pairs) {
  std::vector<PointPair> hom;
  hom.reserve(pairs.size());
  for (const auto& [l, r] : pairs)
    hom.push_back({Eigen::Vector3d{l.x(), l.y(), 1.0}, Eigen::Vector3d{r.x(), r.y(), 1.0}});
  return estimate_homography_dlt_homogeneous(hom).h;
}

double division_pair_residual(const PlanarCorrespondences& pc, const DivisionDistortion& left,
                              const DivisionDistortion& right) {
  pc.validate(5);
  return make_lifted(pc, left, right).fit(left.lambda(), right.lambda()).residual;
}

DivisionPairEstimate estimate_division_pair(const PlanarCorrespondences& pc,
                                            const DivisionDistortion& left,
                                            const DivisionDistortion& right,
                                            const CoefficientSearch& search) {
  if (!(search.max > search.min) || !(search.step > 0.0))
    throw InvalidArgument("empty coefficient search range");
  pc.validate(5);
  const LiftedSets sets = make_lifted(pc, left, right);

  const int n = static_cast<int>(std::floor((search.max - search.min) / search.step + 1e-9)) + 1;
  auto grid = [&](int i) { return search.min + i * search.step; };

  double best = std::numeric_limits<double>::infinity();
  double bl = 0.0, br = 0.0;
  // Row-major scan with strict improvement keeps the lexicographically
  // smallest cell among ties.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double res = sets.fit(grid(i), grid(j)).residual;
      if (res < best) {
        best = res;
        bl = grid(i);
        br = grid(j);
      }
    }
  }
  if (!std::isfinite(best))
    throw NumericalError("division estimate: no admissible coefficient pair in the search range");

  const double width = search.step;
  const double tol = 1e-13;
  for (int sweep = 0; sweep < search.max_sweeps; ++sweep) {
    const double before = best;
    const double l0 = bl, r0 = br;
    {
      auto f = [&](double l) { return sets.fit(l, br).residual; };
      auto [l, res] = golden_section(f, std::max(search.min, bl - width),
                                     std::min(search.max, bl + width), tol);
      if (res < best) { best = res; bl = l; }
    }
    {
      auto f = [&](double r) { return sets.fit(bl, r).residual; };
      auto [r, res] = golden_section(f, std::max(search.min, br - width),
                                     std::min(search.max, br + width), tol);
      if (res < best) { best = res; br = r; }
    }
    // The valley runs roughly along lambda = lambda', where alternating
    // steps crawl. Search along the sweep's net displacement as well.
    const double dl = bl - l0, dr = br - r0;
    if (dl != 0.0 || dr != 0.0) {
      double t_max = 16.0;
      if (dl > 0.0) t_max = std::min(t_max, (search.max - l0) / dl);
      if (dl < 0.0) t_max = std::min(t_max, (search.min - l0) / dl);
      if (dr > 0.0) t_max = std::min(t_max, (search.max - r0) / dr);
      if (dr < 0.0) t_max = std::min(t_max, (search.min - r0) / dr);
      auto f = [&](double t) { return sets.fit(l0 + t * dl, r0 + t * dr).residual; };
      auto [t, res] = golden_section(f, 0.0, t_max, tol / std::max(std::abs(dl), std::abs(dr)));
      if (res < best) {
        best = res;
        bl = l0 + t * dl;
        br = r0 + t * dr;
      }
    }
    if (before - best < search.tolerance) break;
  }

  const HomographyFit fit = sets.fit(bl, br);
  return {bl, br, fit.h, fit.residual};
}

PlaneModel fit_plane_lsq(std::span<const Point3> points) {
  if (points.size() < 3) throw InvalidArgument("plane fit needs at least 3 points");
  Point3 centroid = Point3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Matrix3 scatter = Matrix3::Zero();
  for (const auto& p : points) {
    const Point3 q = p - centroid;
    scatter += q * q.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Matrix3> eig(scatter);
  const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
  if (!(ev(1) > 1e-12 * std::max(ev(2), 1e-300)))
    throw NumericalError("plane fit: points are collinear");

  PlaneModel plane;
  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.offset = plane.normal.dot(centroid);
  if (plane.offset < 0.0 || (plane.offset == 0.0 && plane.normal.sum() < 0.0)) {
    plane.normal = -plane.normal;
    plane.offset = -plane.offset;
  }
  return plane;
}

RansacPlaneFit fit_plane_ransac(std::span<const Point3> points, const RansacConfig& cfg) {
  if (points.size() < 3) throw InvalidArgument("plane fit needs at least 3 points");
  if (!(cfg.threshold_fraction > 0.0)) throw InvalidArgument("threshold fraction must be positive");
  if (cfg.iterations <= 0) throw InvalidArgument("RANSAC needs at least one iteration");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  std::vector<bool> best_mask;
  std::size_t best_count = 0;
  std::vector<bool> mask(points.size());

  for (int it = 0; it < cfg.iterations; ++it) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    while (j == i) j = pick(rng);
    std::size_t k = pick(rng);
    while (k == i || k == j) k = pick(rng);
    const Eigen::Vector3d n = (points[j] - points[i]).cross(points[k] - points[i]);
    const double len = n.norm();
    if (!(len > 1e-12)) continue;
    const Eigen::Vector3d normal = n / len;
    const double offset = normal.dot(points[i]);
    const double cutoff = cfg.threshold_fraction * std::abs(offset);
    std::size_t count = 0;
    for (std::size_t p = 0; p < points.size(); ++p) {
      mask[p] = std::abs(normal.dot(points[p]) - offset) <= cutoff;
      count += mask[p];
    }
    if (count > best_count) {
      best_count = count;
      best_mask = mask;
    }
  }
  if (best_count < 3) throw NumericalError("RANSAC: no sample reached 3 inliers");

  std::vector<Point3> inliers;
  inliers.reserve(best_count);
  for (std::size_t p = 0; p < points.size(); ++p)
    if (best_mask[p]) inliers.push_back(points[p]);
  return {fit_plane_lsq(inliers), std::move(best_mask), best_count};
}

}  // namespace radstereo
