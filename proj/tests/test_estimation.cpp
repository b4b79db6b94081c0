#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "radstereo/error.hpp"
#include "radstereo/estimation.hpp"
#include "test_support.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <random>

using namespace radstereo;

namespace {

using Pair2 = std::pair<Eigen::Vector2d, Eigen::Vector2d>;

Eigen::Vector2d apply_h(const Eigen::Matrix3d& h, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = h * Eigen::Vector3d(p.x(), p.y(), 1.0);
  return q.head<2>() / q.z();
}

// Frobenius-normalized, sign fixed by the largest-magnitude entry.
Eigen::Matrix3d canonical(Eigen::Matrix3d h) {
  h /= h.norm();
  Eigen::Index r = 0, c = 0;
  h.cwiseAbs().maxCoeff(&r, &c);
  return h(r, c) < 0 ? Eigen::Matrix3d(-h) : h;
}

Eigen::Matrix3d random_homography(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
  h(0, 0) += 0.1 * u(rng);
  h(0, 1) = 0.1 * u(rng);
  h(1, 0) = 0.1 * u(rng);
  h(1, 1) += 0.1 * u(rng);
  h(0, 2) = 10 * u(rng);
  h(1, 2) = 10 * u(rng);
  h(2, 0) = 2e-4 * u(rng);
  h(2, 1) = 2e-4 * u(rng);
  return h;
}

// Corresponding distorted pixels of one plane under the pixel-space division
// model (center 125, scale 125): left distorted grid -> closed-form
// undistortion -> homography -> bisection re-distortion on the right.
PlanarCorrespondences division_plane(double lambda, double lambda_r, const Eigen::Matrix3d& h,
                                     int cols = 8, int rows = 6, double noise = 0.0,
                                     std::mt19937_64* rng = nullptr) {
  const Eigen::Vector2d c{125, 125};
  PlanarCorrespondences pc;
  pc.space = CoordinateSpace::pixel;
  std::normal_distribution<double> n(0.0, noise);
  for (int r = 0; r < rows; ++r) {
    for (int k = 0; k < cols; ++k) {
      const Eigen::Vector2d pd{30 + 190.0 * k / (cols - 1), 35 + 180.0 * r / (rows - 1)};
      const double rho_d = (pd - c).norm() / 125;
      const Eigen::Vector2d pu = c + (pd - c) / (1 + lambda * rho_d * rho_d);
      const Eigen::Vector2d qu = apply_h(h, pu);
      const double rho_u = (qu - c).norm() / 125;
      const double rho_q = testsupport::division_inverse_radius(lambda_r, rho_u, 1.8);
      Eigen::Vector2d qd = rho_u > 0 ? Eigen::Vector2d(c + (qu - c) * (rho_q / rho_u)) : qu;
      Eigen::Vector2d pl = pd;
      if (noise > 0.0 && rng) {
        pl += Eigen::Vector2d{n(*rng), n(*rng)};
        qd += Eigen::Vector2d{n(*rng), n(*rng)};
      }
      pc.pairs.push_back({{pl, CoordinateSpace::pixel}, {qd, CoordinateSpace::pixel}});
    }
  }
  return pc;
}

Eigen::Matrix3d board_h() {
  Eigen::Matrix3d h;
  h << 1.02, 0.03, -6.0, -0.02, 0.99, 4.0, 1e-4, -5e-5, 1.0;
  return h;
}

}  // namespace

TEST_CASE("homography of identical point sets is the identity") {
  std::vector<Pair2> pairs;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) pairs.push_back({{10.0 * i + 3, 7.0 * j - 2}, {10.0 * i + 3, 7.0 * j - 2}});
  const Homography h = estimate_homography_dlt(pairs);
  CHECK((canonical(h.h) - canonical(Eigen::Matrix3d::Identity())).norm() < 1e-12);
  CHECK(h.h.norm() == doctest::Approx(1.0));
  CHECK(h.h(2, 2) > 0.0);
}

TEST_CASE("homography from four translated points") {
  const double tx = 3.5, ty = -1.25;
  std::vector<Pair2> pairs;
  for (const auto& p : {Eigen::Vector2d{0, 0}, Eigen::Vector2d{1, 0}, Eigen::Vector2d{0, 1}, Eigen::Vector2d{1, 1}})
    pairs.push_back({p, p + Eigen::Vector2d{tx, ty}});
  const Homography h = estimate_homography_dlt(pairs);
  const Eigen::Matrix3d m = h.h / h.h(2, 2);
  Eigen::Matrix3d expected;
  expected << 1, 0, tx, 0, 1, ty, 0, 0, 1;
  CHECK((m - expected).norm() < 1e-10);
}

TEST_CASE("homography recovered from noise-free synthesis") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> px(0, 250);
  for (int t = 0; t < 20; ++t) {
    const Eigen::Matrix3d truth = random_homography(rng);
    std::vector<Pair2> pairs;
    for (int i = 0; i < 30; ++i) {
      const Eigen::Vector2d p{px(rng), px(rng)};
      pairs.push_back({p, apply_h(truth, p)});
    }
    const Homography h = estimate_homography_dlt(pairs);
    CHECK((canonical(h.h) - canonical(truth)).norm() < 1e-8);
    CHECK((h.apply(pairs[0].first) - pairs[0].second).norm() < 1e-8);
  }
}

TEST_CASE("homography is invariant under similarity changes of the input") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> px(0, 250);
  const Eigen::Matrix3d truth = random_homography(rng);
  std::vector<Pair2> pairs, moved;
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity(), s2 = Eigen::Matrix3d::Identity();
  s << 2.0 * std::cos(0.3), -2.0 * std::sin(0.3), 15, 2.0 * std::sin(0.3), 2.0 * std::cos(0.3), -4, 0, 0, 1;
  s2 << 0.5, 0, -3, 0, 0.5, 8, 0, 0, 1;
  std::normal_distribution<double> n(0, 0.3);
  for (int i = 0; i < 40; ++i) {
    const Eigen::Vector2d p{px(rng), px(rng)};
    const Eigen::Vector2d q = apply_h(truth, p) + Eigen::Vector2d{n(rng), n(rng)};
    pairs.push_back({p, q});
    moved.push_back({apply_h(s, p), apply_h(s2, q)});
  }
  const Eigen::Matrix3d h = estimate_homography_dlt(pairs).h;
  const Eigen::Matrix3d hm = estimate_homography_dlt(moved).h;
  CHECK((canonical(s2.inverse() * hm * s) - canonical(h)).norm() < 1e-9);
}

TEST_CASE("degenerate homography inputs") {
  std::vector<Pair2> three{{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
  CHECK_THROWS_AS(estimate_homography_dlt(three), InvalidArgument);
  std::vector<Pair2> collinear;
  for (int i = 0; i < 8; ++i) collinear.push_back({{double(i), 2.0 * i}, {double(i) + 1, 2.0 * i}});
  CHECK_THROWS_AS(estimate_homography_dlt(collinear), NumericalError);
}

TEST_CASE("division pair residual vanishes at the generating coefficients") {
  const PlanarCorrespondences pc = division_plane(-0.25, -0.30, board_h());
  const double res = division_pair_residual(pc, DivisionDistortion::pixel(-0.25), DivisionDistortion::pixel(-0.30));
  CHECK(res < 1e-12);
}

TEST_CASE("division residual surface is smallest at the truth on an 11 x 11 grid") {
  const PlanarCorrespondences pc = division_plane(-0.25, -0.30, board_h());
  double best = 1e300;
  int bi = -1, bj = -1;
  for (int i = -5; i <= 5; ++i) {
    for (int j = -5; j <= 5; ++j) {
      const double r = division_pair_residual(pc, DivisionDistortion::pixel(-0.25 + 0.01 * i),
                                              DivisionDistortion::pixel(-0.30 + 0.01 * j));
      if (r < best) best = r, bi = i, bj = j;
    }
  }
  CHECK(bi == 0);
  CHECK(bj == 0);
}

TEST_CASE("joint estimate recovers the division coefficients") {
  const auto start = std::chrono::steady_clock::now();
  const PlanarCorrespondences pc = division_plane(-0.25, -0.30, board_h());
  REQUIRE(pc.pairs.size() == 48);
  const DivisionPairEstimate e = estimate_division_pair(pc, DivisionDistortion::pixel(0), DivisionDistortion::pixel(0));
  CHECK(std::abs(e.lambda_left + 0.25) < 1e-3);
  CHECK(std::abs(e.lambda_right + 0.30) < 1e-3);
  CHECK(e.residual < 1e-12);
  CHECK((canonical(e.h.h) - canonical(board_h())).norm() < 1e-5);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 30.0);
}

TEST_CASE("undistorted planar data gives zero coefficients") {
  const PlanarCorrespondences pc = division_plane(0.0, 0.0, board_h());
  const DivisionPairEstimate e = estimate_division_pair(pc, DivisionDistortion::pixel(0), DivisionDistortion::pixel(0));
  CHECK(std::abs(e.lambda_left) < 1e-3);
  CHECK(std::abs(e.lambda_right) < 1e-3);
}

TEST_CASE("joint estimate preconditions") {
  const PlanarCorrespondences pc = division_plane(-0.25, -0.30, board_h());
  CoefficientSearch empty;
  empty.min = 0.5;
  empty.max = 0.5;
  CHECK_THROWS_AS(estimate_division_pair(pc, DivisionDistortion::pixel(0), DivisionDistortion::pixel(0), empty),
                  InvalidArgument);
  PlanarCorrespondences few = pc;
  few.pairs.resize(4);
  CHECK_THROWS_AS(estimate_division_pair(few, DivisionDistortion::pixel(0), DivisionDistortion::pixel(0)),
                  InvalidArgument);
  PlanarCorrespondences dup = pc;
  dup.pairs[3].first = dup.pairs[7].first;
  CHECK_THROWS_AS(estimate_division_pair(dup, DivisionDistortion::pixel(0), DivisionDistortion::pixel(0)),
                  InvalidArgument);
}

TEST_CASE("averaging per-board estimates reduces the spread") {
  // Coarse search keeps the Monte-Carlo quick; the range still
  // brackets the truth.
  CoefficientSearch search;
  search.min = -0.6;
  search.max = 0.1;
  search.step = 0.1;
  search.tolerance = 1e-7;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1, 1);
  double var_single = 0.0, var_mean = 0.0;
  const int trials = 25;
  for (int t = 0; t < trials; ++t) {
    double est[3];
    for (int b = 0; b < 3; ++b) {
      Eigen::Matrix3d h = board_h();
      h(0, 2) += 5 * u(rng);
      h(1, 2) += 5 * u(rng);
      const PlanarCorrespondences pc = division_plane(-0.25, -0.30, h, 5, 4, 0.3, &rng);
      est[b] = estimate_division_pair(pc, DivisionDistortion::pixel(0), DivisionDistortion::pixel(0), search)
                   .lambda_left;
    }
    var_single += (est[0] + 0.25) * (est[0] + 0.25);
    const double m = (est[0] + est[1] + est[2]) / 3;
    var_mean += (m + 0.25) * (m + 0.25);
  }
  CHECK(var_mean < var_single);
}

TEST_CASE("least-squares plane of an exact plane") {
  const std::vector<Point3> pts{{0, 0, 5}, {1, 0, 5}, {0, 1, 5}, {1, 1, 5}};
  const PlaneModel p = fit_plane_lsq(pts);
  CHECK((p.normal - Eigen::Vector3d::UnitZ()).norm() < 1e-12);
  CHECK(p.offset == doctest::Approx(5.0));
}

TEST_CASE("least-squares plane under a small perturbation") {
  std::vector<Point3> pts;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 8; ++j) pts.push_back({6.0 * j, 6.0 * i, 50.0});
  const double eps = 0.01;
  pts[20].z() += eps;
  const PlaneModel p = fit_plane_lsq(pts);
  const double tilt = std::acos(std::min(1.0, p.normal.dot(Eigen::Vector3d::UnitZ())));
  CHECK(tilt < eps);
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (i != 20) CHECK(p.distance(pts[i]) < eps);
}

TEST_CASE("least-squares plane is equivariant under rigid motion") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> n(0, 0.2);
  std::vector<Point3> pts, moved;
  const Eigen::Matrix3d r = testsupport::axis_angle_matrix({0.3, -0.5, 0.2});
  const Eigen::Vector3d t{4, -7, 12};
  for (int i = 0; i < 40; ++i) {
    const Point3 p{double(i % 8), double(i / 8), 30 + 0.1 * i + n(rng)};
    pts.push_back(p);
    moved.push_back(r * p + t);
  }
  const PlaneModel a = fit_plane_lsq(pts), b = fit_plane_lsq(moved);
  const Eigen::Vector3d na = r * a.normal;
  const double sign = na.dot(b.normal) < 0 ? -1.0 : 1.0;
  CHECK((sign * na - b.normal).norm() < 1e-9);
  CHECK(std::abs(sign * (a.offset + na.dot(t)) - b.offset) < 1e-9);
}

TEST_CASE("least-squares plane errors") {
  CHECK_THROWS_AS(fit_plane_lsq(std::vector<Point3>{{0, 0, 1}, {1, 0, 1}}), InvalidArgument);
  CHECK_THROWS_AS(fit_plane_lsq(std::vector<Point3>{{0, 0, 1}, {1, 1, 1}, {2, 2, 1}, {3, 3, 1}}), NumericalError);
}

TEST_CASE("RANSAC on exactly planar points keeps everything") {
  std::vector<Point3> pts;
  for (int i = 0; i < 30; ++i) pts.push_back({double(i % 6), double(i / 6), 20.0 + 0.5 * (i % 6)});
  const RansacPlaneFit f = fit_plane_ransac(pts, {0.15, 100, 3});
  CHECK(f.inlier_count == pts.size());
  const PlaneModel l = fit_plane_lsq(pts);
  CHECK((f.plane.normal - l.normal).norm() < 1e-12);
  CHECK(f.plane.offset == doctest::Approx(l.offset));
}

TEST_CASE("RANSAC cut-off is the fraction of the candidate plane's distance") {
  std::vector<Point3> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({double(i % 5), double(i / 5), 50.0});
  pts.push_back({2.0, 1.0, 57.4});
  pts.push_back({1.0, 2.0, 57.6});
  const RansacPlaneFit f = fit_plane_ransac(pts, {0.15, 300, 1});
  CHECK(f.inliers[20]);
  CHECK_FALSE(f.inliers[21]);
  CHECK(f.inlier_count == 21);
}

// Outliers fill a 20 mm slab beyond the plane (10 to 30 mm off it), so they
// sit outside the 7.5 mm cut-off.
TEST_CASE("RANSAC recovers a plane among 30 percent outliers") {
  int good = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    std::uniform_real_distribution<double> xy(-30, 30), slab(60, 80);
    std::vector<Point3> pts;
    std::vector<bool> truth;
    for (int i = 0; i < 70; ++i) pts.push_back({xy(rng), xy(rng), 50.0}), truth.push_back(true);
    for (int i = 0; i < 30; ++i) pts.push_back({xy(rng), xy(rng), slab(rng)}), truth.push_back(false);
    const RansacPlaneFit f = fit_plane_ransac(pts, {0.15, 500, seed});
    const double angle = std::acos(std::min(1.0, std::abs(f.plane.normal.z()))) * 180 / M_PI;
    int kept = 0;
    for (int i = 0; i < 70; ++i) kept += f.inliers[static_cast<std::size_t>(i)];
    if (angle < 1.0 && kept >= 67) ++good;
  }
  CHECK(good >= 95);
}

TEST_CASE("RANSAC with an unbounded threshold is the least-squares plane") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> n(0, 3);
  std::vector<Point3> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({double(i % 10), double(i / 10), 40 + n(rng)});
  const RansacPlaneFit f = fit_plane_ransac(pts, {1e12, 50, 2});
  const PlaneModel l = fit_plane_lsq(pts);
  CHECK(f.inlier_count == pts.size());
  CHECK((f.plane.normal - l.normal).norm() < 1e-12);
}

TEST_CASE("RANSAC is deterministic for a seed") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<Point3> pts;
  for (int i = 0; i < 60; ++i) pts.push_back({u(rng), u(rng), i % 4 ? 30.0 : 30 + 3 * u(rng)});
  const RansacPlaneFit a = fit_plane_ransac(pts, {0.05, 200, 9});
  const RansacPlaneFit b = fit_plane_ransac(pts, {0.05, 200, 9});
  CHECK(a.inliers == b.inliers);
  CHECK(a.plane.normal == b.plane.normal);
  CHECK(a.plane.offset == b.plane.offset);
}

TEST_CASE("RANSAC errors") {
  CHECK_THROWS_AS(fit_plane_ransac(std::vector<Point3>{{0, 0, 1}, {1, 0, 1}}, {}), InvalidArgument);
  const std::vector<Point3> pts{{0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
  CHECK_THROWS_AS(fit_plane_ransac(pts, {0.0, 10, 0}), InvalidArgument);
  CHECK_THROWS_AS(fit_plane_ransac(pts, {0.1, 0, 0}), InvalidArgument);
  const std::vector<Point3> line{{0, 0, 1}, {1, 1, 1}, {2, 2, 1}, {3, 3, 1}};
  CHECK_THROWS_AS(fit_plane_ransac(line, {0.15, 50, 0}), NumericalError);
}
