#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "radstereo/distortion.hpp"
#include "radstereo/error.hpp"
#include "test_support.hpp"

#include <cmath>
#include <random>

using namespace radstereo;

namespace {

const PolyDistortion kLeftPoly(-0.369, 0.303, -0.366);
const PolyDistortion kRightPoly(-0.336, -0.103, 0.866);

DistortedPoint dn(double x, double y) { return {{x, y}, CoordinateSpace::normalized}; }
UndistortedPoint un(double x, double y) { return {{x, y}, CoordinateSpace::normalized}; }

Eigen::Vector2d rotate(const Eigen::Vector2d& p, const Eigen::Vector2d& c, double a) {
  const Eigen::Vector2d q = p - c;
  return c + Eigen::Vector2d{std::cos(a) * q.x() - std::sin(a) * q.y(),
                             std::sin(a) * q.x() + std::cos(a) * q.y()};
}

}  // namespace

TEST_CASE("polynomial model with zero coefficients is the identity") {
  const PolyDistortion zero(0, 0, 0);
  const DistortedPoint d = poly_distort(zero, {0.3, -0.2});
  CHECK(d.xy.x() == 0.3);
  CHECK(d.xy.y() == -0.2);
  const NormalizedPoint u = poly_undistort(zero, dn(0.3, -0.2));
  CHECK(u.x == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(u.y == doctest::Approx(-0.2).epsilon(1e-14));
}

TEST_CASE("polynomial model evaluation") {
  const DistortedPoint d = poly_distort(kLeftPoly, {0.1, 0.0});
  // 0.1 * (1 - 0.369e-2 + 0.303e-4 - 0.366e-6)
  CHECK(d.xy.x() == doctest::Approx(0.0996339934).epsilon(1e-12));
  CHECK(std::abs(d.xy.x() - 0.0996340) < 1e-7);
  CHECK(d.xy.y() == 0.0);
  CHECK(poly_distort(kLeftPoly, {0.0, 0.0}).xy.norm() == 0.0);
  CHECK(poly_undistort(kLeftPoly, dn(0.0, 0.0)).vec().norm() == 0.0);
}

TEST_CASE("polynomial inversion recovers the example") {
  const Eigen::Vector2d fwd = poly_distort(kLeftPoly, {0.1, 0.0}).xy;
  const NormalizedPoint u = poly_undistort(kLeftPoly, {fwd, CoordinateSpace::normalized});
  CHECK(std::abs(u.x - 0.1) < 1e-10);
  CHECK(std::abs(u.y) < 1e-10);
  const NormalizedPoint v = poly_undistort(kLeftPoly, dn(0.0996340, 0.0));
  CHECK(std::abs(v.x - 0.1) < 1e-7);
}

TEST_CASE("polynomial round trip on a 21 x 21 grid") {
  for (const auto* d : {&kLeftPoly, &kRightPoly}) {
    double worst = 0.0;
    for (int i = 0; i < 21; ++i) {
      for (int j = 0; j < 21; ++j) {
        const NormalizedPoint p{-0.6 + 0.06 * i, -0.6 + 0.06 * j};
        if (p.vec().norm() > 0.6) continue;
        const NormalizedPoint back = poly_undistort(*d, poly_distort(*d, p));
        worst = std::max(worst, (back.vec() - p.vec()).cwiseAbs().maxCoeff());
        const Eigen::Vector2d again = poly_distort(*d, back).xy;
        CHECK((again - poly_distort(*d, p).xy).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("polynomial inversion agrees with a dense-sampling inverse") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ang(0.0, 2 * M_PI), rad(0.0, 0.75);
  for (const auto* d : {&kLeftPoly, &kRightPoly}) {
    for (int i = 0; i < 100; ++i) {
      const double r = rad(rng), a = ang(rng);
      const double rd = testsupport::poly_radius(d->k1(), d->k2(), d->k3(), r);
      const Eigen::Vector2d pd{rd * std::cos(a), rd * std::sin(a)};
      const double oracle = testsupport::poly_inverse_radius(d->k1(), d->k2(), d->k3(), rd, 0.8);
      const NormalizedPoint u = poly_undistort(*d, {pd, CoordinateSpace::normalized});
      CHECK(std::abs(u.vec().norm() - oracle) < 1e-6);
      CHECK(std::abs(std::atan2(u.y, u.x) - std::atan2(pd.y(), pd.x())) < 1e-9);
    }
  }
}

TEST_CASE("radius times gain is increasing for the left coefficients up to 0.6") {
  double prev = -1.0;
  for (int i = 0; i <= 6000; ++i) {
    const double r = 0.6 * i / 6000;
    const double v = testsupport::poly_radius(-0.369, 0.303, -0.366, r);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("polynomial construction rejects non-invertible coefficients") {
  // r (1 - 2 r^2) peaks at r = 0.408
  CHECK_THROWS_AS(PolyDistortion(-2.0, 0.0, 0.0), InvalidArgument);
  // gain turns negative before 0.8
  CHECK_THROWS_AS(PolyDistortion(0.0, 0.0, -10.0), InvalidArgument);
  CHECK_THROWS_AS(PolyDistortion(0.0, 0.0, 0.0, -0.1), InvalidArgument);
  CHECK_NOTHROW(PolyDistortion(-2.0, 0.0, 0.0, 0.4));
  // the right camera's gain dips then rises, yet r g(r) stays increasing
  CHECK_NOTHROW(PolyDistortion(-0.336, -0.103, 0.866));
  CHECK(kRightPoly.max_distorted_radius() ==
        doctest::Approx(testsupport::poly_radius(-0.336, -0.103, 0.866, 0.8)));
}

TEST_CASE("polynomial inversion fails outside the reachable range") {
  const double beyond = kLeftPoly.max_distorted_radius() * 1.5;
  CHECK_THROWS_AS(poly_undistort(kLeftPoly, dn(beyond, 0.0)), NumericalError);
}

TEST_CASE("both models commute with rotations about the center") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.4, 0.4), a(-M_PI, M_PI);
  const DivisionDistortion div(-0.3, {0.05, -0.02}, 1.0, CoordinateSpace::normalized, 0.9);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector2d p{u(rng), u(rng)};
    const double ang = a(rng);
    const Eigen::Vector2d lhs = poly_distort(kLeftPoly, {rotate(p, {0, 0}, ang).x(), rotate(p, {0, 0}, ang).y()}).xy;
    const Eigen::Vector2d rhs = rotate(poly_distort(kLeftPoly, {p.x(), p.y()}).xy, {0, 0}, ang);
    CHECK((lhs - rhs).norm() < 1e-12);

    const Eigen::Vector2d dl = division_undistort(div, {rotate(p, div.center(), ang), div.space()}).xy;
    const Eigen::Vector2d dr = rotate(division_undistort(div, {p, div.space()}).xy, div.center(), ang);
    CHECK((dl - dr).norm() < 1e-12);
  }
}

TEST_CASE("division undistortion examples") {
  const DivisionDistortion zero = DivisionDistortion::normalized(0.0);
  const UndistortedPoint same = division_undistort(zero, dn(0.31, -0.4));
  CHECK(same.xy.x() == 0.31);
  CHECK(same.xy.y() == -0.4);

  const DivisionDistortion d = DivisionDistortion::normalized(-0.2);
  const UndistortedPoint u = division_undistort(d, dn(0.5, 0.5));
  CHECK(u.xy.x() == doctest::Approx(0.555556).epsilon(1e-6));
  CHECK(u.xy.y() == doctest::Approx(0.5 / 0.9).epsilon(1e-15));

  const DivisionDistortion c(-0.4, {125, 125}, 125, CoordinateSpace::pixel, 176);
  const UndistortedPoint fixed = division_undistort(c, {{125, 125}, CoordinateSpace::pixel});
  CHECK(fixed.xy.x() == 125.0);
  CHECK(fixed.xy.y() == 125.0);
  CHECK(fixed.space == CoordinateSpace::pixel);
}

TEST_CASE("division undistortion with a vanishing denominator throws") {
  const DivisionDistortion d(-1.0, {0, 0}, 1.0, CoordinateSpace::normalized, 0.9);
  CHECK_THROWS_AS(division_undistort(d, dn(1.0, 0.5)), NumericalError);
  CHECK_THROWS_AS(division_undistort(d, dn(1.0, 0.0)), NumericalError);
}

TEST_CASE("division construction checks the denominator over the working radius") {
  CHECK_THROWS_AS(DivisionDistortion(-1.0, {0, 0}, 1.0, CoordinateSpace::normalized, 1.0), InvalidArgument);
  CHECK_THROWS_AS(DivisionDistortion(-0.2, {0, 0}, 0.0, CoordinateSpace::normalized, 0.8), InvalidArgument);
  CHECK_NOTHROW(DivisionDistortion(-1.0, {0, 0}, 1.0, CoordinateSpace::normalized, 0.99));
  const DivisionDistortion px = DivisionDistortion::pixel(-0.3);
  CHECK(px.center().x() == 125.0);
  CHECK(px.center().y() == 125.0);
  CHECK(px.scale() == 125.0);
  CHECK(px.working_radius() == doctest::Approx(125.0 * std::sqrt(2.0)));
  CHECK(px.space() == CoordinateSpace::pixel);
  CHECK_THROWS_AS(DivisionDistortion::pixel(-0.6), InvalidArgument);
}

TEST_CASE("division forward model examples") {
  const DivisionDistortion zero = DivisionDistortion::normalized(0.0);
  const DistortedPoint same = division_distort(zero, un(0.2, 0.7));
  CHECK(same.xy.x() == 0.2);
  CHECK(same.xy.y() == 0.7);

  const DivisionDistortion d = DivisionDistortion::normalized(-0.2);
  const DistortedPoint p = division_distort(d, un(0.5 / 0.9, 0.5 / 0.9));
  CHECK(std::abs(p.xy.x() - 0.5) < 1e-12);
  CHECK(std::abs(p.xy.y() - 0.5) < 1e-12);
  const DistortedPoint q = division_distort(d, un(0.555556, 0.555556));
  CHECK(std::abs(q.xy.x() - 0.5) < 1e-6);
}

TEST_CASE("division forward model matches a bisection inverse and round-trips") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI), rad(0.0, 1.0), lam(-0.5, 0.3);
  for (int i = 0; i < 200; ++i) {
    const double lambda = lam(rng);
    const DivisionDistortion d(lambda, {125, 125}, 125, CoordinateSpace::pixel, 125 * std::sqrt(2.0));
    // pick the distorted radius, derive the undistorted pixel independently
    const double rho_d = rad(rng) * 1.2, a = ang(rng);
    const double rho_u = testsupport::division_forward_radius(lambda, rho_d);
    const Eigen::Vector2d pu = Eigen::Vector2d{125, 125} + 125 * rho_u * Eigen::Vector2d{std::cos(a), std::sin(a)};
    const DistortedPoint pd = division_distort(d, {pu, CoordinateSpace::pixel});
    const double oracle = testsupport::division_inverse_radius(lambda, rho_u, 1.5);
    CHECK(std::abs((pd.xy - Eigen::Vector2d{125, 125}).norm() / 125 - oracle) < 1e-9);
    const UndistortedPoint back = division_undistort(d, pd);
    CHECK((back.xy - pu).norm() < 1e-9);
  }
}

TEST_CASE("division forward model throws without a real root") {
  const DivisionDistortion d(1.0, {0, 0}, 1.0, CoordinateSpace::normalized, 2.0);
  // lambda rho_u^2 > 1/4 has no real distorted radius
  CHECK_THROWS_AS(division_distort(d, un(0.6, 0.0)), NumericalError);
  // the root exists but lies outside the working radius
  const DivisionDistortion small(-0.2, {0, 0}, 1.0, CoordinateSpace::normalized, 0.3);
  CHECK_THROWS_AS(division_distort(small, un(0.5, 0.0)), NumericalError);
}

TEST_CASE("homogeneous lift") {
  const Eigen::Vector3d a = lift_distorted_homogeneous(DivisionDistortion::normalized(0.0), dn(0.3, -0.1));
  CHECK((a - Eigen::Vector3d(0.3, -0.1, 1.0)).norm() == 0.0);
  const Eigen::Vector3d b = lift_distorted_homogeneous(DivisionDistortion::normalized(-0.2), dn(0.5, 0.5));
  CHECK((b - Eigen::Vector3d(0.5, 0.5, 0.9)).norm() < 1e-15);
}

TEST_CASE("lift dehomogenizes to the undistorted point") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> px(0.0, 250.0), nn(-0.6, 0.6);
  const DivisionDistortion pix = DivisionDistortion::pixel(-0.35);
  const DivisionDistortion off(-0.25, {0.04, -0.03}, 1.0, CoordinateSpace::normalized, 0.9);
  for (int i = 0; i < 100; ++i) {
    const DistortedPoint p{{px(rng), px(rng)}, CoordinateSpace::pixel};
    const Eigen::Vector3d l = lift_distorted_homogeneous(pix, p);
    CHECK((l.head<2>() / l.z() - division_undistort(pix, p).xy).norm() < 1e-10);
    const DistortedPoint q = dn(nn(rng), nn(rng));
    const Eigen::Vector3d m = lift_distorted_homogeneous(off, q);
    const Eigen::Vector2d u = division_undistort(off, q).xy;
    CHECK((m.head<2>() / m.z() - u).norm() < 1e-12);
    // proportional to (x_u, y_u, 1)
    CHECK(m.cross(Eigen::Vector3d(u.x(), u.y(), 1.0)).norm() < 1e-12);
  }
}

TEST_CASE("pixel model re-expressed in normalized coordinates") {
  const Intrinsics k{216.3, 216.3, 122.4, 111.5, 0.0};
  const DivisionDistortion pix = DivisionDistortion::pixel(-0.3);
  const DivisionDistortion norm = to_normalized_space(pix, k);
  CHECK(norm.space() == CoordinateSpace::normalized);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> px(5.0, 245.0);
  for (int i = 0; i < 50; ++i) {
    const PixelPoint p{px(rng), px(rng)};
    const Eigen::Vector2d via_pixel = division_undistort(pix, {p.vec(), CoordinateSpace::pixel}).xy;
    const NormalizedPoint a = unproject(k, {via_pixel.x(), via_pixel.y()});
    const Eigen::Vector2d b =
        division_undistort(norm, {unproject(k, p).vec(), CoordinateSpace::normalized}).xy;
    CHECK((a.vec() - b).norm() < 1e-12);
  }
  CHECK_THROWS_AS(to_normalized_space(pix, Intrinsics{216.36, 216.315, 122.4, 111.5, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(to_normalized_space(pix, Intrinsics{216.3, 216.3, 122.4, 111.5, 0.5}), InvalidArgument);
}
