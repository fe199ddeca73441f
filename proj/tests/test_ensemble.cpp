#include <doctest.h>

#include <cmath>

#include "rotkit/ensemble.hpp"
#include "rotkit/euler.hpp"

using namespace rotkit;

TEST_SUITE_BEGIN("ensemble");

TEST_CASE("quat_branch basic values") {
  const UnitQuat b1 = quat_branch(1, Mat3{});
  CHECK(b1.w() == 1.0);

  const UnitQuat q1 = UnitQuat::normalized({0.6, 0.8, 0, 0});
  const UnitQuat r1 = quat_branch_from_quat(1, q1);
  CHECK(r1.w() == doctest::Approx(0.6));
  CHECK(r1.x() == doctest::Approx(0.8));

  // 0 <= a < 1/2 case: N(1-a, 2ab, 2ac, 2ad), computed here as the oracle.
  const UnitQuat q2 = UnitQuat::normalized({0.3, 0.954, 0, 0});
  const UnitQuat r2 = quat_branch_from_quat(1, q2);
  const Quat expect{1 - q2.w(), 2 * q2.w() * q2.x(), 2 * q2.w() * q2.y(), 2 * q2.w() * q2.z()};
  const UnitQuat en = UnitQuat::normalized(expect);
  for (int k = 0; k < 4; ++k) CHECK(r2[k] == doctest::Approx(en[k]).epsilon(1e-12));

  CHECK_THROWS(quat_branch(0, Mat3{}));
  CHECK_THROWS(quat_branch(5, Mat3{}));
}

TEST_CASE("quat_region basic values") {
  CHECK(quat_region(1, Mat3{}));
  for (int i = 2; i <= 4; ++i) CHECK(!quat_region(i, Mat3{}));

  const Mat3 rx = quat_to_rot(UnitQuat(0, 1, 0, 0));
  for (int i = 1; i <= 4; ++i) CHECK(quat_region(i, rx) == (i == 2));

  const Mat3 rq = quat_to_rot(UnitQuat(0.5, 0.5, 0.5, 0.5));
  for (int i = 1; i <= 4; ++i) CHECK(quat_region(i, rq));
}

TEST_CASE("branches are well-defined on SO(3)") {
  Philox rng(20);
  for (int it = 0; it < 100000; ++it) {
    const UnitQuat q = sample_uniform_rot(rng);
    for (int i = 1; i <= 4; ++i) {
      const UnitQuat a = quat_branch_from_quat(i, q);
      const UnitQuat b = quat_branch_from_quat(i, -q);
      for (int k = 0; k < 4; ++k) CHECK(a[k] == b[k]);
    }
  }
}

TEST_CASE("in-region branches are exact") {
  Philox rng(21);
  for (int it = 0; it < 100000; ++it) {
    const UnitQuat q = sample_uniform_rot(rng);
    const Mat3 r = quat_to_rot(q);
    for (int i = 1; i <= 4; ++i) {
      if (std::abs(q[i - 1]) < 0.5) continue;
      CHECK(dist_rot(quat_to_rot(quat_branch_from_quat(i, q)), r) < 1e-7);
    }
  }
}

TEST_CASE("case-boundary continuity") {
  // At |component| = 1/2 both case formulas must agree; evaluate the two
  // sides explicitly as the oracle and compare with the implementation.
  Philox rng(22);
  for (int it = 0; it < 10000; ++it) {
    double b = rng.next_gauss(), c = rng.next_gauss(), d = rng.next_gauss();
    const double n = std::sqrt(b * b + c * c + d * d);
    if (n < 1e-9) continue;
    const double scale = std::sqrt(0.75) / n;
    b *= scale;
    c *= scale;
    d *= scale;
    const UnitQuat q(0.5, b, c, d);  // exactly on the a = 1/2 boundary
    const Quat inner{1 - 0.5, 2 * 0.5 * b, 2 * 0.5 * c, 2 * 0.5 * d};
    const UnitQuat side1(q.q);
    const UnitQuat side2 = UnitQuat::normalized(inner);
    const UnitQuat got = quat_branch_from_quat(1, q);
    for (int k = 0; k < 4; ++k) {
      CHECK(std::abs(side1[k] - side2[k]) < 1e-9);
      CHECK(std::abs(got[k] - side1[k]) < 1e-9);
    }
  }
}

TEST_CASE("branch continuity probe") {
  Philox rng(23);
  const double h = 1e-4;
  for (int it = 0; it < 100000; ++it) {
    const UnitQuat q = sample_uniform_rot(rng);
    const double psi = h * (0.5 + 0.5 * rng.next_double());
    double ax = rng.next_gauss(), ay = rng.next_gauss(), az = rng.next_gauss();
    const double n = std::sqrt(ax * ax + ay * ay + az * az);
    if (n < 1e-9) continue;
    const double s = std::sin(psi / 2) / n;
    const UnitQuat dq = UnitQuat::normalized({std::cos(psi / 2), ax * s, ay * s, az * s});
    const Mat3 m1 = quat_to_rot(q);
    const Mat3 m2 = quat_to_rot(dq * q);
    for (int i = 1; i <= 4; ++i) {
      const UnitQuat a = quat_branch(i, m1);
      const UnitQuat bq = quat_branch(i, m2);
      double diff2 = 0;
      for (int k = 0; k < 4; ++k) diff2 += (a[k] - bq[k]) * (a[k] - bq[k]);
      CHECK(std::sqrt(diff2) <= 100.0 * psi);
    }
  }
}

TEST_CASE("analytic ensemble is total") {
  const auto ri = analytic_ensemble_convert(Mat3{});
  CHECK(ri.selected == 1);
  CHECK(ri.output.w() == 1.0);

  const auto rz = analytic_ensemble_convert(rot_z(kPi));
  CHECK(rz.selected == 4);
  CHECK(std::abs(rz.output.z()) == doctest::Approx(1.0));

  Philox rng(24);
  for (int it = 0; it < 100000; ++it) {
    const Mat3 r = quat_to_rot(sample_uniform_rot(rng));
    const auto res = analytic_ensemble_convert(r);
    CHECK(res.selected >= 1);
    CHECK(dist_rot(quat_to_rot(res.output), r) < 1e-7);
    for (const auto& rep : res.reports)
      if (rep.in_region) CHECK(rep.error < 1e-7);
  }

  // deterministic grid over Euler boxes, including gimbal-locked inputs
  const int g = 20;
  for (int ia = 0; ia < g; ++ia)
    for (int ib = 0; ib < g; ++ib)
      for (int ic = 0; ic < g; ++ic) {
        const double alpha = -kPi + 2 * kPi * ia / (g - 1);
        const double beta = -kPi / 2 + kPi * ib / (g - 1);
        const double gamma = -kPi + 2 * kPi * ic / (g - 1);
        const Mat3 r = euler_to_rot({alpha, beta, gamma, EulerOrder::XYZ});
        const auto res = analytic_ensemble_convert(r);
        CHECK(dist_rot(quat_to_rot(res.output), r) < 1e-7);
      }
}

TEST_SUITE_END();
