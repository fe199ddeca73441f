#include <doctest.h>

#include <cmath>
#include <vector>

#include "rotkit/euler.hpp"
#include "rotkit/symmetry.hpp"

using namespace rotkit;

namespace {

bool contains(const FiniteRotationGroup& g, const UnitQuat& q, double tol = 1e-9) {
  for (const auto& e : g.elements) {
    double d2p = 0, d2n = 0;
    for (int k = 0; k < 4; ++k) {
      d2p += (e[k] - q[k]) * (e[k] - q[k]);
      d2n += (e[k] + q[k]) * (e[k] + q[k]);
    }
    if (d2p < tol * tol) return true;
    (void)d2n;
  }
  return false;
}

std::vector<FiniteRotationGroup> all_test_groups() {
  std::vector<FiniteRotationGroup> gs;
  for (int n = 1; n <= 6; ++n) gs.push_back(build_group(GroupKind::Cn, n));
  for (int n = 2; n <= 6; ++n) gs.push_back(build_group(GroupKind::Dn, n));
  gs.push_back(build_group(GroupKind::T));
  gs.push_back(build_group(GroupKind::O));
  gs.push_back(build_group(GroupKind::I));
  return gs;
}

}  // namespace

TEST_SUITE_BEGIN("symmetry");

TEST_CASE("group sizes") {
  CHECK(build_group(GroupKind::Dn, 2).elements.size() == 8);
  CHECK(build_group(GroupKind::T).elements.size() == 24);
  CHECK(build_group(GroupKind::O).elements.size() == 48);
  CHECK(build_group(GroupKind::I).elements.size() == 120);
  CHECK(build_group(GroupKind::Cn, 4).elements.size() == 8);
  CHECK_THROWS(build_group(GroupKind::Cn, 0));
}

TEST_CASE("group axioms by brute force") {
  for (const auto& g : all_test_groups()) {
    CAPTURE(g.name());
    CHECK(contains(g, UnitQuat(1, 0, 0, 0)));
    CHECK(contains(g, UnitQuat(-1, 0, 0, 0)));
    for (const auto& a : g.elements) {
      CHECK(std::abs(a.q.norm() - 1.0) < 1e-12);
      CHECK(contains(g, -a));        // negation-closed
      CHECK(contains(g, a.conj()));  // inverses
    }
    for (const auto& a : g.elements)
      for (const auto& b : g.elements) CHECK(contains(g, a * b));  // closure
  }
}

TEST_CASE("dist_quotient basic values") {
  const auto d2 = build_group(GroupKind::Dn, 2);
  const auto c2 = build_group(GroupKind::Cn, 2);

  Philox rng(30);
  const UnitQuat q = sample_uniform_rot(rng);
  CHECK(dist_quotient(q, q, d2) < 1e-12);

  CHECK(dist_quotient(UnitQuat(1, 0, 0, 0), UnitQuat(0, 0, 0, 1), d2) < 1e-12);

  const UnitQuat rx90 = euler_to_quat({kPi / 2, 0, 0, EulerOrder::XYZ});
  CHECK(dist_quotient(UnitQuat(1, 0, 0, 0), rx90, c2) == doctest::Approx(kPi / 2));
}

TEST_CASE("dist_quotient is right-invariant and symmetric") {
  Philox rng(31);
  for (const auto& g : {build_group(GroupKind::Dn, 3), build_group(GroupKind::T)}) {
    for (int it = 0; it < 2000; ++it) {
      const UnitQuat s = sample_uniform_rot(rng);
      const UnitQuat r = sample_uniform_rot(rng);
      const double d = dist_quotient(s, r, g);
      CHECK(std::abs(d - dist_quotient(r, s, g)) < 1e-9);
      const auto& ge = g.elements[it % g.elements.size()];
      CHECK(std::abs(d - dist_quotient(s, r * ge, g)) < 1e-9);
    }
  }
}

TEST_CASE("quotient pseudometric: triangle inequality") {
  Philox rng(32);
  for (const auto& g : all_test_groups()) {
    for (int it = 0; it < 10000; ++it) {
      const UnitQuat a = sample_uniform_rot(rng);
      const UnitQuat b = sample_uniform_rot(rng);
      const UnitQuat c = sample_uniform_rot(rng);
      CHECK(dist_quotient(a, c, g) <= dist_quotient(a, b, g) + dist_quotient(b, c, g) + 1e-9);
    }
  }
}

TEST_CASE("trivial group reduces to the plain metric") {
  const auto c1 = build_group(GroupKind::Cn, 1);
  Philox rng(33);
  for (int it = 0; it < 10000; ++it) {
    const UnitQuat s = sample_uniform_rot(rng);
    const UnitQuat r = sample_uniform_rot(rng);
    CHECK(std::abs(dist_quotient(s, r, c1) - dist_quat(s, r)) < 1e-12);
  }
}

TEST_CASE("closed-form bounds") {
  CHECK(bound_for_group(build_group(GroupKind::Dn, 2)).value == doctest::Approx(2 * kPi / 3));
  CHECK(bound_for_group(build_group(GroupKind::T)).value == doctest::Approx(kPi / 2));
  const auto bi = bound_for_group(build_group(GroupKind::I));
  CHECK(bi.value == doctest::Approx(std::acos((3 * std::sqrt(5.0) - 1) / 8)));
  CHECK(std::abs(bi.value - 0.7764) < 2e-4);
  CHECK(!bi.conjectured);
  CHECK(bound_for_group(build_group(GroupKind::Cn, 3)).conjectured);
  CHECK(!bound_for_group(build_group(GroupKind::Cn, 4)).conjectured);
  CHECK(bound_for_group(build_group(GroupKind::Cn, 4)).value == doctest::Approx(kPi));
}

TEST_CASE("bound certification matches closed forms") {
  for (const auto& g : all_test_groups()) {
    if (g.kind == GroupKind::Cn) continue;
    CAPTURE(g.name());
    const auto cert = certify_bound(g);
    const auto bound = bound_for_group(g);
    CHECK(std::abs(cert.achieved - bound.value) < 1e-9);
  }
  // tabulated worst-case relative quaternions
  const auto cert_t = certify_bound(build_group(GroupKind::T));
  CHECK(cert_t.u.w() == doctest::Approx(std::sqrt(0.5)));
  CHECK(cert_t.u.x() == doctest::Approx(std::sqrt(0.5)));
  CHECK(cert_t.achieved == doctest::Approx(kPi / 2));

  const auto cert_o = certify_bound(build_group(GroupKind::O));
  CHECK(cert_o.u.w() == doctest::Approx((2 + std::sqrt(2.0)) / 4));
  CHECK(cert_o.u.x() == doctest::Approx(std::sqrt(2.0) / 4));
  CHECK(cert_o.u.y() == doctest::Approx(std::sqrt(2.0) / 4));
  CHECK(cert_o.u.z() == doctest::Approx((2 - std::sqrt(2.0)) / 4));

  const auto cert_d2 = certify_bound(build_group(GroupKind::Dn, 2));
  CHECK(cert_d2.achieved == doctest::Approx(2 * kPi / 3));

  const auto cert_c2 = certify_bound(build_group(GroupKind::Cn, 2));
  CHECK(cert_c2.achieved == doctest::Approx(kPi));
}

TEST_CASE("coset_equal") {
  const auto d2 = build_group(GroupKind::Dn, 2);
  Philox rng(34);
  const Mat3 r = quat_to_rot(sample_uniform_rot(rng));
  CHECK(coset_equal(r, r, d2));
  CHECK(coset_equal(Mat3{}, rot_x(kPi), d2));
  CHECK(!coset_equal(Mat3{}, rot_x(kPi / 2), d2));
}

TEST_SUITE_END();
