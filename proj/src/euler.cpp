#include "rotkit/euler.hpp"

#include <cmath>
#include <stdexcept>

namespace rotkit {

namespace {

constexpr double kGimbalTol = 1e-9;

Quat elem_x(double a) { return {std::cos(a / 2), std::sin(a / 2), 0, 0}; }
Quat elem_y(double a) { return {std::cos(a / 2), 0, std::sin(a / 2), 0}; }
Quat elem_z(double a) { return {std::cos(a / 2), 0, 0, std::sin(a / 2)}; }

}  // namespace

UnitQuat euler_to_quat(const EulerAngles& e) {
  Quat q;
  if (e.order == EulerOrder::XYZ) {
    q = elem_z(e.gamma) * elem_y(e.beta) * elem_x(e.alpha);
  } else {
    q = elem_y(e.gamma) * elem_z(e.beta) * elem_x(e.alpha);
  }
  return UnitQuat::normalized(q);
}

Mat3 euler_to_rot(const EulerAngles& e) { return quat_to_rot(euler_to_quat(e)); }

AngleRad atan2_branch(double y, double x, Atan2Branch branch) {
  if (x == 0.0 && y == 0.0) throw std::invalid_argument("atan2_branch: (0, 0) has no angle");
  double a = std::atan2(y, x);
  if (branch == Atan2Branch::Left) {
    if (a == -kPi) a = kPi;  // principal value (-pi, pi]
    return a;
  }
  if (a < 0) a += 2 * kPi;  // principal value [0, 2*pi)
  return a;
}

AngleRad angle_branch_2d(double a, double b, int branch) {
  if (branch == 1) {
    if (a < -0.5) return 2 * kPi - 2 * atan2_branch(b, a, Atan2Branch::Right);
    return atan2_branch(b, a, Atan2Branch::Left);
  }
  if (branch == 2) {
    if (a <= 0.5) return atan2_branch(b, a, Atan2Branch::Right);
    return kPi - 2 * atan2_branch(b, a, Atan2Branch::Left);
  }
  throw std::invalid_argument("angle_branch_2d: branch must be 1 or 2");
}

double TrapezoidWindow::operator()(double x) const {
  if (x <= a1 || x >= a4) return 0.0;
  if (x <= a2) return (x - a1) / (a2 - a1);
  if (x <= a3) return 1.0;
  return (a4 - x) / (a4 - a3);
}

const TrapezoidWindow kWinAlphaLeft{-2 * kPi / 3, -kPi / 2, kPi / 2, 2 * kPi / 3};
const TrapezoidWindow kWinAlphaRight{kPi / 3, kPi / 2, 3 * kPi / 2, 5 * kPi / 3};
const TrapezoidWindow kWinBeta{-kPi / 3, -kPi / 4, kPi / 4, kPi / 3};
const TrapezoidWindow kWinGammaLeft{-5 * kPi / 6, -3 * kPi / 4, 3 * kPi / 4, 5 * kPi / 6};
const TrapezoidWindow kWinGammaRight{kPi / 6, kPi / 4, 7 * kPi / 4, 11 * kPi / 6};

// Extraction formulas. The x-z-y ones are re-derived from the normative
// composition Ry(gamma) Rz(beta) Rx(alpha), which gives M31 = -sin(gamma)
// cos(beta); hence gamma reads atan2(-M31, M11).
EulerAngles euler_branch_angles(int i, const Mat3& m) {
  EulerAngles e;
  if (i == 1 || i == 2) {
    e.order = EulerOrder::XYZ;
    const bool gimbal = std::abs(std::abs(m(2, 0)) - 1.0) <= kGimbalTol;
    e.beta = -std::asin(clamp_unit(m(2, 0)));
    if (gimbal) {
      e.alpha = (i == 1) ? kPi : 0.0;
      e.gamma = kPi;
    } else {
      const Atan2Branch ab = (i == 1) ? Atan2Branch::Left : Atan2Branch::Right;
      e.alpha = atan2_branch(m(2, 1), m(2, 2), ab);
      e.gamma = atan2_branch(m(1, 0), m(0, 0), Atan2Branch::Left);
    }
  } else if (i == 3 || i == 4) {
    e.order = EulerOrder::XZY;
    const bool gimbal = std::abs(std::abs(m(1, 0)) - 1.0) <= kGimbalTol;
    e.beta = std::asin(clamp_unit(m(1, 0)));
    if (gimbal) {
      e.alpha = (i == 3) ? kPi : 0.0;
      e.gamma = 0.0;
    } else {
      const Atan2Branch ab = (i == 3) ? Atan2Branch::Left : Atan2Branch::Right;
      e.alpha = atan2_branch(-m(1, 2), m(1, 1), ab);
      e.gamma = atan2_branch(-m(2, 0), m(0, 0), Atan2Branch::Right);
    }
  } else {
    throw std::invalid_argument("euler_branch: index must be in 1..4");
  }
  return e;
}

EulerBranchEval euler_branch(int i, const Mat3& m) {
  const EulerAngles raw = euler_branch_angles(i, m);
  const TrapezoidWindow& wa = (i == 1 || i == 3) ? kWinAlphaLeft : kWinAlphaRight;
  const TrapezoidWindow& wg = (i <= 2) ? kWinGammaLeft : kWinGammaRight;
  const double t = wa(raw.alpha) * kWinBeta(raw.beta) * wg(raw.gamma);
  EulerBranchEval out;
  out.weight = t;
  out.angles = {raw.alpha * t, raw.beta * t, raw.gamma * t, raw.order};
  return out;
}

EulerSelection euler_select(const Mat3& m) {
  // Row maxima decide the family, the sign of the remaining diagonal entry
  // decides the atan2 flavor. Ties resolve toward the lowest index.
  const double xyz_score = std::max(m(0, 0), std::abs(m(1, 0)));
  const double xzy_score = std::max(-m(0, 0), std::abs(m(2, 0)));
  EulerSelection sel;
  if (xyz_score >= xzy_score) {
    sel.index = (m(2, 2) >= 0) ? 1 : 2;
  } else {
    sel.index = (m(1, 1) >= 0) ? 3 : 4;
  }
  sel.angles = euler_branch_angles(sel.index, m);
  return sel;
}

}  // namespace rotkit
