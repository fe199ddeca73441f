#pragma once

#include "rotkit/so3.hpp"

namespace rotkit {

enum class EulerOrder { XYZ, XZY };

// Extrinsic Euler angles. Intentionally unconstrained: the decoded rotation is
// always valid, the angles themselves are multi-valued.
struct EulerAngles {
  double alpha = 0, beta = 0, gamma = 0;
  EulerOrder order = EulerOrder::XYZ;
};

// Q_xyz / Q_xzy: product of the three elemental rotation quaternions.
UnitQuat euler_to_quat(const EulerAngles& e);

// Defined as quat_to_rot(euler_to_quat(e)); this composition is the one
// source of truth for both orders.
Mat3 euler_to_rot(const EulerAngles& e);

enum class Atan2Branch { Left, Right };  // principal value (-pi, pi] vs [0, 2*pi)

AngleRad atan2_branch(double y, double x, Atan2Branch branch);

// The two continuous SO(2) angle readers whose wrong regions do not overlap.
AngleRad angle_branch_2d(double a, double b, int branch);  // matrix (a, -b; b, a), branch 1|2

// Piecewise-linear bump: 0 outside (a1, a4), 1 on [a2, a3], linear between.
struct TrapezoidWindow {
  double a1, a2, a3, a4;
  double operator()(double x) const;
};

extern const TrapezoidWindow kWinAlphaLeft;   // around alpha in (-pi, pi]
extern const TrapezoidWindow kWinAlphaRight;  // around alpha in [0, 2*pi)
extern const TrapezoidWindow kWinBeta;
extern const TrapezoidWindow kWinGammaLeft;
extern const TrapezoidWindow kWinGammaRight;

struct EulerBranchEval {
  EulerAngles angles;  // raw angles scaled by the weight (the branch output)
  double weight = 0;   // product of the three window values, in [0, 1]
};

// Branch i of the mixed four-branch Euler ensemble; i in 1..4. Branches 1-2
// read x-y-z angles, 3-4 read x-z-y angles. Each is continuous on all of
// SO(3); where weight == 1 the (unscaled) angles decode back to m.
EulerBranchEval euler_branch(int i, const Mat3& m);

// Unweighted extraction behind euler_branch, exposed for the selection rule.
EulerAngles euler_branch_angles(int i, const Mat3& m);

struct EulerSelection {
  int index = 1;
  EulerAngles angles;  // decode to m within 1e-7
};

// Region table lookup: picks a branch guaranteed to be exact for m, ties
// broken toward the lowest index.
EulerSelection euler_select(const Mat3& m);

}  // namespace rotkit
