#pragma once

#include <array>

#include "rotkit/so3.hpp"

namespace rotkit {

// Branch i of the analytic four-branch quaternion ensemble; i in 1..4.
// Continuous in R, well-defined on SO(3) (computing from q or -q agrees
// exactly), and exact wherever component i of the quaternion has magnitude
// at least 1/2.
UnitQuat quat_branch(int i, const Mat3& r);

// Same, starting from a quaternion section of R.
UnitQuat quat_branch_from_quat(int i, const UnitQuat& q);

// True iff |component_i(canonical quaternion of r)| >= 1/2. At least one
// index is in-region for every rotation, since max component^2 >= 1/4.
bool quat_region(int i, const Mat3& r);

struct BranchReport {
  int index = 0;
  UnitQuat output;
  bool in_region = false;
  AngleRad error = 0;  // dist_rot(r, decode(output))
};

struct EnsembleResult {
  UnitQuat output;  // lowest-index in-region branch
  int selected = 0;
  std::array<BranchReport, 4> reports;
};

// Self-selecting conversion: evaluates all four branches and returns the
// lowest-index in-region one. Total on SO(3).
EnsembleResult analytic_ensemble_convert(const Mat3& r);

}  // namespace rotkit
