#include "rotkit/ensemble.hpp"

#include <cmath>
#include <stdexcept>

namespace rotkit {

namespace {

// Case analysis on the selected component s = q[i]; the other three
// components are doubled products 2*s*q[j]. Continuous at s = +-1/2 (both
// case formulas agree there) and even under q -> -q.
Quat branch_raw(int idx, const Quat& q) {
  const double s = q[idx];
  if (s >= 0.5 || s < -0.5) {
    return s >= 0.5 ? q : -q;
  }
  Quat r;
  const double lead = (s >= 0.0) ? 1.0 - s : 1.0 + s;
  for (int j = 0; j < 4; ++j) {
    const double qj = q[j];
    const double v = 2.0 * s * qj;
    if (j == 0) r.w = v;
    if (j == 1) r.x = v;
    if (j == 2) r.y = v;
    if (j == 3) r.z = v;
  }
  if (idx == 0) r.w = lead;
  if (idx == 1) r.x = lead;
  if (idx == 2) r.y = lead;
  if (idx == 3) r.z = lead;
  return r;
}

}  // namespace

UnitQuat quat_branch_from_quat(int i, const UnitQuat& q) {
  if (i < 1 || i > 4) throw std::invalid_argument("quat_branch: index must be in 1..4");
  // Inside the middle cases the norm is at least 1/2, so normalization is safe.
  return UnitQuat::normalized(branch_raw(i - 1, q.q));
}

UnitQuat quat_branch(int i, const Mat3& r) {
  return quat_branch_from_quat(i, rot_to_quat_canonical(r));
}

bool quat_region(int i, const Mat3& r) {
  if (i < 1 || i > 4) throw std::invalid_argument("quat_region: index must be in 1..4");
  const UnitQuat q = rot_to_quat_canonical(r);
  return std::abs(q[i - 1]) >= 0.5;
}

EnsembleResult analytic_ensemble_convert(const Mat3& r) {
  const UnitQuat q = rot_to_quat_canonical(r);
  EnsembleResult res;
  res.selected = 0;
  for (int i = 1; i <= 4; ++i) {
    BranchReport& rep = res.reports[i - 1];
    rep.index = i;
    rep.output = quat_branch_from_quat(i, q);
    rep.in_region = std::abs(q[i - 1]) >= 0.5;
    rep.error = dist_rot(r, quat_to_rot(rep.output));
    if (rep.in_region && res.selected == 0) {
      res.selected = i;
      res.output = rep.output;
    }
  }
  return res;
}

}  // namespace rotkit
