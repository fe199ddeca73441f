#pragma once

#include <string>
#include <vector>

#include "rotkit/so3.hpp"

namespace rotkit {

enum class GroupKind { Cn, Dn, T, O, I };

// Finite subgroup G of SO(3), stored extensionally as its binary double cover
// in S^3 (2|G| unit quaternions, closed under negation). Cn/Dn are built about
// the z axis; conjugate the elements to reorient.
struct FiniteRotationGroup {
  GroupKind kind = GroupKind::Cn;
  int n = 1;  // meaningful for Cn/Dn only
  std::vector<UnitQuat> elements;

  int order() const { return static_cast<int>(elements.size()) / 2; }
  std::string name() const;
};

FiniteRotationGroup build_group(GroupKind kind, int n = 0);

// Quotient distance d_G: minimum rotation distance from s to the coset of r,
// realized as a brute-force minimum over the double cover.
AngleRad dist_quotient(const UnitQuat& s, const UnitQuat& r, const FiniteRotationGroup& g);

bool coset_equal(const Mat3& r1, const Mat3& r2, const FiniteRotationGroup& g);

struct GroupBound {
  AngleRad value = 0;
  bool conjectured = false;  // odd-n Cn: believed, not proven
};

// Closed-form lower bound on the worst-case error of any continuous section
// of SO(3)/G: Cn -> pi, Dn -> acos(-sin^2(pi/2n)), T -> pi/2,
// O -> acos((2*sqrt(2)-1)/4), I -> acos((3*sqrt(5)-1)/8).
GroupBound bound_for_group(const FiniteRotationGroup& g);

struct BoundCertificate {
  UnitQuat u;          // relative quaternion solving u.1 = u.q1 = u.q2 = u.q3
  AngleRad achieved;   // min over the double cover of 2*acos(u . g)
};

// Rebuilds the bound numerically from the tabulated q_i choices: solves the
// linear equations on the unit sphere and evaluates the quotient distance.
// Throws if the linear system is singular (would indicate a bad group table).
BoundCertificate certify_bound(const FiniteRotationGroup& g);

}  // namespace rotkit
