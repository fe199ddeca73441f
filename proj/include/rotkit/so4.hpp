#pragma once

#include <array>

#include "rotkit/so3.hpp"

namespace rotkit {

// 4x4 matrix, row-major. Rotation-ness is checked where required, not imposed.
struct Mat4 {
  std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  double& operator()(int r, int c) { return m[r * 4 + c]; }
  double operator()(int r, int c) const { return m[r * 4 + c]; }
  Mat4 operator*(const Mat4& o) const;
  Mat4 transposed() const;
};

bool is_rotation4(const Mat4& a, double tol = 1e-9);

// Unit quaternion pair (qL, qR) acting by p -> qL p qR. Jointly negated pairs
// decode to the same rotation.
struct QuatPair {
  UnitQuat l, r;
};

// The linear functional of A whose rank-1 unit factorization recovers the
// quaternion pair; rank 1 and Frobenius norm 1 exactly when A is a rotation.
Mat4 associate_matrix(const Mat4& a);

// R_QQ: builds the rotation acting by p -> qL p qR.
Mat4 rqq(const QuatPair& p);

// Factorizes the associate matrix. Throws if the rank-1/unit-norm structure is
// violated beyond 1e-6. Sign is canonicalized so the largest-magnitude
// component of qL is positive.
QuatPair decompose_rot4(const Mat4& a);

// d_4 between the rotations of two pairs: |theta| + |phi| of the relative
// rotation, evaluated as min{dL+dR, 2pi-dL-dR} + |dL-dR| on geodesic
// distances of the two factors. Range [0, 2*pi].
AngleRad dist4_pairs(const QuatPair& p1, const QuatPair& p2);

// Invariant-plane rotation angles of A: theta in [0, pi], |phi| <= theta.
struct Angles4 {
  AngleRad theta = 0;
  AngleRad phi = 0;
};
Angles4 rotation_angles4(const Mat4& a);

// The continuous map (p, q) -> (1, p q); never further than pi from its input.
QuatPair thm13_map(const QuatPair& p);

// Branch i of the four-branch pair ensemble: (f_i(p), conj(f_i(p)) p q), with
// f_i the analytic quaternion branch. Exact whenever region_mask4(i, .) holds.
QuatPair thm14_branch(int i, const QuatPair& p);

// |component_i(qL)| >= 1/2; at least one index is true for every pair.
bool region_mask4(int i, const QuatPair& p);

QuatPair sample_uniform_rot4(Philox& rng);

}  // namespace rotkit
