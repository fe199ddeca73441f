#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>

#include "rotkit/rng.hpp"

namespace rotkit {

constexpr double kPi = 3.14159265358979323846;

inline double clamp_unit(double x) { return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x); }

// Quaternion w + xi + yj + zk, identified with the vector (w, x, y, z).
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  Quat() = default;
  Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  Quat operator*(const Quat& q) const {
    return {w * q.w - x * q.x - y * q.y - z * q.z,
            w * q.x + x * q.w + y * q.z - z * q.y,
            w * q.y - x * q.z + y * q.w + z * q.x,
            w * q.z + x * q.y - y * q.x + z * q.w};
  }
  Quat operator+(const Quat& q) const { return {w + q.w, x + q.x, y + q.y, z + q.z}; }
  Quat operator-() const { return {-w, -x, -y, -z}; }
  Quat operator*(double s) const { return {w * s, x * s, y * s, z * s}; }

  Quat conj() const { return {w, -x, -y, -z}; }
  double dot(const Quat& q) const { return w * q.w + x * q.x + y * q.y + z * q.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  double operator[](int i) const { return i == 0 ? w : (i == 1 ? x : (i == 2 ? y : z)); }
};

// Unit quaternion, a point on S^3. Construction checks the norm; use
// normalized() to project an arbitrary quaternion onto the sphere.
struct UnitQuat {
  Quat q;

  UnitQuat() = default;
  explicit UnitQuat(const Quat& raw);  // throws if | ||raw|| - 1 | > 1e-9
  UnitQuat(double w, double x, double y, double z) : UnitQuat(Quat{w, x, y, z}) {}

  static UnitQuat normalized(const Quat& raw);  // throws if ||raw|| < 1e-12

  double w() const { return q.w; }
  double x() const { return q.x; }
  double y() const { return q.y; }
  double z() const { return q.z; }
  double dot(const UnitQuat& o) const { return q.dot(o.q); }
  UnitQuat operator-() const;
  UnitQuat operator*(const UnitQuat& o) const;
  UnitQuat conj() const;
  double operator[](int i) const { return q[i]; }
};

// 3x3 rotation matrix, row-major.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double& operator()(int r, int c) { return m[r * 3 + c]; }
  double operator()(int r, int c) const { return m[r * 3 + c]; }
  double trace() const { return m[0] + m[4] + m[8]; }

  Mat3 operator*(const Mat3& o) const;
  Mat3 transposed() const;
  std::array<double, 3> apply(const std::array<double, 3>& v) const;
};

using AngleRad = double;

bool is_rotation(const Mat3& m, double tol = 1e-9);

// Covering map R_Q: S^3 -> SO(3). quat_to_rot(-q) == quat_to_rot(q) exactly.
Mat3 quat_to_rot(const UnitQuat& q);

// Canonical section of the covering map. Ties break toward w >= 0; traces at
// -1 (within 1e-11) fall back to the largest-diagonal branch with the sign
// fixed so the largest-magnitude component is positive.
UnitQuat rot_to_quat_canonical(const Mat3& m);

// Angle of the relative rotation, in [0, pi].
AngleRad dist_rot(const Mat3& r1, const Mat3& r2);

// Same angle through the Frobenius identity |R1-R2|_F^2 = 8 sin^2(theta/2).
// The trace form quantizes at ~6e-8 near zero; this form resolves tiny
// residuals down to round-off and is used wherever residuals are gated.
AngleRad dist_rot_stable(const Mat3& r1, const Mat3& r2);

// Rotation distance between the rotations represented by p and q:
// 2 acos |p . q|. Not a metric on S^3 itself.
AngleRad dist_quat(const UnitQuat& p, const UnitQuat& q);

// Geodesic distance on S^3: acos(p . q), in [0, pi].
AngleRad geodesic_quat(const UnitQuat& p, const UnitQuat& q);

// Loop around the z axis: r(t) is the rotation by angle 2*pi*t, r(0) = r(1) = I.
Mat3 zrot_path(double t);

// The lift of zrot_path through the covering map starting at identity:
// h(t) = (cos pi t, 0, 0, sin pi t). Ends at -1, exhibiting the double cover.
UnitQuat zrot_lift(double t);

struct Witness {
  double t0 = 0.0;       // parameter on the z loop
  AngleRad error = 0.0;  // dist between lift and f at the witness, ~pi
};

// Locates an input where a continuous rotation-to-quaternion map must be a
// half-turn wrong, by finding a sign change of v(t) = h(t) . f(r(t)) on the z
// loop (4096-point scan, 60 bisection steps). Returns nullopt if no sign
// change is found or the refined point does not reach pi - tol; a witness is
// never fabricated.
std::optional<Witness> witness_search(const std::function<UnitQuat(const Mat3&)>& f,
                                      double tol = 1e-3);

// Uniform (Haar) rotation: normalized 4D standard normal sample.
UnitQuat sample_uniform_rot(Philox& rng);

// Uniform axis on S^2 with angle uniform on [0, pi]. Deliberately biased;
// kept as the contrast case for the sampling demo.
UnitQuat sample_naive_axis_angle(Philox& rng);

// Rotation angle of the rotation represented by q: 2 acos |w|.
AngleRad rotation_angle(const UnitQuat& q);

Mat3 rot_x(double a);
Mat3 rot_y(double a);
Mat3 rot_z(double a);

}  // namespace rotkit
