#include "rotkit/so3.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rotkit {

UnitQuat::UnitQuat(const Quat& raw) : q(raw) {
  if (std::abs(raw.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("UnitQuat: input is not unit length");
}

UnitQuat UnitQuat::normalized(const Quat& raw) {
  const double n = raw.norm();
  if (n < 1e-12) throw std::invalid_argument("UnitQuat: cannot normalize near-zero quaternion");
  UnitQuat u;
  u.q = raw * (1.0 / n);
  return u;
}

UnitQuat UnitQuat::operator-() const {
  UnitQuat r;
  r.q = -q;
  return r;
}

UnitQuat UnitQuat::operator*(const UnitQuat& o) const {
  UnitQuat r;
  r.q = q * o.q;
  return r;
}

UnitQuat UnitQuat::conj() const {
  UnitQuat r;
  r.q = q.conj();
  return r;
}

Mat3 Mat3::operator*(const Mat3& o) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
      r(i, j) = s;
    }
  return r;
}

Mat3 Mat3::transposed() const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
  return r;
}

std::array<double, 3> Mat3::apply(const std::array<double, 3>& v) const {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
          m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

bool is_rotation(const Mat3& m, double tol) {
  const Mat3 mtm = m.transposed() * m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double want = i == j ? 1.0 : 0.0;
      if (std::abs(mtm(i, j) - want) > tol) return false;
    }
  const double det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
                     m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
                     m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  return std::abs(det - 1.0) <= tol;
}

Mat3 quat_to_rot(const UnitQuat& u) {
  const double w = u.w(), x = u.x(), y = u.y(), z = u.z();
  Mat3 r;
  r(0, 0) = 1 - 2 * y * y - 2 * z * z;
  r(0, 1) = 2 * (x * y - z * w);
  r(0, 2) = 2 * (x * z + y * w);
  r(1, 0) = 2 * (x * y + z * w);
  r(1, 1) = 1 - 2 * x * x - 2 * z * z;
  r(1, 2) = 2 * (y * z - x * w);
  r(2, 0) = 2 * (x * z - y * w);
  r(2, 1) = 2 * (y * z + x * w);
  r(2, 2) = 1 - 2 * x * x - 2 * y * y;
  return r;
}

UnitQuat rot_to_quat_canonical(const Mat3& m) {
  if (!is_rotation(m, 1e-7)) throw std::invalid_argument("rot_to_quat_canonical: not a rotation");
  const double tr = m.trace();
  Quat q;
  if (tr > -1.0 + 1e-11) {
    // Trace branch; t >= ~3e-6 here so the divisions stay well conditioned.
    const double t = std::sqrt(1.0 + tr);
    q = {t / 2, (m(2, 1) - m(1, 2)) / (2 * t), (m(0, 2) - m(2, 0)) / (2 * t),
         (m(1, 0) - m(0, 1)) / (2 * t)};
  } else {
    // Largest-diagonal fallback near half-turn rotations.
    int i = 0;
    if (m(1, 1) > m(0, 0)) i = 1;
    if (m(2, 2) > m(i, i)) i = 2;
    if (i == 0) {
      const double t = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
      q = {(m(2, 1) - m(1, 2)) / (2 * t), t / 2, (m(0, 1) + m(1, 0)) / (2 * t),
           (m(0, 2) + m(2, 0)) / (2 * t)};
    } else if (i == 1) {
      const double t = std::sqrt(1.0 - m(0, 0) + m(1, 1) - m(2, 2));
      q = {(m(0, 2) - m(2, 0)) / (2 * t), (m(0, 1) + m(1, 0)) / (2 * t), t / 2,
           (m(1, 2) + m(2, 1)) / (2 * t)};
    } else {
      const double t = std::sqrt(1.0 - m(0, 0) - m(1, 1) + m(2, 2));
      q = {(m(1, 0) - m(0, 1)) / (2 * t), (m(0, 2) + m(2, 0)) / (2 * t),
           (m(1, 2) + m(2, 1)) / (2 * t), t / 2};
    }
    // Deterministic sign: largest-magnitude component positive.
    int big = 0;
    for (int k = 1; k < 4; ++k)
      if (std::abs(q[k]) > std::abs(q[big])) big = k;
    if (q[big] < 0) q = -q;
  }
  return UnitQuat::normalized(q);
}

AngleRad dist_rot(const Mat3& r1, const Mat3& r2) {
  // tr(R2 R1^T) without forming the product.
  double tr = 0;
  for (int i = 0; i < 9; ++i) tr += r2.m[i] * r1.m[i];
  return std::acos(clamp_unit((tr - 1.0) / 2.0));
}

AngleRad dist_rot_stable(const Mat3& r1, const Mat3& r2) {
  double fro2 = 0;
  for (int i = 0; i < 9; ++i) {
    const double d = r1.m[i] - r2.m[i];
    fro2 += d * d;
  }
  const double x = std::sqrt(fro2) / (2.0 * std::sqrt(2.0));
  if (x < 0.70) return 2.0 * std::asin(x);  // small/medium angles
  return dist_rot(r1, r2);                  // near pi the trace form conditions better
}

AngleRad dist_quat(const UnitQuat& p, const UnitQuat& q) {
  return 2.0 * std::acos(clamp_unit(std::abs(p.dot(q))));
}

AngleRad geodesic_quat(const UnitQuat& p, const UnitQuat& q) {
  return std::acos(clamp_unit(p.dot(q)));
}

Mat3 zrot_path(double t) { return rot_z(2.0 * kPi * t); }

UnitQuat zrot_lift(double t) {
  UnitQuat u;
  u.q = {std::cos(kPi * t), 0.0, 0.0, std::sin(kPi * t)};
  return u;
}

std::optional<Witness> witness_search(const std::function<UnitQuat(const Mat3&)>& f, double tol) {
  constexpr int kGrid = 4096;
  const auto v = [&f](double t) { return zrot_lift(t).q.dot(f(zrot_path(t)).q); };

  const auto finish = [&](double t0) -> std::optional<Witness> {
    const AngleRad err = dist_quat(zrot_lift(t0), f(zrot_path(t0)));
    if (err < kPi - tol) return std::nullopt;  // f was not continuous here
    return Witness{t0, err};
  };

  double prev_t = 0.0;
  double prev_v = v(0.0);
  if (prev_v == 0.0) return finish(0.0);
  for (int i = 1; i <= kGrid; ++i) {
    const double t = static_cast<double>(i) / kGrid;
    const double vt = v(t);
    if (vt == 0.0) return finish(t);
    if ((prev_v < 0) != (vt < 0)) {
      double lo = prev_t, hi = t, vlo = prev_v;
      for (int b = 0; b < 60; ++b) {
        const double mid = 0.5 * (lo + hi);
        const double vm = v(mid);
        if (vm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((vlo < 0) != (vm < 0)) {
          hi = mid;
        } else {
          lo = mid;
          vlo = vm;
        }
      }
      return finish(0.5 * (lo + hi));
    }
    prev_t = t;
    prev_v = vt;
  }
  return std::nullopt;  // no sign change at this resolution
}

UnitQuat sample_uniform_rot(Philox& rng) {
  for (;;) {
    const Quat q{rng.next_gauss(), rng.next_gauss(), rng.next_gauss(), rng.next_gauss()};
    const double n = q.norm();
    if (n >= 1e-6) return UnitQuat::normalized(q);
  }
}

UnitQuat sample_naive_axis_angle(Philox& rng) {
  double ax, ay, az, n;
  do {
    ax = rng.next_gauss();
    ay = rng.next_gauss();
    az = rng.next_gauss();
    n = std::sqrt(ax * ax + ay * ay + az * az);
  } while (n < 1e-6);
  const double angle = kPi * rng.next_double();
  const double s = std::sin(angle / 2) / n;
  return UnitQuat::normalized({std::cos(angle / 2), ax * s, ay * s, az * s});
}

AngleRad rotation_angle(const UnitQuat& q) { return 2.0 * std::acos(clamp_unit(std::abs(q.w()))); }

Mat3 rot_x(double a) {
  Mat3 r;
  const double c = std::cos(a), s = std::sin(a);
  r.m = {1, 0, 0, 0, c, -s, 0, s, c};
  return r;
}

Mat3 rot_y(double a) {
  Mat3 r;
  const double c = std::cos(a), s = std::sin(a);
  r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
  return r;
}

Mat3 rot_z(double a) {
  Mat3 r;
  const double c = std::cos(a), s = std::sin(a);
  r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
  return r;
}

}  // namespace rotkit
