#include "rotkit/so4.hpp"

#include <cmath>
#include <stdexcept>

#include "rotkit/ensemble.hpp"

namespace rotkit {

Mat4 Mat4::operator*(const Mat4& o) const {
  Mat4 r;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double s = 0;
      for (int k = 0; k < 4; ++k) s += (*this)(i, k) * o(k, j);
      r(i, j) = s;
    }
  return r;
}

Mat4 Mat4::transposed() const {
  Mat4 r;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r(i, j) = (*this)(j, i);
  return r;
}

bool is_rotation4(const Mat4& a, double tol) {
  const Mat4 ata = a.transposed() * a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double want = i == j ? 1.0 : 0.0;
      if (std::abs(ata(i, j) - want) > tol) return false;
    }
  // det via cofactor expansion on the first row
  double det = 0;
  for (int c = 0; c < 4; ++c) {
    double sub[9];
    int k = 0;
    for (int i = 1; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (j != c) sub[k++] = a(i, j);
    const double d3 = sub[0] * (sub[4] * sub[8] - sub[5] * sub[7]) -
                      sub[1] * (sub[3] * sub[8] - sub[5] * sub[6]) +
                      sub[2] * (sub[3] * sub[7] - sub[4] * sub[6]);
    det += ((c % 2) ? -1.0 : 1.0) * a(0, c) * d3;
  }
  return std::abs(det - 1.0) <= tol;
}

Mat4 associate_matrix(const Mat4& a) {
  const auto e = [&a](int r, int c) { return a(r - 1, c - 1); };
  Mat4 m;
  m(0, 0) = e(1, 1) + e(2, 2) + e(3, 3) + e(4, 4);
  m(0, 1) = e(2, 1) - e(1, 2) - e(4, 3) + e(3, 4);
  m(0, 2) = e(3, 1) + e(4, 2) - e(1, 3) - e(2, 4);
  m(0, 3) = e(4, 1) - e(3, 2) + e(2, 3) - e(1, 4);
  m(1, 0) = e(2, 1) - e(1, 2) + e(4, 3) - e(3, 4);
  m(1, 1) = -e(1, 1) - e(2, 2) + e(3, 3) + e(4, 4);
  m(1, 2) = e(4, 1) - e(3, 2) - e(2, 3) + e(1, 4);
  m(1, 3) = -e(3, 1) - e(4, 2) - e(1, 3) - e(2, 4);
  m(2, 0) = e(3, 1) - e(4, 2) - e(1, 3) + e(2, 4);
  m(2, 1) = -e(4, 1) - e(3, 2) - e(2, 3) - e(1, 4);
  m(2, 2) = -e(1, 1) + e(2, 2) - e(3, 3) + e(4, 4);
  m(2, 3) = e(2, 1) + e(1, 2) - e(4, 3) - e(3, 4);
  m(3, 0) = e(4, 1) + e(3, 2) - e(2, 3) - e(1, 4);
  m(3, 1) = e(3, 1) - e(4, 2) + e(1, 3) - e(2, 4);
  m(3, 2) = -e(2, 1) - e(1, 2) - e(4, 3) - e(3, 4);
  m(3, 3) = -e(1, 1) + e(2, 2) + e(3, 3) - e(4, 4);
  for (double& v : m.m) v *= 0.25;
  return m;
}

Mat4 rqq(const QuatPair& p) {
  const double a = p.l.w(), b = p.l.x(), c = p.l.y(), d = p.l.z();
  const double e = p.r.w(), f = p.r.x(), g = p.r.y(), h = p.r.z();
  Mat4 al, ar;
  al.m = {a, -b, -c, -d,
          b, a, -d, c,
          c, d, a, -b,
          d, -c, b, a};
  ar.m = {e, -f, -g, -h,
          f, e, h, -g,
          g, -h, e, f,
          h, g, -f, e};
  return al * ar;
}

QuatPair decompose_rot4(const Mat4& a) {
  const Mat4 m = associate_matrix(a);

  // Rank-1 unit factorization: the largest row fixes the right factor
  // direction, M v recovers the left factor.
  int best_row = 0;
  double best_norm2 = -1;
  double fro2 = 0;
  for (int i = 0; i < 4; ++i) {
    double n2 = 0;
    for (int j = 0; j < 4; ++j) n2 += m(i, j) * m(i, j);
    fro2 += n2;
    if (n2 > best_norm2) {
      best_norm2 = n2;
      best_row = i;
    }
  }
  if (std::abs(fro2 - 1.0) > 1e-6)
    throw std::invalid_argument("decompose_rot4: associate matrix is not unit norm");

  double v[4];
  const double rn = std::sqrt(best_norm2);
  for (int j = 0; j < 4; ++j) v[j] = m(best_row, j) / rn;
  double u[4];
  for (int i = 0; i < 4; ++i) {
    double s = 0;
    for (int j = 0; j < 4; ++j) s += m(i, j) * v[j];
    u[i] = s;
  }
  const double un = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2] + u[3] * u[3]);
  if (std::abs(un - 1.0) > 1e-6)
    throw std::invalid_argument("decompose_rot4: left factor is not unit norm");
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (std::abs(m(i, j) - u[i] * v[j]) > 1e-6)
        throw std::invalid_argument("decompose_rot4: associate matrix is not rank 1");

  int big = 0;
  for (int k = 1; k < 4; ++k)
    if (std::abs(u[k]) > std::abs(u[big])) big = k;
  if (u[big] < 0) {
    for (int k = 0; k < 4; ++k) {
      u[k] = -u[k];
      v[k] = -v[k];
    }
  }
  QuatPair p;
  p.l = UnitQuat::normalized({u[0], u[1], u[2], u[3]});
  p.r = UnitQuat::normalized({v[0], v[1], v[2], v[3]});
  return p;
}

AngleRad dist4_pairs(const QuatPair& p1, const QuatPair& p2) {
  const double dl = geodesic_quat(p1.l, p2.l);
  const double dr = geodesic_quat(p1.r, p2.r);
  return std::min(dl + dr, 2 * kPi - dl - dr) + std::abs(dl - dr);
}

Angles4 rotation_angles4(const Mat4& a) {
  const QuatPair p = decompose_rot4(a);
  const double dl = std::acos(clamp_unit(p.l.w()));
  const double dr = std::acos(clamp_unit(p.r.w()));
  Angles4 out;
  out.theta = std::min(dl + dr, 2 * kPi - dl - dr);
  out.phi = std::abs(dl - dr);
  return out;
}

QuatPair thm13_map(const QuatPair& p) { return {UnitQuat(1, 0, 0, 0), p.l * p.r}; }

QuatPair thm14_branch(int i, const QuatPair& p) {
  // (f_i(qL), conj(f_i(qL)) qL qR) with f_i the analytic quaternion branch.
  const UnitQuat fl = quat_branch_from_quat(i, p.l);
  return {fl, fl.conj() * p.l * p.r};
}

bool region_mask4(int i, const QuatPair& p) {
  if (i < 1 || i > 4) throw std::invalid_argument("region_mask4: index must be in 1..4");
  return std::abs(p.l[i - 1]) >= 0.5;
}

QuatPair sample_uniform_rot4(Philox& rng) {
  QuatPair p;
  p.l = sample_uniform_rot(rng);
  p.r = sample_uniform_rot(rng);
  return p;
}

}  // namespace rotkit
