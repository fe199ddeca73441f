#include "rotkit/symmetry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rotkit {

namespace {

void push(std::vector<UnitQuat>& v, double w, double x, double y, double z) {
  v.push_back(UnitQuat::normalized({w, x, y, z}));
}

// All single-position placements of +-1 (the unit axes of R^4).
void push_axis_units(std::vector<UnitQuat>& v) {
  for (int p = 0; p < 4; ++p)
    for (int s = -1; s <= 1; s += 2) {
      double c[4] = {0, 0, 0, 0};
      c[p] = s;
      push(v, c[0], c[1], c[2], c[3]);
    }
}

void push_half_units(std::vector<UnitQuat>& v) {
  for (int mask = 0; mask < 16; ++mask)
    push(v, (mask & 1) ? -0.5 : 0.5, (mask & 2) ? -0.5 : 0.5, (mask & 4) ? -0.5 : 0.5,
         (mask & 8) ? -0.5 : 0.5);
}

bool perm_is_even(const std::array<int, 4>& p) {
  int inv = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (p[i] > p[j]) ++inv;
  return (inv % 2) == 0;
}

}  // namespace

std::string FiniteRotationGroup::name() const {
  switch (kind) {
    case GroupKind::Cn: return "C" + std::to_string(n);
    case GroupKind::Dn: return "D" + std::to_string(n);
    case GroupKind::T: return "T";
    case GroupKind::O: return "O";
    case GroupKind::I: return "I";
  }
  return "?";
}

FiniteRotationGroup build_group(GroupKind kind, int n) {
  FiniteRotationGroup g;
  g.kind = kind;
  g.n = n;
  auto& e = g.elements;
  switch (kind) {
    case GroupKind::Cn:
    case GroupKind::Dn: {
      if (n < 1) throw std::invalid_argument("build_group: Cn/Dn require n >= 1");
      for (int k = 0; k < 2 * n; ++k)
        push(e, std::cos(k * kPi / n), 0, 0, std::sin(k * kPi / n));
      if (kind == GroupKind::Dn)
        for (int k = 0; k < 2 * n; ++k)
          push(e, 0, std::cos(k * kPi / n), std::sin(k * kPi / n), 0);
      break;
    }
    case GroupKind::T: {
      push_axis_units(e);
      push_half_units(e);
      break;
    }
    case GroupKind::O: {
      push_axis_units(e);
      push_half_units(e);
      const double s = std::sqrt(0.5);
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
          for (int si = -1; si <= 1; si += 2)
            for (int sj = -1; sj <= 1; sj += 2) {
              double c[4] = {0, 0, 0, 0};
              c[i] = si * s;
              c[j] = sj * s;
              push(e, c[0], c[1], c[2], c[3]);
            }
      break;
    }
    case GroupKind::I: {
      push_axis_units(e);
      push_half_units(e);
      const double vals[4] = {0.0, (std::sqrt(5.0) + 1.0) / 4.0, 0.5,
                              (std::sqrt(5.0) - 1.0) / 4.0};
      std::array<int, 4> p = {0, 1, 2, 3};
      do {
        if (!perm_is_even(p)) continue;
        for (int mask = 0; mask < 8; ++mask) {
          double c[4];
          int bit = 0;
          for (int k = 0; k < 4; ++k) {
            double v = vals[p[k]];
            if (v != 0.0) {
              if (mask & (1 << bit)) v = -v;
              ++bit;
            }
            c[k] = v;
          }
          push(e, c[0], c[1], c[2], c[3]);
        }
      } while (std::next_permutation(p.begin(), p.end()));
      break;
    }
  }
  return g;
}

AngleRad dist_quotient(const UnitQuat& s, const UnitQuat& r, const FiniteRotationGroup& g) {
  double best = -1.0;
  for (const UnitQuat& q : g.elements) {
    const double d = s.dot(r * q);
    if (d > best) best = d;
  }
  return 2.0 * std::acos(clamp_unit(best));
}

bool coset_equal(const Mat3& r1, const Mat3& r2, const FiniteRotationGroup& g) {
  return dist_quotient(rot_to_quat_canonical(r1), rot_to_quat_canonical(r2), g) <= 1e-7;
}

GroupBound bound_for_group(const FiniteRotationGroup& g) {
  switch (g.kind) {
    case GroupKind::Cn:
      return {kPi, g.n % 2 == 1 && g.n > 1};
    case GroupKind::Dn: {
      const double s = std::sin(kPi / (2.0 * g.n));
      return {std::acos(-s * s), false};
    }
    case GroupKind::T:
      return {kPi / 2, false};
    case GroupKind::O:
      return {std::acos((2.0 * std::sqrt(2.0) - 1.0) / 4.0), false};
    case GroupKind::I:
      return {std::acos((3.0 * std::sqrt(5.0) - 1.0) / 8.0), false};
  }
  return {0, false};
}

BoundCertificate certify_bound(const FiniteRotationGroup& g) {
  BoundCertificate cert;
  if (g.kind == GroupKind::Cn) {
    // Degenerate case: u . 1 = u . (-1) = u . (cos pi/n, 0, 0, sin pi/n) = 0
    // is solved by any (0, cos t, sin t, 0); take t = 0.
    cert.u = UnitQuat(0, 1, 0, 0);
  } else {
    std::array<Quat, 3> qs;
    const double cn = std::cos(kPi / std::max(g.n, 1));
    const double sn = std::sin(kPi / std::max(g.n, 1));
    const double r2 = std::sqrt(0.5);
    const double ip = (std::sqrt(5.0) + 1.0) / 4.0;  // golden ratio / 2
    const double im = (std::sqrt(5.0) - 1.0) / 4.0;
    switch (g.kind) {
      case GroupKind::Dn:
        qs = {Quat{cn, 0, 0, sn}, Quat{0, 1, 0, 0}, Quat{0, cn, sn, 0}};
        break;
      case GroupKind::T:
        qs = {Quat{0.5, 0.5, 0.5, 0.5}, Quat{0.5, 0.5, 0.5, -0.5}, Quat{0.5, 0.5, -0.5, 0.5}};
        break;
      case GroupKind::O:
        qs = {Quat{r2, r2, 0, 0}, Quat{r2, 0, r2, 0}, Quat{0.5, 0.5, 0.5, 0.5}};
        break;
      case GroupKind::I:
        qs = {Quat{ip, 0.5, 0, im}, Quat{ip, im, 0.5, 0}, Quat{ip, 0, im, 0.5}};
        break;
      default:
        break;
    }
    // u . 1 = u . q_i  <=>  (e_1 - q_i) . u = 0.
    Eigen::Matrix<double, 3, 4> rows;
    for (int i = 0; i < 3; ++i) {
      rows(i, 0) = 1.0 - qs[i].w;
      rows(i, 1) = -qs[i].x;
      rows(i, 2) = -qs[i].y;
      rows(i, 3) = -qs[i].z;
    }
    Eigen::FullPivLU<Eigen::Matrix<double, 3, 4>> lu(rows);
    lu.setThreshold(1e-9);
    const auto kernel = lu.kernel();
    if (kernel.cols() != 1)
      throw std::runtime_error("certify_bound: singular system for group " + g.name());
    Eigen::Vector4d u = kernel.col(0).normalized();
    int big = 0;
    for (int k = 1; k < 4; ++k)
      if (std::abs(u[k]) > std::abs(u[big])) big = k;
    if (u[big] < 0) u = -u;
    cert.u = UnitQuat::normalized({u[0], u[1], u[2], u[3]});
  }
  double best = -1.0;
  for (const UnitQuat& q : g.elements) best = std::max(best, cert.u.dot(q));
  cert.achieved = 2.0 * std::acos(clamp_unit(best));
  return cert;
}

}  // namespace rotkit
