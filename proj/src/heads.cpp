#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "rotkit/euler.hpp"
#include "rotkit/nn.hpp"

namespace rotkit::nn {

namespace {

constexpr double kNormFloor = 1e-12;
constexpr double kDegenerate = 1e-6;

double norm3(const double* v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }
double norm4(const double* v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
}

void margin_min(double* m, double v) {
  if (m && v < *m) *m = v;
}

// --- 6D Gram-Schmidt decode with cache -------------------------------------

struct SixCache {
  double u[3], v[3];
  double nu = 0, nw = 0, d = 0;
  double uh[3], wh[3], c3[3];
};

// Returns false when degenerate (norms floored; caller decides to throw).
bool six_forward(const double* raw, SixCache& c, Mat3* s) {
  std::memcpy(c.u, raw, 3 * sizeof(double));
  std::memcpy(c.v, raw + 3, 3 * sizeof(double));
  c.nu = std::max(norm3(c.u), kNormFloor);
  bool ok = norm3(c.u) >= kDegenerate && norm3(c.v) >= kDegenerate;
  for (int k = 0; k < 3; ++k) c.uh[k] = c.u[k] / c.nu;
  c.d = c.uh[0] * c.v[0] + c.uh[1] * c.v[1] + c.uh[2] * c.v[2];
  double w[3];
  for (int k = 0; k < 3; ++k) w[k] = c.v[k] - c.d * c.uh[k];
  c.nw = std::max(norm3(w), kNormFloor);
  ok = ok && norm3(w) >= kDegenerate;
  for (int k = 0; k < 3; ++k) c.wh[k] = w[k] / c.nw;
  c.c3[0] = c.uh[1] * c.wh[2] - c.uh[2] * c.wh[1];
  c.c3[1] = c.uh[2] * c.wh[0] - c.uh[0] * c.wh[2];
  c.c3[2] = c.uh[0] * c.wh[1] - c.uh[1] * c.wh[0];
  if (s) {
    for (int k = 0; k < 3; ++k) {
      (*s)(k, 0) = c.uh[k];
      (*s)(k, 1) = c.wh[k];
      (*s)(k, 2) = c.c3[k];
    }
  }
  return ok;
}

// dS (3x3) -> draw (6), given the forward cache.
void six_backward(const SixCache& c, const Mat3& ds, double* draw) {
  double gc1[3], gc2[3], gc3[3];
  for (int k = 0; k < 3; ++k) {
    gc1[k] = ds(k, 0);
    gc2[k] = ds(k, 1);
    gc3[k] = ds(k, 2);
  }
  // c3 = uh x wh:  d(g . (a x b))/da = b x g,  d/db = g x a
  double guh[3], gwh[3];
  guh[0] = c.wh[1] * gc3[2] - c.wh[2] * gc3[1] + gc1[0];
  guh[1] = c.wh[2] * gc3[0] - c.wh[0] * gc3[2] + gc1[1];
  guh[2] = c.wh[0] * gc3[1] - c.wh[1] * gc3[0] + gc1[2];
  gwh[0] = gc3[1] * c.uh[2] - gc3[2] * c.uh[1] + gc2[0];
  gwh[1] = gc3[2] * c.uh[0] - gc3[0] * c.uh[2] + gc2[1];
  gwh[2] = gc3[0] * c.uh[1] - gc3[1] * c.uh[0] + gc2[2];
  // wh = w / |w|
  double gw[3];
  double dot = gwh[0] * c.wh[0] + gwh[1] * c.wh[1] + gwh[2] * c.wh[2];
  for (int k = 0; k < 3; ++k) gw[k] = (gwh[k] - dot * c.wh[k]) / c.nw;
  // w = v - (uh . v) uh
  double gv[3];
  const double uh_gw = c.uh[0] * gw[0] + c.uh[1] * gw[1] + c.uh[2] * gw[2];
  for (int k = 0; k < 3; ++k) {
    gv[k] = gw[k] - c.uh[k] * uh_gw;
    guh[k] += -c.v[k] * uh_gw - c.d * gw[k];
  }
  // uh = u / |u|
  dot = guh[0] * c.uh[0] + guh[1] * c.uh[1] + guh[2] * c.uh[2];
  for (int k = 0; k < 3; ++k) {
    draw[k] += (guh[k] - dot * c.uh[k]) / c.nu;
    draw[3 + k] += gv[k];
  }
}

// --- 5D -> 6D stereographic lift with cache ---------------------------------

struct FiveCache {
  double y[4];
  double denom = 0;   // |y|^2 + 1
  double wh[5];       // unit 5-vector
  double t = 0;       // 1 - wh1^2 - wh2^2 (floored)
  double s = 0;       // 1/sqrt(t)
};

void five_forward(const double* raw5, FiveCache& c, double* six) {
  std::memcpy(c.y, raw5 + 1, 4 * sizeof(double));
  const double n2 = c.y[0] * c.y[0] + c.y[1] * c.y[1] + c.y[2] * c.y[2] + c.y[3] * c.y[3];
  c.denom = n2 + 1.0;
  c.wh[0] = (n2 - 1.0) / c.denom;
  for (int j = 0; j < 4; ++j) c.wh[1 + j] = 2.0 * c.y[j] / c.denom;
  c.t = std::max(1.0 - c.wh[0] * c.wh[0] - c.wh[1] * c.wh[1], kNormFloor);
  c.s = 1.0 / std::sqrt(c.t);
  six[0] = raw5[0];
  for (int k = 0; k < 5; ++k) six[1 + k] = c.s * c.wh[k];
}

// dsix (6) -> draw5 (5)
void five_backward(const FiveCache& c, const double* dsix, double* draw5) {
  draw5[0] += dsix[0];
  const double* dw = dsix + 1;  // gradient wrt w = s * wh
  double gwh[5];
  double gs = 0;
  for (int k = 0; k < 5; ++k) {
    gs += c.wh[k] * dw[k];
    gwh[k] = c.s * dw[k];
  }
  // s = t^{-1/2}; t = 1 - wh0^2 - wh1^2
  const double gt = gs * (-0.5) * c.s * c.s * c.s;
  gwh[0] += gt * (-2.0 * c.wh[0]);
  gwh[1] += gt * (-2.0 * c.wh[1]);
  // wh(y): wh0 = (|y|^2-1)/denom, wh_{1+j} = 2 y_j / denom
  double sum_gy = 0;
  for (int j = 0; j < 4; ++j) sum_gy += gwh[1 + j] * c.y[j];
  for (int m = 0; m < 4; ++m) {
    double g = gwh[0] * 4.0 * c.y[m] / (c.denom * c.denom);
    g += 2.0 * gwh[1 + m] / c.denom;
    g += -4.0 * c.y[m] / (c.denom * c.denom) * sum_gy;
    draw5[1 + m] += g;
  }
}

// --- Euler decode (matrix composition, same composition as euler_to_rot) ----

Mat3 rot_x_d(double a) {
  Mat3 r;
  const double c = std::cos(a), s = std::sin(a);
  r.m = {0, 0, 0, 0, -s, -c, 0, c, -s};
  return r;
}
Mat3 rot_y_d(double a) {
  Mat3 r;
  const double c = std::cos(a), s = std::sin(a);
  r.m = {-s, 0, c, 0, 0, 0, -c, 0, -s};
  return r;
}
Mat3 rot_z_d(double a) {
  Mat3 r;
  const double c = std::cos(a), s = std::sin(a);
  r.m = {-s, -c, 0, c, -s, 0, 0, 0, 0};
  return r;
}

void euler_forward(HeadKind kind, const double* raw, Mat3* s, Mat3 dmats[3]) {
  const double alpha = raw[0], beta = raw[1], gamma = raw[2];
  if (kind == HeadKind::EulerXYZ) {
    const Mat3 rz = rot_z(gamma), ry = rot_y(beta), rx = rot_x(alpha);
    if (s) *s = rz * ry * rx;
    if (dmats) {
      dmats[0] = rz * ry * rot_x_d(alpha);
      dmats[1] = rz * rot_y_d(beta) * rx;
      dmats[2] = rot_z_d(gamma) * ry * rx;
    }
  } else {
    const Mat3 ry = rot_y(gamma), rz = rot_z(beta), rx = rot_x(alpha);
    if (s) *s = ry * rz * rx;
    if (dmats) {
      dmats[0] = ry * rz * rot_x_d(alpha);
      dmats[1] = ry * rot_z_d(beta) * rx;
      dmats[2] = rot_y_d(gamma) * rz * rx;
    }
  }
}

double mat_dot(const Mat3& a, const Mat3& b) {
  double s = 0;
  for (int i = 0; i < 9; ++i) s += a.m[i] * b.m[i];
  return s;
}

}  // namespace

int head_raw_dim(HeadKind kind) {
  switch (kind) {
    case HeadKind::Quat: return 4;
    case HeadKind::EulerXYZ: return 3;
    case HeadKind::EulerXZY: return 3;
    case HeadKind::SixD: return 6;
    case HeadKind::FiveD: return 5;
    case HeadKind::QuatPair: return 8;
  }
  return 0;
}

const char* head_kind_name(HeadKind kind) {
  switch (kind) {
    case HeadKind::Quat: return "quat";
    case HeadKind::EulerXYZ: return "euler-xyz";
    case HeadKind::EulerXZY: return "euler-xzy";
    case HeadKind::SixD: return "6d";
    case HeadKind::FiveD: return "5d";
    case HeadKind::QuatPair: return "quatpair";
  }
  return "?";
}

UnitQuat decode_head_quat(const double* raw) {
  const double n = norm4(raw);
  if (n < kDegenerate) throw std::domain_error("decode_head_quat: degenerate raw vector");
  return UnitQuat::normalized({raw[0], raw[1], raw[2], raw[3]});
}

std::array<double, 6> five_to_six(const double* raw5) {
  FiveCache c;
  std::array<double, 6> six;
  five_forward(raw5, c, six.data());
  return six;
}

Mat3 decode_head_rot(HeadKind kind, const double* raw) {
  switch (kind) {
    case HeadKind::EulerXYZ:
      return euler_to_rot({raw[0], raw[1], raw[2], EulerOrder::XYZ});
    case HeadKind::EulerXZY:
      return euler_to_rot({raw[0], raw[1], raw[2], EulerOrder::XZY});
    case HeadKind::SixD: {
      SixCache c;
      Mat3 s;
      if (!six_forward(raw, c, &s))
        throw std::domain_error("decode_head_rot: degenerate 6D raw vector");
      return s;
    }
    case HeadKind::FiveD: {
      const auto six = five_to_six(raw);
      SixCache c;
      Mat3 s;
      if (!six_forward(six.data(), c, &s))
        throw std::domain_error("decode_head_rot: degenerate 5D raw vector");
      return s;
    }
    default:
      throw std::invalid_argument("decode_head_rot: head does not decode to a rotation matrix");
  }
}

QuatPair decode_head_pair(const double* raw) {
  return {decode_head_quat(raw), decode_head_quat(raw + 4)};
}

std::array<double, 6> encode_six(const Mat3& m) {
  return {m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1)};
}

std::array<double, 5> encode_five(const Mat3& m) {
  const double w5[5] = {m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1)};
  const double n = std::sqrt(w5[0] * w5[0] + w5[1] * w5[1] + w5[2] * w5[2] + w5[3] * w5[3] +
                             w5[4] * w5[4]);
  double wh[5];
  for (int k = 0; k < 5; ++k) wh[k] = w5[k] / n;
  // stereographic projection from the pole along the first coordinate, which
  // the image never reaches (wh0^2 + wh1^2 <= 1/2 on rotations)
  std::array<double, 5> out;
  out[0] = m(0, 0);
  for (int j = 0; j < 4; ++j) out[1 + j] = wh[1 + j] / (1.0 - wh[0]);
  return out;
}

// --- penalties ---------------------------------------------------------------

namespace {

double quat_penalty_grad(const double* raw, double* draw) {
  const double n = std::max(norm4(raw), kNormFloor);
  const double ln = std::log(n);
  if (draw) {
    const double c = 2.0 * ln / (n * n);
    for (int k = 0; k < 4; ++k) draw[k] += c * raw[k];
  }
  return ln * ln;
}

double six_penalty_grad(const double* raw, double* draw) {
  const double* u = raw;
  const double* v = raw + 3;
  const double nu = std::max(norm3(u), kNormFloor);
  const double nv = std::max(norm3(v), kNormFloor);
  const double d = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  const double lu = std::log(nu), lv = std::log(nv);
  if (draw) {
    for (int k = 0; k < 3; ++k) {
      draw[k] += 2.0 * lu / (nu * nu) * u[k] + 2.0 * d * v[k];
      draw[3 + k] += 2.0 * lv / (nv * nv) * v[k] + 2.0 * d * u[k];
    }
  }
  return lu * lu + lv * lv + d * d;
}

}  // namespace

double head_penalty_grad(HeadKind kind, const double* raw, double* draw) {
  switch (kind) {
    case HeadKind::Quat:
      return quat_penalty_grad(raw, draw);
    case HeadKind::EulerXYZ:
    case HeadKind::EulerXZY:
      return 0.0;  // the angle decode is smooth, nothing to bound
    case HeadKind::SixD:
      return six_penalty_grad(raw, draw);
    case HeadKind::FiveD: {
      FiveCache c;
      double six[6];
      five_forward(raw, c, six);
      if (!draw) return six_penalty_grad(six, nullptr);
      double dsix[6] = {0, 0, 0, 0, 0, 0};
      const double val = six_penalty_grad(six, dsix);
      five_backward(c, dsix, draw);
      return val;
    }
    case HeadKind::QuatPair: {
      double val = quat_penalty_grad(raw, draw);
      val += quat_penalty_grad(raw + 4, draw ? draw + 4 : nullptr);
      return val;
    }
  }
  return 0.0;
}

double head_penalty(HeadKind kind, const double* raw) {
  return head_penalty_grad(kind, raw, nullptr);
}

// --- error + gradient --------------------------------------------------------

RotTarget make_rot_target(const Mat3& m) {
  RotTarget t;
  t.m = m;
  t.q = rot_to_quat_canonical(m);
  return t;
}

CosetTable make_coset_table(const FiniteRotationGroup& g) {
  CosetTable table;
  table.quats = g.elements;
  // one rotation matrix per group element (each pair +-ghat gives one)
  for (const auto& q : g.elements) {
    if (q.w() < 0 || (q.w() == 0 && q[1] < 0) ||
        (q.w() == 0 && q[1] == 0 && (q[2] < 0 || (q[2] == 0 && q[3] < 0))))
      continue;  // keep one representative of each +- pair
    table.mats.push_back(quat_to_rot(q));
  }
  return table;
}

double head_error_quat(const double* raw, const RotTarget& t, double* draw, double* min_margin) {
  const double n = std::max(norm4(raw), kNormFloor);
  margin_min(min_margin, norm4(raw));
  double uh[4];
  for (int k = 0; k < 4; ++k) uh[k] = raw[k] / n;

  // candidate targets: the coset orbit, or {q, -q} for the trivial group
  double best = -2.0, second = -2.0;
  Quat cbest;
  const auto consider = [&](const Quat& c) {
    const double s = uh[0] * c.w + uh[1] * c.x + uh[2] * c.y + uh[3] * c.z;
    if (s > best) {
      second = best;
      best = s;
      cbest = c;
    } else if (s > second) {
      second = s;
    }
  };
  if (t.coset_quats) {
    for (const auto& g : *t.coset_quats) consider((t.q * g).q);
  } else {
    consider(t.q.q);
    consider((-t.q).q);
  }

  const double err = 2.0 * std::acos(clamp_unit(best));
  if (second > -1.5)
    margin_min(min_margin, 2.0 * (std::acos(clamp_unit(second)) - std::acos(clamp_unit(best))));
  margin_min(min_margin, err);  // acos kink at coincidence
  if (draw) {
    const double denom = std::sqrt(std::max(1.0 - best * best, 0.0));
    if (denom > 1e-12) {
      const double c = -2.0 / denom;
      const double cb[4] = {cbest.w, cbest.x, cbest.y, cbest.z};
      for (int k = 0; k < 4; ++k) draw[k] += c * (cb[k] - best * uh[k]) / n;
    }
  }
  return err;
}

double head_error_rot(HeadKind kind, const double* raw, const RotTarget& t, double* draw,
                      double* min_margin) {
  Mat3 s;
  SixCache six_cache;
  FiveCache five_cache;
  SixCache five_six_cache;
  double six_image[6];
  Mat3 dmats[3];

  switch (kind) {
    case HeadKind::EulerXYZ:
    case HeadKind::EulerXZY:
      euler_forward(kind, raw, &s, draw ? dmats : nullptr);
      break;
    case HeadKind::SixD:
      six_forward(raw, six_cache, &s);
      margin_min(min_margin, norm3(raw));
      margin_min(min_margin, six_cache.nw);
      break;
    case HeadKind::FiveD:
      five_forward(raw, five_cache, six_image);
      six_forward(six_image, five_six_cache, &s);
      margin_min(min_margin, five_cache.t);
      margin_min(min_margin, norm3(six_image));
      margin_min(min_margin, five_six_cache.nw);
      break;
    default:
      throw std::invalid_argument("head_error_rot: head does not decode to a rotation matrix");
  }

  double best = -5.0, second = -5.0;
  Mat3 cbest_store;
  const Mat3* cbest = nullptr;
  const auto consider = [&](const Mat3& c) {
    const double d = mat_dot(c, s);
    if (d > best) {
      second = best;
      best = d;
      cbest_store = c;
      cbest = &cbest_store;
    } else if (d > second) {
      second = d;
    }
  };
  if (t.coset_mats) {
    // candidates are the coset of the target: m * R(g)
    for (const auto& g : *t.coset_mats) consider(t.m * g);
  } else {
    consider(t.m);
  }

  const double x = clamp_unit((best - 1.0) / 2.0);
  const double err = std::acos(x);
  if (second > -4.0) {
    const double err2 = std::acos(clamp_unit((second - 1.0) / 2.0));
    margin_min(min_margin, err2 - err);
  }
  margin_min(min_margin, err);
  margin_min(min_margin, kPi - err);

  if (draw) {
    const double denom = std::sqrt(std::max(1.0 - x * x, 0.0));
    if (denom > 1e-9) {
      Mat3 ds;
      for (int i = 0; i < 9; ++i) ds.m[i] = -cbest->m[i] / (2.0 * denom);
      switch (kind) {
        case HeadKind::EulerXYZ:
        case HeadKind::EulerXZY:
          for (int k = 0; k < 3; ++k) draw[k] += mat_dot(ds, dmats[k]);
          break;
        case HeadKind::SixD:
          six_backward(six_cache, ds, draw);
          break;
        case HeadKind::FiveD: {
          double dsix[6] = {0, 0, 0, 0, 0, 0};
          six_backward(five_six_cache, ds, dsix);
          five_backward(five_cache, dsix, draw);
          break;
        }
        default:
          break;
      }
    }
  }
  return err;
}

double head_error_pair(const double* raw, const QuatPair& target, double* draw,
                       double* min_margin) {
  const double* rl = raw;
  const double* rr = raw + 4;
  const double nl = std::max(norm4(rl), kNormFloor);
  const double nr = std::max(norm4(rr), kNormFloor);
  margin_min(min_margin, norm4(rl));
  margin_min(min_margin, norm4(rr));
  double ul[4], ur[4];
  for (int k = 0; k < 4; ++k) {
    ul[k] = rl[k] / nl;
    ur[k] = rr[k] / nr;
  }
  const double tl[4] = {target.l.w(), target.l.x(), target.l.y(), target.l.z()};
  const double tr[4] = {target.r.w(), target.r.x(), target.r.y(), target.r.z()};
  const double sl = clamp_unit(ul[0] * tl[0] + ul[1] * tl[1] + ul[2] * tl[2] + ul[3] * tl[3]);
  const double sr = clamp_unit(ur[0] * tr[0] + ur[1] * tr[1] + ur[2] * tr[2] + ur[3] * tr[3]);
  const double dl = std::acos(sl);
  const double dr = std::acos(sr);

  const bool first = (dl + dr) <= (2 * kPi - dl - dr);
  const double term1 = first ? dl + dr : 2 * kPi - dl - dr;
  const double term2 = std::abs(dl - dr);
  margin_min(min_margin, std::abs(dl + dr - kPi));
  margin_min(min_margin, term2);
  margin_min(min_margin, std::min(dl, kPi - dl));
  margin_min(min_margin, std::min(dr, kPi - dr));

  if (draw) {
    const double s1 = first ? 1.0 : -1.0;
    const double s2 = dl > dr ? 1.0 : (dl < dr ? -1.0 : 0.0);
    const double ddl = s1 + s2;
    const double ddr = s1 - s2;
    const double denl = std::sqrt(std::max(1.0 - sl * sl, 0.0));
    const double denr = std::sqrt(std::max(1.0 - sr * sr, 0.0));
    if (denl > 1e-12)
      for (int k = 0; k < 4; ++k) draw[k] += ddl * (-1.0 / denl) * (tl[k] - sl * ul[k]) / nl;
    if (denr > 1e-12)
      for (int k = 0; k < 4; ++k) draw[4 + k] += ddr * (-1.0 / denr) * (tr[k] - sr * ur[k]) / nr;
  }
  return term1 + term2;
}

// --- ensemble loss ------------------------------------------------------------

double ensemble_loss(const std::vector<double>& errs, const std::vector<double>& classifier_raw,
                     double l_max) {
  double total = 0, gsum = 0;
  for (size_t i = 0; i < errs.size(); ++i) {
    total += std::max(0.0, classifier_raw[i]) * errs[i];
    gsum += classifier_raw[i];
  }
  total += std::max(0.0, 1.0 - gsum) * l_max;
  return total;
}

double ensemble_loss_grad(const std::vector<double>& errs,
                          const std::vector<double>& classifier_raw, double l_max,
                          std::vector<double>& derr, std::vector<double>& dg,
                          double* min_margin) {
  const size_t n = errs.size();
  derr.assign(n, 0.0);
  dg.assign(n, 0.0);
  double total = 0, gsum = 0;
  for (size_t i = 0; i < n; ++i) gsum += classifier_raw[i];
  const bool fallback = (1.0 - gsum) > 0.0;
  margin_min(min_margin, std::abs(1.0 - gsum));
  for (size_t i = 0; i < n; ++i) {
    margin_min(min_margin, std::abs(classifier_raw[i]));
    const double gpos = std::max(0.0, classifier_raw[i]);
    total += gpos * errs[i];
    derr[i] = gpos;
    dg[i] = (classifier_raw[i] > 0.0 ? errs[i] : 0.0) - (fallback ? l_max : 0.0);
  }
  total += std::max(0.0, 1.0 - gsum) * l_max;
  return total;
}

int argmax_lowest(const double* v, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace rotkit::nn
