#include "rotkit/pointcloud.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rotkit::pc {

using nn::Matrix;
using nn::Vector;

void normalize_cloud(PointCloud& cloud) {
  if (cloud.size() == 0) return;
  const Vector lo = cloud.points.colwise().minCoeff();
  const Vector hi = cloud.points.colwise().maxCoeff();
  const Vector center = (lo + hi) / 2.0;
  const double radius = ((hi - lo) / 2.0).norm();
  if (radius < 1e-12) throw std::invalid_argument("normalize_cloud: degenerate cloud");
  cloud.points.rowwise() -= center.transpose();
  cloud.points /= radius;
}

PointCloud rotate_cloud(const PointCloud& cloud, const Mat3& r) {
  PointCloud out;
  out.points.resize(cloud.points.rows(), 3);
  for (int i = 0; i < cloud.points.rows(); ++i) {
    const auto p = cloud.points.row(i);
    for (int k = 0; k < 3; ++k)
      out.points(i, k) = r(k, 0) * p[0] + r(k, 1) * p[1] + r(k, 2) * p[2];
  }
  return out;
}

bool clouds_equal_as_sets(const PointCloud& a, const PointCloud& b, double tol) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (int i = 0; i < a.size(); ++i) {
    bool found = false;
    for (int j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      if ((a.points.row(i) - b.points.row(j)).norm() <= tol) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

PointCloud make_base_cloud(std::uint64_t seed, int n) {
  if (n < 16) throw std::invalid_argument("make_base_cloud: need n >= 16");
  Philox rng(seed, 77);
  PointCloud cloud;
  cloud.points.resize(n, 3);
  int placed = 0;
  long budget = 200000L * n;
  while (placed < n) {
    if (--budget < 0) throw std::runtime_error("make_base_cloud: rejection budget exhausted");
    const double x = 2 * rng.next_double() - 1;
    const double y = 2 * rng.next_double() - 1;
    const double z = 2 * rng.next_double() - 1;
    if (x * x + y * y + z * z > 1.0) continue;
    bool ok = true;
    for (int j = 0; j < placed && ok; ++j) {
      const double dx = cloud.points(j, 0) - x, dy = cloud.points(j, 1) - y,
                   dz = cloud.points(j, 2) - z;
      if (dx * dx + dy * dy + dz * dz < 1e-6) ok = false;
    }
    if (!ok) continue;
    cloud.points(placed, 0) = x;
    cloud.points(placed, 1) = y;
    cloud.points(placed, 2) = z;
    ++placed;
  }
  normalize_cloud(cloud);
  // no nontrivial candidate symmetry may map the cloud to itself
  const auto octahedral = build_group(GroupKind::O);
  int checked = 0;
  for (const auto& q : octahedral.elements) {
    if (q.w() < 0) continue;  // one representative per rotation
    const Mat3 r = quat_to_rot(q);
    ++checked;
    double identity_dev = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) identity_dev = std::max(identity_dev, std::abs(r(i, j) - (i == j)));
    if (identity_dev < 1e-9) continue;
    if (clouds_equal_as_sets(cloud, rotate_cloud(cloud, r), 1e-6))
      throw std::runtime_error("make_base_cloud: sampled cloud has accidental symmetry");
  }
  (void)checked;
  return cloud;
}

namespace {

std::array<double, 12> affine(const Mat3& r, double tx, double ty, double tz) {
  return {r(0, 0), r(0, 1), r(0, 2), tx, r(1, 0), r(1, 1), r(1, 2), ty,
          r(2, 0), r(2, 1), r(2, 2), tz};
}

}  // namespace

SymmetrySpec d2_spec() {
  // exact half-turn matrices, so the arranged cloud is D2-invariant to the bit
  Mat3 rx, ry, rz;
  rx.m = {1, 0, 0, 0, -1, 0, 0, 0, -1};
  ry.m = {-1, 0, 0, 0, 1, 0, 0, 0, -1};
  rz.m = {-1, 0, 0, 0, -1, 0, 0, 0, 1};
  SymmetrySpec s;
  s.transforms.push_back(affine(Mat3{}, 0.5, 0.5, 0.5));
  s.transforms.push_back(affine(rx, 0.5, -0.5, -0.5));
  s.transforms.push_back(affine(ry, -0.5, 0.5, -0.5));
  s.transforms.push_back(affine(rz, -0.5, -0.5, 0.5));
  return s;
}

SymmetrySpec translation_spec() {
  SymmetrySpec s;
  s.transforms.push_back(affine(Mat3{}, 0.5, 0.5, 0.5));
  s.transforms.push_back(affine(Mat3{}, 0.5, -0.5, -0.5));
  s.transforms.push_back(affine(Mat3{}, -0.5, 0.5, -0.5));
  s.transforms.push_back(affine(Mat3{}, -0.5, -0.5, 0.5));
  return s;
}

PointCloud build_symmetric_cloud(const PointCloud& base, const SymmetrySpec& spec) {
  PointCloud out;
  const int n = base.size();
  out.points.resize(n * static_cast<int>(spec.transforms.size()), 3);
  int row = 0;
  for (const auto& t : spec.transforms) {
    for (int i = 0; i < n; ++i, ++row) {
      const auto p = base.points.row(i);
      for (int k = 0; k < 3; ++k)
        out.points(row, k) = t[k * 4 + 0] * p[0] + t[k * 4 + 1] * p[1] + t[k * 4 + 2] * p[2] +
                             t[k * 4 + 3];
    }
  }
  return out;
}

void save_cloud(const std::string& path, const PointCloud& cloud) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_cloud: cannot open " + path);
  f << cloud.size() << "\n";
  char buf[96];
  for (int i = 0; i < cloud.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", cloud.points(i, 0), cloud.points(i, 1),
                  cloud.points(i, 2));
    f << buf;
  }
}

PointCloud load_cloud(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_cloud: cannot open " + path);
  // tolerate manifest comment lines above the count header
  std::string line;
  int n = 0;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    n = std::atoi(line.c_str());
    break;
  }
  if (n <= 0) throw std::runtime_error("load_cloud: bad count in " + path);
  PointCloud cloud;
  cloud.points.resize(n, 3);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k)
      if (!(f >> cloud.points(i, k))) throw std::runtime_error("load_cloud: truncated file");
  return cloud;
}

// --- encoder -----------------------------------------------------------------

Encoder make_encoder(int point_h, int mix_h) {
  Encoder e;
  e.point1.w.resize(point_h, 3);
  e.point1.b.resize(point_h);
  e.point2.w.resize(point_h, point_h);
  e.point2.b.resize(point_h);
  e.global.w.resize(point_h, point_h);
  e.global.b.resize(point_h);
  e.mix1.w.resize(mix_h, 2 * point_h);
  e.mix1.b.resize(mix_h);
  e.mix2.w.resize(mix_h, mix_h);
  e.mix2.b.resize(mix_h);
  return e;
}

void init_encoder(Encoder& enc, Philox& rng) {
  const auto init = [&rng](nn::DenseLayer& l) {
    nn::glorot_init(l, static_cast<int>(l.w.rows()), static_cast<int>(l.w.cols()), rng);
  };
  init(enc.point1);
  init(enc.point2);
  init(enc.global);
  init(enc.mix1);
  init(enc.mix2);
}

std::vector<nn::DenseLayer> encoder_to_layers(const Encoder& enc) {
  return {enc.point1, enc.point2, enc.global, enc.mix1, enc.mix2};
}

Encoder encoder_from_layers(const std::vector<nn::DenseLayer>& layers) {
  if (layers.size() != 5) throw std::runtime_error("encoder_from_layers: expected 5 layers");
  Encoder e;
  e.point1 = layers[0];
  e.point2 = layers[1];
  e.global = layers[2];
  e.mix1 = layers[3];
  e.mix2 = layers[4];
  return e;
}

namespace {

// coordinate-wise max over each cloud's rows; ties keep the lowest row
void pool_max(const Matrix& f, int batch, int points, Matrix& pooled, std::vector<int>& arg) {
  const int h = static_cast<int>(f.cols());
  pooled.resize(batch, h);
  arg.assign(static_cast<size_t>(batch) * h, 0);
  for (int b = 0; b < batch; ++b) {
    const int base = b * points;
    for (int c = 0; c < h; ++c) {
      double best = f(base, c);
      int besti = base;
      for (int i = 1; i < points; ++i) {
        const double v = f(base + i, c);
        if (v > best) {
          best = v;
          besti = base + i;
        }
      }
      pooled(b, c) = best;
      arg[static_cast<size_t>(b) * h + c] = besti;
    }
  }
}

}  // namespace

Matrix encoder_forward_batch(const Encoder& enc, const Matrix& x, int batch, int points,
                             EncoderCache* cache) {
  EncoderCache local;
  EncoderCache& c = cache ? *cache : local;
  c.batch = batch;
  c.points = points;
  c.x = x;
  c.f1 = nn::dense_forward(enc.point1, x).cwiseMax(0.0);
  c.f2 = nn::dense_forward(enc.point2, c.f1).cwiseMax(0.0);
  pool_max(c.f2, batch, points, c.pooled, c.arg_local);
  c.hg = nn::dense_forward(enc.global, c.pooled).cwiseMax(0.0);
  // concat the cloud's global feature onto each point's local feature
  const int ph = static_cast<int>(c.f2.cols());
  Matrix concat(batch * points, 2 * ph);
  concat.leftCols(ph) = c.f2;
  for (int b = 0; b < batch; ++b)
    concat.block(b * points, ph, points, ph).rowwise() = c.hg.row(b);
  c.mixed1 = nn::dense_forward(enc.mix1, concat).cwiseMax(0.0);
  c.mixed2 = nn::dense_forward(enc.mix2, c.mixed1).cwiseMax(0.0);
  Matrix out;
  pool_max(c.mixed2, batch, points, out, c.arg_final);
  return out;
}

EncoderGrads make_encoder_grads(const Encoder& enc) {
  const auto zero_like = [](const nn::DenseLayer& l) {
    nn::LayerGrad g;
    g.w = Matrix::Zero(l.w.rows(), l.w.cols());
    g.b = Vector::Zero(l.b.size());
    return g;
  };
  return {zero_like(enc.point1), zero_like(enc.point2), zero_like(enc.global),
          zero_like(enc.mix1), zero_like(enc.mix2)};
}

void encoder_backward(const Encoder& enc, const EncoderCache& c, const Matrix& dfeat,
                      EncoderGrads& grads) {
  const int batch = c.batch, points = c.points;
  const int ph = static_cast<int>(c.f2.cols());
  const int mh = static_cast<int>(c.mixed2.cols());

  // unpool the final max
  Matrix dmixed2 = Matrix::Zero(batch * points, mh);
  for (int b = 0; b < batch; ++b)
    for (int col = 0; col < mh; ++col)
      dmixed2(c.arg_final[static_cast<size_t>(b) * mh + col], col) += dfeat(b, col);

  dmixed2 = dmixed2.cwiseProduct((c.mixed2.array() > 0.0).cast<double>().matrix());
  grads.mix2.w += dmixed2.transpose() * c.mixed1;
  grads.mix2.b += dmixed2.colwise().sum().transpose();
  Matrix dmixed1 = dmixed2 * enc.mix2.w;

  dmixed1 = dmixed1.cwiseProduct((c.mixed1.array() > 0.0).cast<double>().matrix());
  // rebuild the concat input for the weight gradient
  Matrix concat(batch * points, 2 * ph);
  concat.leftCols(ph) = c.f2;
  for (int b = 0; b < batch; ++b)
    concat.block(b * points, ph, points, ph).rowwise() = c.hg.row(b);
  grads.mix1.w += dmixed1.transpose() * concat;
  grads.mix1.b += dmixed1.colwise().sum().transpose();
  const Matrix dconcat = dmixed1 * enc.mix1.w;

  Matrix df2 = dconcat.leftCols(ph);
  Matrix dhg = Matrix::Zero(batch, ph);
  for (int b = 0; b < batch; ++b)
    dhg.row(b) = dconcat.block(b * points, ph, points, ph).colwise().sum();

  Matrix dhg_z = dhg.cwiseProduct((c.hg.array() > 0.0).cast<double>().matrix());
  grads.global.w += dhg_z.transpose() * c.pooled;
  grads.global.b += dhg_z.colwise().sum().transpose();
  const Matrix dpooled = dhg_z * enc.global.w;

  for (int b = 0; b < batch; ++b)
    for (int col = 0; col < ph; ++col)
      df2(c.arg_local[static_cast<size_t>(b) * ph + col], col) += dpooled(b, col);

  df2 = df2.cwiseProduct((c.f2.array() > 0.0).cast<double>().matrix());
  grads.point2.w += df2.transpose() * c.f1;
  grads.point2.b += df2.colwise().sum().transpose();
  Matrix df1 = df2 * enc.point2.w;

  df1 = df1.cwiseProduct((c.f1.array() > 0.0).cast<double>().matrix());
  grads.point1.w += df1.transpose() * c.x;
  grads.point1.b += df1.colwise().sum().transpose();
}

Vector encoder_forward(const Encoder& enc, const PointCloud& cloud) {
  if (cloud.size() == 0) throw std::invalid_argument("encoder_forward: empty cloud");
  const Matrix out = encoder_forward_batch(enc, cloud.points, 1, cloud.size(), nullptr);
  return out.row(0).transpose();
}

}  // namespace rotkit::pc
