#pragma once

#include <string>
#include <vector>

#include "rotkit/nn.hpp"
#include "rotkit/symmetry.hpp"

namespace rotkit::pc {

// N x 3 point set.
struct PointCloud {
  nn::Matrix points;
  int size() const { return static_cast<int>(points.rows()); }
};

// Scales and translates so the bounding sphere of the axis-aligned bounding
// box is the unit sphere.
void normalize_cloud(PointCloud& cloud);

// Seeded random cloud in the unit ball with pairwise separation >= 1e-3,
// normalized, and checked to have no nontrivial rotational symmetry against a
// 24-element candidate set. Throws if the rejection budget is exhausted.
PointCloud make_base_cloud(std::uint64_t seed, int n);

// Rotation+translation copies of a base cloud; 3x4 row-major affine blocks.
struct SymmetrySpec {
  std::vector<std::array<double, 12>> transforms;
};

// Four copies at the corner offsets with rotation parts {I, Rx(pi), Ry(pi),
// Rz(pi)}: the arrangement is invariant under the D2 rotations as a set.
SymmetrySpec d2_spec();
// Same four offsets with identity rotation parts: similar shape, no symmetry.
SymmetrySpec translation_spec();

PointCloud build_symmetric_cloud(const PointCloud& base, const SymmetrySpec& spec);

// Exact set equality up to reordering, nearest-neighbor matching within tol.
bool clouds_equal_as_sets(const PointCloud& a, const PointCloud& b, double tol = 1e-9);

PointCloud rotate_cloud(const PointCloud& cloud, const Mat3& r);

// Plain-text serialization: count header line, then one "x y z" line per point.
void save_cloud(const std::string& path, const PointCloud& cloud);
PointCloud load_cloud(const std::string& path);

// ---------------------------------------------------------------------------
// Permutation-invariant encoder: shared per-point layers, max pool, pooled
// feature through a learned matrix + rectifier, broadcast-concat back onto
// each point, shared layers again, final max pool.

struct Encoder {
  nn::DenseLayer point1, point2;  // per-point
  nn::DenseLayer global;          // pooled feature transform
  nn::DenseLayer mix1, mix2;      // post-concat per-point
};

Encoder make_encoder(int point_h, int mix_h);
void init_encoder(Encoder& enc, Philox& rng);

std::vector<nn::DenseLayer> encoder_to_layers(const Encoder& enc);
Encoder encoder_from_layers(const std::vector<nn::DenseLayer>& layers);

struct EncoderCache {
  int batch = 0, points = 0;
  nn::Matrix x, f1, f2, pooled, hg, mixed1, mixed2;
  std::vector<int> arg_local;  // batch x point_h argmax rows
  std::vector<int> arg_final;  // batch x mix_h argmax rows
};

// x is (batch * points) x 3, clouds stored consecutively. Output batch x mix_h.
nn::Matrix encoder_forward_batch(const Encoder& enc, const nn::Matrix& x, int batch, int points,
                                 EncoderCache* cache);

struct EncoderGrads {
  nn::LayerGrad point1, point2, global, mix1, mix2;
};
EncoderGrads make_encoder_grads(const Encoder& enc);

void encoder_backward(const Encoder& enc, const EncoderCache& cache, const nn::Matrix& dfeat,
                      EncoderGrads& grads);

// Single-cloud feature, exactly invariant under point permutations.
nn::Vector encoder_forward(const Encoder& enc, const PointCloud& cloud);

}  // namespace rotkit::pc
