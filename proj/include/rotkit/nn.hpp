#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "rotkit/rng.hpp"
#include "rotkit/so3.hpp"
#include "rotkit/so4.hpp"
#include "rotkit/symmetry.hpp"

namespace rotkit::nn {

using Matrix = Eigen::MatrixXd;  // rows are samples
using Vector = Eigen::VectorXd;

struct DenseLayer {
  Matrix w;  // out x in
  Vector b;  // out
};

struct LayerGrad {
  Matrix w;
  Vector b;
};

// y = x w^T + b
Matrix dense_forward(const DenseLayer& l, const Matrix& x);

// Hidden stack with a rectifier after every layer. cache holds the input and
// each post-activation, in order.
struct MlpCache {
  std::vector<Matrix> acts;
};
Matrix mlp_forward(const std::vector<DenseLayer>& layers, const Matrix& x, MlpCache* cache);

// Accumulates layer gradients and returns the gradient wrt the input.
Matrix mlp_backward(const std::vector<DenseLayer>& layers, const MlpCache& cache,
                    const Matrix& dout, std::vector<LayerGrad>& grads);

void glorot_init(DenseLayer& l, int out, int in, Philox& rng);
void zero_init(DenseLayer& l, int out, int in);

// ---------------------------------------------------------------------------
// Adam

struct AdamParams {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Matrix mw, vw;
  Vector mb, vb;
};

void adam_init(AdamState& s, const DenseLayer& l);

// Standard bias-corrected first/second moment update; t counts steps from 1.
void adam_step(DenseLayer& p, const LayerGrad& g, AdamState& s, const AdamParams& cfg,
               long t);

// ---------------------------------------------------------------------------
// Representation heads

enum class HeadKind { Quat, EulerXYZ, EulerXZY, SixD, FiveD, QuatPair };

int head_raw_dim(HeadKind kind);
const char* head_kind_name(HeadKind kind);

// Decoders. Throw std::domain_error on degenerate raw vectors (norm below
// 1e-6 or near-parallel 6D factors).
UnitQuat decode_head_quat(const double* raw);
Mat3 decode_head_rot(HeadKind kind, const double* raw);   // EulerXYZ/XZY, SixD, FiveD
QuatPair decode_head_pair(const double* raw);
std::array<double, 6> five_to_six(const double* raw5);    // the 5D -> 6D image

// Representation maps used for last-layer bias initialization; exact right
// inverses of the decoders.
std::array<double, 6> encode_six(const Mat3& m);
std::array<double, 5> encode_five(const Mat3& m);

// Penalty keeping raw outputs away from representation singularities.
// Norms are floored at 1e-12, so the value is large but finite at zero.
double head_penalty(HeadKind kind, const double* raw);
// Adds the penalty gradient into draw and returns the value.
double head_penalty_grad(HeadKind kind, const double* raw, double* draw);

// Loss-side targets.
struct RotTarget {
  UnitQuat q;  // canonical quaternion of m
  Mat3 m;
  // Symmetry-group tables for the quotient metric (null: trivial group).
  // The error functions form the target's coset from these per call:
  // candidates q * ghat (quaternion heads) and m * R(g) (matrix heads).
  const std::vector<UnitQuat>* coset_quats = nullptr;  // double-cover elements
  const std::vector<Mat3>* coset_mats = nullptr;       // one matrix per rotation
};

RotTarget make_rot_target(const Mat3& m);

// Precomputed coset tables for a symmetry group, shared across samples.
struct CosetTable {
  std::vector<UnitQuat> quats;  // double cover elements
  std::vector<Mat3> mats;       // rotation matrices of G (|G| entries)
};
CosetTable make_coset_table(const FiniteRotationGroup& g);

// Per-sample head error and gradient. err is the metric distance (d, d_G or
// d_4) between the decoded output and the target. If draw is non-null the
// gradient wrt raw is written there. min_margin, when non-null, is
// min-accumulated with the distance (in natural units) to the nearest
// non-differentiable kink, used by the finite-difference harness to skip
// probes near kinks.
double head_error_quat(const double* raw, const RotTarget& t, double* draw, double* min_margin);
double head_error_rot(HeadKind kind, const double* raw, const RotTarget& t, double* draw,
                      double* min_margin);
double head_error_pair(const double* raw, const QuatPair& target, double* draw,
                       double* min_margin);

// ---------------------------------------------------------------------------
// Ensemble loss

// L = sum_i max(0, g_i) err_i + max(0, 1 - sum_i g_i) * l_max.
double ensemble_loss(const std::vector<double>& errs, const std::vector<double>& classifier_raw,
                     double l_max);
// Also produces d err_i and d g_i coefficients (subgradient 0 at kinks).
double ensemble_loss_grad(const std::vector<double>& errs,
                          const std::vector<double>& classifier_raw, double l_max,
                          std::vector<double>& derr, std::vector<double>& dg,
                          double* min_margin);

int argmax_lowest(const double* v, int n);

// ---------------------------------------------------------------------------
// Model

enum class TaskKind { Mat3, Mat4, PointCloud };

// Shared trunk, one raw output layer per head, and a raw classifier layer of
// width n_heads. For point-cloud tasks the trunk lives in the encoder and
// `trunk` is empty; the feature dimension is the encoder output size.
struct EnsembleModel {
  TaskKind task = TaskKind::Mat3;
  HeadKind head_kind = HeadKind::Quat;
  int n_heads = 1;
  int input_dim = 9;
  std::vector<DenseLayer> trunk;
  std::vector<DenseLayer> heads;
  DenseLayer classifier;

  int feature_dim() const;
};

// input_dim defaults to the task's flattened matrix size; point-cloud models
// pass the encoder feature width explicitly (their trunk list is empty).
EnsembleModel make_model(TaskKind task, HeadKind kind, int n_heads,
                         const std::vector<int>& hidden, int input_dim = -1);

// Last layers zero with classifier bias 1/n and head biases set to the
// representation of a random rotation (Euler: beta held inside the gimbal-free
// band); trunk layers get fan-scaled uniform weights.
void init_model(EnsembleModel& model, Philox& rng);

Matrix model_features(const EnsembleModel& model, const Matrix& x, MlpCache* cache);

struct ModelOutputs {
  MlpCache cache;
  Matrix feats;
  std::vector<Matrix> head_raw;  // per head: B x raw_dim
  Matrix classifier_raw;         // B x n_heads
};
ModelOutputs model_forward(const EnsembleModel& model, const Matrix& x);

struct ModelGrads {
  std::vector<LayerGrad> trunk;
  std::vector<LayerGrad> heads;
  LayerGrad classifier;
};
ModelGrads make_grads(const EnsembleModel& model);

// Backpropagates given per-head raw gradients and classifier gradients;
// returns the gradient wrt the model input (used by the encoder path).
Matrix model_backward(const EnsembleModel& model, const ModelOutputs& out,
                      const std::vector<Matrix>& dhead_raw, const Matrix& dclassifier,
                      ModelGrads& grads);

// argmax head (lowest index on ties) of one sample's classifier raw.
int ensemble_predict_index(const Matrix& classifier_raw, int row);

// ---------------------------------------------------------------------------
// Checkpoints: versioned little-endian binary, 8-byte floats, parameters in
// declaration order.

struct Checkpoint;  // opaque to headers; format documented in nn.cpp

void save_checkpoint(const std::string& path, const EnsembleModel& model,
                     const std::vector<DenseLayer>& extra_encoder_layers = {});
// Loads a model plus optional encoder layers (point-cloud checkpoints).
// params_end, when non-null, receives the file offset just past the
// parameter arrays (trailing sections may follow).
EnsembleModel load_checkpoint(const std::string& path, std::vector<DenseLayer>* encoder_layers,
                              std::size_t* params_end = nullptr);

}  // namespace rotkit::nn
