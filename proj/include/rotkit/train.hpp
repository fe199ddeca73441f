#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rotkit/nn.hpp"
#include "rotkit/pointcloud.hpp"

namespace rotkit::nn {

struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

enum class Supervision {
  Normal,   // per-head metric error against the target
  Thm13,    // single head trained toward (1, qL qR) instead of the target pair
  Region4,  // four heads; loss pinned to 2*pi outside each head's region for
            // the first phase, then normal
};

struct TrainConfig {
  TaskKind task = TaskKind::Mat3;
  HeadKind rep = HeadKind::Quat;
  int n_heads = 1;
  std::vector<int> hidden = {64, 64, 64};  // trunk sizes (matrix tasks)

  long iters = 50000;
  int batch = 256;
  double lr = 1e-4;
  // linear decay of the step size to lr*0.1 over the final fraction (0: off)
  double lr_decay_frac = 0.0;
  std::uint64_t seed = 1;

  // penalty weight: constant until hold ends, linear decay to zero, then zero
  double penalty_weight = 0.0;
  double penalty_hold_frac = 0.6;
  double penalty_decay_frac = 0.2;

  bool hard_mining = false;  // worst half of each batch carries over
  Supervision supervision = Supervision::Normal;
  double region_phase_frac = 0.6;  // Region4: fraction under region loss

  // point-cloud task
  int cloud_points = 32;  // base cloud size; the task cloud has 4x points
  std::uint64_t cloud_seed = 2024;
  bool cloud_symmetric = false;  // D2 arrangement vs pure translations
  int encoder_point_h = 64;
  int encoder_mix_h = 128;
  // noise stddev: zero, then linear ramp, then constant
  double noise_sigma = 0.01;
  double noise_start_frac = 0.2;
  double noise_ramp_frac = 0.2;

  AdamParams adam;  // lr is taken from `lr`
};

struct TrainedModel {
  EnsembleModel model;
  pc::Encoder encoder;
  bool has_encoder = false;
  pc::PointCloud cloud;  // fixed task cloud (point-cloud task)
  FiniteRotationGroup group;
  CosetTable coset;
  bool has_group = false;
  TrainConfig config;
};

// Deterministic given the config; throws TrainingDiverged if the loss stops
// being finite.
TrainedModel train(const TrainConfig& cfg);

double noise_sigma_at(const TrainConfig& cfg, long iter);
double penalty_weight_at(const TrainConfig& cfg, long iter);
double lr_at(const TrainConfig& cfg, long iter);

// One training batch: targets (carryovers first, the rest sampled Haar) plus
// the model input rows; point-cloud tasks add per-point Gaussian noise at the
// given iteration's schedule sigma.
struct TaskBatch {
  std::vector<UnitQuat> rots;
  std::vector<QuatPair> pairs;
  Matrix x;
};
TaskBatch sample_task_batch(const TrainConfig& cfg, const pc::PointCloud& cloud,
                            const std::vector<UnitQuat>& carry_rots,
                            const std::vector<QuatPair>& carry_pairs, long iter, Philox& rng);

// Selected-head errors in degrees for explicit targets. For point-cloud
// models, noise_rng adds per-point Gaussian noise at the final schedule
// sigma; pass nullptr for noise-free inputs.
std::vector<double> eval_errors_deg(const TrainedModel& tm, const std::vector<UnitQuat>& targets,
                                    Philox* noise_rng);
std::vector<double> eval_errors_pair_deg(const TrainedModel& tm,
                                         const std::vector<QuatPair>& targets);

struct ErrorSummary {
  double mean_deg = 0;
  double max_deg = 0;
  std::vector<double> percentiles_deg;  // 1000 equally spaced quantiles
  std::vector<UnitQuat> worst_rot;      // worst targets, 3D tasks
  std::vector<QuatPair> worst_pair;     // worst targets, 4D task
};

// Haar test sweep, fanned out over threads in fixed chunks with split
// generator streams; the result does not depend on the thread count.
ErrorSummary evaluate(const TrainedModel& tm, int samples, int threads = 2, int top_k = 16);

// Local search for the maximum error, seeded at the sweep's worst targets
// (coset mates included for symmetric tasks). Returns degrees.
double refine_max_error_deg(const TrainedModel& tm, const ErrorSummary& summary, int rounds = 40,
                            int per_round = 128, double radius = 0.4);

// Thm-1-style witness on the trained converter; valid for single-quat-head
// models (the decoded map is continuous along the z loop).
std::optional<Witness> model_witness(const TrainedModel& tm);

void save_trained(const std::string& path, const TrainedModel& tm);
TrainedModel load_trained(const std::string& path);

}  // namespace rotkit::nn
