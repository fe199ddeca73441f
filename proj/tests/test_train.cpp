#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "rotkit/train.hpp"

using namespace rotkit;
using namespace rotkit::nn;

namespace {

TrainConfig tiny_mat3(HeadKind rep, int heads, long iters) {
  TrainConfig cfg;
  cfg.task = TaskKind::Mat3;
  cfg.rep = rep;
  cfg.n_heads = heads;
  cfg.hidden = {32, 32};
  cfg.iters = iters;
  cfg.batch = 64;
  cfg.lr = 1e-3;  // tiny nets tolerate a hotter rate; keeps tests quick
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("training is bit-deterministic") {
  const TrainConfig cfg = tiny_mat3(HeadKind::Quat, 2, 150);
  const TrainedModel a = train(cfg);
  const TrainedModel b = train(cfg);
  for (size_t i = 0; i < a.model.trunk.size(); ++i)
    CHECK((a.model.trunk[i].w - b.model.trunk[i].w).cwiseAbs().maxCoeff() == 0.0);
  for (size_t i = 0; i < a.model.heads.size(); ++i) {
    CHECK((a.model.heads[i].w - b.model.heads[i].w).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.model.heads[i].b - b.model.heads[i].b).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((a.model.classifier.w - b.model.classifier.w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("evaluation does not depend on the thread count") {
  TrainedModel tm = train(tiny_mat3(HeadKind::Quat, 2, 300));
  const ErrorSummary s1 = evaluate(tm, 5000, 1);
  const ErrorSummary s3 = evaluate(tm, 5000, 3);
  CHECK(s1.mean_deg == s3.mean_deg);
  CHECK(s1.max_deg == s3.max_deg);
  for (int k = 0; k < 1000; k += 37) CHECK(s1.percentiles_deg[k] == s3.percentiles_deg[k]);
}

TEST_CASE("task batches are reproducible and honor the schedule") {
  TrainConfig cfg;
  cfg.task = TaskKind::PointCloud;
  cfg.batch = 4;
  cfg.iters = 1000;
  cfg.noise_sigma = 0.01;
  pc::PointCloud cloud = pc::make_base_cloud(5, 16);
  Philox r1(3), r2(3);
  const TaskBatch a = sample_task_batch(cfg, cloud, {}, {}, 0, r1);
  const TaskBatch b = sample_task_batch(cfg, cloud, {}, {}, 0, r2);
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);  // same stream, same batch
  // iteration 0 is in the noise-free phase: rows are exact rotations of the cloud
  const pc::PointCloud rc = pc::rotate_cloud(cloud, quat_to_rot(a.rots[0]));
  CHECK((a.x.topRows(16) - rc.points).cwiseAbs().maxCoeff() == 0.0);
  // past the ramp the noise is nonzero
  Philox r3(3);
  const TaskBatch c = sample_task_batch(cfg, cloud, {}, {}, 999, r3);
  const pc::PointCloud rc2 = pc::rotate_cloud(cloud, quat_to_rot(c.rots[0]));
  CHECK((c.x.topRows(16) - rc2.points).cwiseAbs().maxCoeff() > 1e-4);
}

TEST_CASE("a short run reduces the mean error") {
  TrainedModel tm = train(tiny_mat3(HeadKind::Quat, 1, 2500));
  const ErrorSummary s = evaluate(tm, 4000, 2);
  // untrained output is a constant rotation: mean error would be ~126 deg
  CHECK(s.mean_deg < 60.0);
  CHECK(s.percentiles_deg.size() == 1000);
  CHECK(s.percentiles_deg[0] <= s.percentiles_deg[999]);
  CHECK(s.max_deg == doctest::Approx(s.percentiles_deg[999]));
}

TEST_CASE("hard mining and schedules run") {
  TrainConfig cfg = tiny_mat3(HeadKind::SixD, 2, 120);
  cfg.hard_mining = true;
  cfg.penalty_weight = 1.0;
  cfg.penalty_hold_frac = 0.3;
  cfg.penalty_decay_frac = 0.3;
  const TrainedModel tm = train(cfg);
  const TrainedModel tm2 = train(cfg);
  CHECK((tm.model.heads[0].w - tm2.model.heads[0].w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("divergence is reported, not propagated") {
  TrainConfig cfg = tiny_mat3(HeadKind::Quat, 1, 50);
  cfg.lr = std::nan("");
  CHECK_THROWS_AS((void)train(cfg), TrainingDiverged);
}

TEST_CASE("config validation") {
  TrainConfig cfg = tiny_mat3(HeadKind::QuatPair, 1, 10);
  CHECK_THROWS(static_cast<void>(train(cfg)));  // pair head on a 3D task
  TrainConfig cfg2 = tiny_mat3(HeadKind::Quat, 2, 10);
  cfg2.supervision = Supervision::Thm13;
  CHECK_THROWS(static_cast<void>(train(cfg2)));
}

TEST_CASE("an untrained single head is constant and the witness finds pi") {
  TrainConfig cfg = tiny_mat3(HeadKind::Quat, 1, 0);  // init only
  const TrainedModel tm = train(cfg);
  const auto w = model_witness(tm);
  REQUIRE(w.has_value());
  CHECK(w->error >= kPi - 1e-6);
}

TEST_CASE("trained model save/load round trip") {
  TrainedModel tm = train(tiny_mat3(HeadKind::Quat, 2, 200));
  save_trained("trained_test.bin", tm);
  const TrainedModel back = load_trained("trained_test.bin");
  Philox rng(5);
  std::vector<UnitQuat> targets;
  for (int i = 0; i < 64; ++i) targets.push_back(sample_uniform_rot(rng));
  const auto e1 = eval_errors_deg(tm, targets, nullptr);
  const auto e2 = eval_errors_deg(back, targets, nullptr);
  for (int i = 0; i < 64; ++i) CHECK(e1[i] == e2[i]);
  std::remove("trained_test.bin");
}

TEST_CASE("4d training paths execute") {
  TrainConfig cfg;
  cfg.task = TaskKind::Mat4;
  cfg.rep = HeadKind::QuatPair;
  cfg.n_heads = 4;
  cfg.hidden = {24, 24};
  cfg.iters = 80;
  cfg.batch = 32;
  cfg.seed = 3;
  cfg.supervision = Supervision::Region4;
  cfg.region_phase_frac = 0.5;
  cfg.hard_mining = true;
  const TrainedModel tm = train(cfg);
  const ErrorSummary s = evaluate(tm, 1000, 2);
  CHECK(s.max_deg <= 360.0 + 1e-9);
  CHECK(s.worst_pair.size() >= 1);

  TrainConfig t13 = cfg;
  t13.n_heads = 1;
  t13.supervision = Supervision::Thm13;
  t13.hard_mining = false;
  CHECK_NOTHROW(static_cast<void>(train(t13)));
}

TEST_CASE("point-cloud training path executes") {
  TrainConfig cfg;
  cfg.task = TaskKind::PointCloud;
  cfg.rep = HeadKind::Quat;
  cfg.n_heads = 1;
  cfg.iters = 30;
  cfg.batch = 8;
  cfg.seed = 4;
  cfg.cloud_points = 16;
  cfg.cloud_symmetric = true;
  cfg.encoder_point_h = 16;
  cfg.encoder_mix_h = 24;
  cfg.penalty_weight = 1.0;
  const TrainedModel tm = train(cfg);
  CHECK(tm.has_group);
  CHECK(tm.cloud.size() == 64);
  const ErrorSummary s = evaluate(tm, 500, 2);
  CHECK(std::isfinite(s.mean_deg));
  // evaluation is deterministic across repeated calls
  const ErrorSummary s2 = evaluate(tm, 500, 2);
  CHECK(s.mean_deg == s2.mean_deg);
  CHECK(s.max_deg == s2.max_deg);

  save_trained("pc_test.bin", tm);
  const TrainedModel back = load_trained("pc_test.bin");
  CHECK(back.has_encoder);
  CHECK(back.has_group);
  CHECK(back.cloud.size() == 64);
  const ErrorSummary s3 = evaluate(back, 500, 2);
  CHECK(s3.mean_deg == s.mean_deg);
  std::remove("pc_test.bin");
}

TEST_SUITE_END();
