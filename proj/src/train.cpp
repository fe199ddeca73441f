#include "rotkit/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <thread>

namespace rotkit::nn {

namespace {

void flatten3(const Mat3& m, double* out) { std::memcpy(out, m.m.data(), 9 * sizeof(double)); }
void flatten4(const Mat4& m, double* out) { std::memcpy(out, m.m.data(), 16 * sizeof(double)); }

bool rot_output_head(HeadKind k) {
  return k == HeadKind::EulerXYZ || k == HeadKind::EulerXZY || k == HeadKind::SixD ||
         k == HeadKind::FiveD;
}

void validate(const TrainConfig& cfg) {
  if (cfg.task == TaskKind::Mat4) {
    if (cfg.rep != HeadKind::QuatPair)
      throw std::invalid_argument("train: 4D conversion uses the quaternion-pair head");
  } else {
    if (cfg.rep == HeadKind::QuatPair)
      throw std::invalid_argument("train: quaternion-pair head is for the 4D task");
  }
  if (cfg.supervision == Supervision::Thm13 &&
      (cfg.task != TaskKind::Mat4 || cfg.n_heads != 1))
    throw std::invalid_argument("train: thm13 supervision needs a single-head 4D model");
  if (cfg.supervision == Supervision::Region4 &&
      (cfg.task != TaskKind::Mat4 || cfg.n_heads != 4))
    throw std::invalid_argument("train: region supervision needs a four-head 4D model");
  if (cfg.n_heads < 1 || cfg.batch < 1 || cfg.iters < 0)
    throw std::invalid_argument("train: bad config");
}

}  // namespace

TaskBatch sample_task_batch(const TrainConfig& cfg, const pc::PointCloud& cloud,
                            const std::vector<UnitQuat>& carry_rots,
                            const std::vector<QuatPair>& carry_pairs, long iter, Philox& rng) {
  const double sigma = noise_sigma_at(cfg, iter);
  TaskBatch b;
  const int n = cfg.batch;
  if (cfg.task == TaskKind::Mat4) {
    b.pairs = carry_pairs;
    while (static_cast<int>(b.pairs.size()) < n) b.pairs.push_back(sample_uniform_rot4(rng));
    b.x.resize(n, 16);
    for (int s = 0; s < n; ++s) {
      double row[16];
      flatten4(rqq(b.pairs[s]), row);
      for (int k = 0; k < 16; ++k) b.x(s, k) = row[k];
    }
  } else if (cfg.task == TaskKind::Mat3) {
    b.rots = carry_rots;
    while (static_cast<int>(b.rots.size()) < n) b.rots.push_back(sample_uniform_rot(rng));
    b.x.resize(n, 9);
    for (int s = 0; s < n; ++s) {
      double row[9];
      flatten3(quat_to_rot(b.rots[s]), row);
      for (int k = 0; k < 9; ++k) b.x(s, k) = row[k];
    }
  } else {
    b.rots = carry_rots;
    while (static_cast<int>(b.rots.size()) < n) b.rots.push_back(sample_uniform_rot(rng));
    const int pts = cloud.size();
    b.x.resize(static_cast<long>(n) * pts, 3);
    for (int s = 0; s < n; ++s) {
      const pc::PointCloud rc = pc::rotate_cloud(cloud, quat_to_rot(b.rots[s]));
      for (int i = 0; i < pts; ++i)
        for (int k = 0; k < 3; ++k)
          b.x(static_cast<long>(s) * pts + i, k) =
              rc.points(i, k) + (sigma > 0 ? sigma * rng.next_gauss() : 0.0);
    }
  }
  return b;
}

double noise_sigma_at(const TrainConfig& cfg, long iter) {
  if (cfg.task != TaskKind::PointCloud) return 0.0;
  const double start = cfg.noise_start_frac * cfg.iters;
  const double ramp = std::max(1.0, cfg.noise_ramp_frac * cfg.iters);
  if (iter < start) return 0.0;
  const double f = (iter - start) / ramp;
  return cfg.noise_sigma * std::min(1.0, f);
}

double lr_at(const TrainConfig& cfg, long iter) {
  if (cfg.lr_decay_frac <= 0.0) return cfg.lr;
  const double start = (1.0 - cfg.lr_decay_frac) * cfg.iters;
  if (iter < start) return cfg.lr;
  const double span = std::max(1.0, cfg.lr_decay_frac * cfg.iters);
  const double f = (iter - start) / span;
  return cfg.lr * (1.0 - 0.9 * std::min(1.0, f));
}

double penalty_weight_at(const TrainConfig& cfg, long iter) {
  if (cfg.penalty_weight == 0.0) return 0.0;
  const double hold = cfg.penalty_hold_frac * cfg.iters;
  const double decay = std::max(1.0, cfg.penalty_decay_frac * cfg.iters);
  if (iter < hold) return cfg.penalty_weight;
  const double f = 1.0 - (iter - hold) / decay;
  return cfg.penalty_weight * std::max(0.0, f);
}

TrainedModel train(const TrainConfig& cfg) {
  validate(cfg);
  TrainedModel tm;
  tm.config = cfg;

  Philox root(cfg.seed);
  Philox init_rng = root.split(0);
  Philox data_rng = root.split(1);

  if (cfg.task == TaskKind::PointCloud) {
    const pc::PointCloud base = pc::make_base_cloud(cfg.cloud_seed, cfg.cloud_points);
    tm.cloud = pc::build_symmetric_cloud(
        base, cfg.cloud_symmetric ? pc::d2_spec() : pc::translation_spec());
    tm.encoder = pc::make_encoder(cfg.encoder_point_h, cfg.encoder_mix_h);
    pc::init_encoder(tm.encoder, init_rng);
    tm.has_encoder = true;
    if (cfg.cloud_symmetric) {
      tm.group = build_group(GroupKind::Dn, 2);
      tm.coset = make_coset_table(tm.group);
      tm.has_group = true;
    }
    tm.model = make_model(TaskKind::PointCloud, cfg.rep, cfg.n_heads, {}, cfg.encoder_mix_h);
  } else {
    tm.model = make_model(cfg.task, cfg.rep, cfg.n_heads, cfg.hidden);
  }
  init_model(tm.model, init_rng);

  AdamParams adam = cfg.adam;
  adam.lr = cfg.lr;
  std::vector<AdamState> states;
  const auto register_layer = [&states](const DenseLayer& l) {
    AdamState s;
    adam_init(s, l);
    states.push_back(std::move(s));
  };
  for (const auto& l : tm.model.trunk) register_layer(l);
  for (const auto& l : tm.model.heads) register_layer(l);
  register_layer(tm.model.classifier);
  std::vector<DenseLayer> enc_layers;
  if (tm.has_encoder)
    for (const auto& l : encoder_to_layers(tm.encoder)) register_layer(l);

  const double l_max = cfg.task == TaskKind::Mat4 ? 2 * kPi : kPi;
  const int n_heads = cfg.n_heads;
  const int raw_dim = head_raw_dim(cfg.rep);
  const long region_phase_end = static_cast<long>(cfg.region_phase_frac * cfg.iters);

  std::vector<UnitQuat> carry_rots;
  std::vector<QuatPair> carry_pairs;

  std::vector<double> errs(n_heads), dcoef(n_heads), dg(n_heads);
  std::vector<std::vector<double>> derr(n_heads, std::vector<double>(raw_dim));
  std::vector<double> sample_errors(cfg.batch);

  for (long iter = 0; iter < cfg.iters; ++iter) {
    const double lambda = penalty_weight_at(cfg, iter);
    TaskBatch batch = sample_task_batch(cfg, tm.cloud, carry_rots, carry_pairs, iter, data_rng);

    pc::EncoderCache ecache;
    ModelOutputs outs;
    if (tm.has_encoder) {
      const Matrix feats =
          pc::encoder_forward_batch(tm.encoder, batch.x, cfg.batch, tm.cloud.size(), &ecache);
      outs = model_forward(tm.model, feats);
    } else {
      outs = model_forward(tm.model, batch.x);
    }
    if (!outs.classifier_raw.allFinite())
      throw TrainingDiverged("non-finite activations at iteration " + std::to_string(iter));
    for (const auto& hr : outs.head_raw)
      if (!hr.allFinite())
        throw TrainingDiverged("non-finite head output at iteration " + std::to_string(iter));

    std::vector<Matrix> draws(n_heads);
    for (auto& d : draws) d = Matrix::Zero(cfg.batch, raw_dim);
    Matrix dclf = Matrix::Zero(cfg.batch, n_heads);

    double loss_sum = 0;
    const double inv_b = 1.0 / cfg.batch;
    for (int s = 0; s < cfg.batch; ++s) {
      RotTarget rt;
      QuatPair pair_target;
      if (cfg.task == TaskKind::Mat4) {
        pair_target = batch.pairs[s];
        if (cfg.supervision == Supervision::Thm13) pair_target = thm13_map(pair_target);
      } else {
        rt.q = batch.rots[s];
        rt.m = quat_to_rot(batch.rots[s]);
        if (tm.has_group) {
          rt.coset_quats = &tm.coset.quats;
          rt.coset_mats = &tm.coset.mats;
        }
      }

      double raw[8];
      for (int i = 0; i < n_heads; ++i) {
        for (int k = 0; k < raw_dim; ++k) raw[k] = outs.head_raw[i](s, k);
        std::fill(derr[i].begin(), derr[i].end(), 0.0);
        if (cfg.task == TaskKind::Mat4) {
          const bool masked = cfg.supervision == Supervision::Region4 &&
                              iter < region_phase_end &&
                              !region_mask4(i + 1, batch.pairs[s]);
          if (masked) {
            errs[i] = 2 * kPi;  // constant: no gradient into this head
          } else {
            errs[i] = head_error_pair(raw, pair_target, derr[i].data(), nullptr);
          }
        } else if (cfg.rep == HeadKind::Quat) {
          errs[i] = head_error_quat(raw, rt, derr[i].data(), nullptr);
        } else {
          errs[i] = head_error_rot(cfg.rep, raw, rt, derr[i].data(), nullptr);
        }
      }

      std::vector<double> g(n_heads);
      for (int i = 0; i < n_heads; ++i) g[i] = outs.classifier_raw(s, i);
      // mining key: the achieved metric error of the head the classifier
      // would select, against the true target (masks and substitute
      // supervision targets excluded)
      if (cfg.hard_mining) {
        const int sel = argmax_lowest(g.data(), n_heads);
        double raw_sel[8];
        for (int k = 0; k < raw_dim; ++k) raw_sel[k] = outs.head_raw[sel](s, k);
        if (cfg.task == TaskKind::Mat4) {
          sample_errors[s] = head_error_pair(raw_sel, batch.pairs[s], nullptr, nullptr);
        } else if (cfg.rep == HeadKind::Quat) {
          sample_errors[s] = head_error_quat(raw_sel, rt, nullptr, nullptr);
        } else {
          sample_errors[s] = head_error_rot(cfg.rep, raw_sel, rt, nullptr, nullptr);
        }
      }
      double loss = ensemble_loss_grad(errs, g, l_max, dcoef, dg, nullptr);
      for (int i = 0; i < n_heads; ++i) {
        for (int k = 0; k < raw_dim; ++k)
          draws[i](s, k) += inv_b * dcoef[i] * derr[i][k];
        dclf(s, i) = inv_b * dg[i];
      }
      if (lambda > 0) {
        for (int i = 0; i < n_heads; ++i) {
          for (int k = 0; k < raw_dim; ++k) raw[k] = outs.head_raw[i](s, k);
          double dpen[8] = {0, 0, 0, 0, 0, 0, 0, 0};
          loss += lambda * head_penalty_grad(cfg.rep, raw, dpen);
          for (int k = 0; k < raw_dim; ++k) draws[i](s, k) += inv_b * lambda * dpen[k];
        }
      }
      loss_sum += loss;
    }

    if (!std::isfinite(loss_sum))
      throw TrainingDiverged("loss became non-finite at iteration " + std::to_string(iter));

    ModelGrads grads = make_grads(tm.model);
    const Matrix dfeat = model_backward(tm.model, outs, draws, dclf, grads);
    pc::EncoderGrads egrads;
    if (tm.has_encoder) {
      egrads = pc::make_encoder_grads(tm.encoder);
      pc::encoder_backward(tm.encoder, ecache, dfeat, egrads);
    }

    const long t = iter + 1;
    adam.lr = lr_at(cfg, iter);
    size_t si = 0;
    for (size_t i = 0; i < tm.model.trunk.size(); ++i)
      adam_step(tm.model.trunk[i], grads.trunk[i], states[si++], adam, t);
    for (size_t i = 0; i < tm.model.heads.size(); ++i)
      adam_step(tm.model.heads[i], grads.heads[i], states[si++], adam, t);
    adam_step(tm.model.classifier, grads.classifier, states[si++], adam, t);
    if (tm.has_encoder) {
      adam_step(tm.encoder.point1, egrads.point1, states[si++], adam, t);
      adam_step(tm.encoder.point2, egrads.point2, states[si++], adam, t);
      adam_step(tm.encoder.global, egrads.global, states[si++], adam, t);
      adam_step(tm.encoder.mix1, egrads.mix1, states[si++], adam, t);
      adam_step(tm.encoder.mix2, egrads.mix2, states[si++], adam, t);
    }

    carry_rots.clear();
    carry_pairs.clear();
    if (cfg.hard_mining && iter + 1 < cfg.iters) {
      std::vector<int> order(cfg.batch);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return sample_errors[a] > sample_errors[b]; });
      const int keep = cfg.batch / 2;
      for (int k = 0; k < keep; ++k) {
        if (cfg.task == TaskKind::Mat4)
          carry_pairs.push_back(batch.pairs[order[k]]);
        else
          carry_rots.push_back(batch.rots[order[k]]);
      }
    }
  }
  return tm;
}

// --- evaluation ---------------------------------------------------------------

namespace {

// Selected-head error for row s of a forward pass, radians.
double selected_error(const TrainedModel& tm, const ModelOutputs& outs, int s,
                      const RotTarget* rt, const QuatPair* pair) {
  const int k = ensemble_predict_index(outs.classifier_raw, s);
  const int raw_dim = head_raw_dim(tm.model.head_kind);
  double raw[8];
  for (int j = 0; j < raw_dim; ++j) raw[j] = outs.head_raw[k](s, j);
  if (pair) return head_error_pair(raw, *pair, nullptr, nullptr);
  if (tm.model.head_kind == HeadKind::Quat) return head_error_quat(raw, *rt, nullptr, nullptr);
  return head_error_rot(tm.model.head_kind, raw, *rt, nullptr, nullptr);
}

constexpr double kRadToDeg = 180.0 / kPi;

}  // namespace

std::vector<double> eval_errors_deg(const TrainedModel& tm, const std::vector<UnitQuat>& targets,
                                    Philox* noise_rng) {
  const int n = static_cast<int>(targets.size());
  std::vector<double> out(n);
  const int chunk = 512;
  for (int base = 0; base < n; base += chunk) {
    const int b = std::min(chunk, n - base);
    Matrix x;
    ModelOutputs outs;
    if (tm.has_encoder) {
      const int pts = tm.cloud.size();
      x.resize(static_cast<long>(b) * pts, 3);
      const double sigma = noise_rng ? tm.config.noise_sigma : 0.0;
      for (int s = 0; s < b; ++s) {
        const pc::PointCloud rc = pc::rotate_cloud(tm.cloud, quat_to_rot(targets[base + s]));
        for (int i = 0; i < pts; ++i)
          for (int k = 0; k < 3; ++k)
            x(static_cast<long>(s) * pts + i, k) =
                rc.points(i, k) + (sigma > 0 ? sigma * noise_rng->next_gauss() : 0.0);
      }
      const Matrix feats = pc::encoder_forward_batch(tm.encoder, x, b, pts, nullptr);
      outs = model_forward(tm.model, feats);
    } else {
      x.resize(b, 9);
      for (int s = 0; s < b; ++s) {
        double row[9];
        flatten3(quat_to_rot(targets[base + s]), row);
        for (int k = 0; k < 9; ++k) x(s, k) = row[k];
      }
      outs = model_forward(tm.model, x);
    }
    for (int s = 0; s < b; ++s) {
      RotTarget rt;
      rt.q = targets[base + s];
      rt.m = quat_to_rot(rt.q);
      if (tm.has_group) {
        rt.coset_quats = &tm.coset.quats;
        rt.coset_mats = &tm.coset.mats;
      }
      out[base + s] = kRadToDeg * selected_error(tm, outs, s, &rt, nullptr);
    }
  }
  return out;
}

std::vector<double> eval_errors_pair_deg(const TrainedModel& tm,
                                         const std::vector<QuatPair>& targets) {
  const int n = static_cast<int>(targets.size());
  std::vector<double> out(n);
  const int chunk = 512;
  for (int base = 0; base < n; base += chunk) {
    const int b = std::min(chunk, n - base);
    Matrix x(b, 16);
    for (int s = 0; s < b; ++s) {
      double row[16];
      flatten4(rqq(targets[base + s]), row);
      for (int k = 0; k < 16; ++k) x(s, k) = row[k];
    }
    const ModelOutputs outs = model_forward(tm.model, x);
    for (int s = 0; s < b; ++s)
      out[base + s] = kRadToDeg * selected_error(tm, outs, s, nullptr, &targets[base + s]);
  }
  return out;
}

ErrorSummary evaluate(const TrainedModel& tm, int samples, int threads, int top_k) {
  const bool four_d = tm.config.task == TaskKind::Mat4;
  const int chunk = 2048;
  const int n_chunks = (samples + chunk - 1) / chunk;
  std::vector<double> errors(samples);
  std::vector<UnitQuat> rot_targets(four_d ? 0 : samples, UnitQuat(1, 0, 0, 0));
  std::vector<QuatPair> pair_targets(four_d ? samples : 0);

  Philox root(tm.config.seed);
  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= n_chunks) return;
      const int base = c * chunk;
      const int b = std::min(chunk, samples - base);
      Philox rng = root.split(5000 + c);
      Philox noise = root.split(90000 + c);
      if (four_d) {
        std::vector<QuatPair> ts(b);
        for (auto& t : ts) t = sample_uniform_rot4(rng);
        const auto errs = eval_errors_pair_deg(tm, ts);
        for (int s = 0; s < b; ++s) {
          errors[base + s] = errs[s];
          pair_targets[base + s] = ts[s];
        }
      } else {
        std::vector<UnitQuat> ts(b);
        for (auto& t : ts) t = sample_uniform_rot(rng);
        const auto errs =
            eval_errors_deg(tm, ts, tm.config.task == TaskKind::PointCloud ? &noise : nullptr);
        for (int s = 0; s < b; ++s) {
          errors[base + s] = errs[s];
          rot_targets[base + s] = ts[s];
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const int nt = std::max(1, std::min(threads, n_chunks));
  pool.reserve(nt);
  for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  ErrorSummary s;
  s.mean_deg = std::accumulate(errors.begin(), errors.end(), 0.0) / samples;
  std::vector<int> order(samples);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return errors[a] < errors[b]; });
  s.max_deg = errors[order.back()];
  s.percentiles_deg.resize(1000);
  for (int k = 1; k <= 1000; ++k) {
    long idx = static_cast<long>(k) * samples / 1000;
    if (idx > 0) --idx;
    s.percentiles_deg[k - 1] = errors[order[idx]];
  }
  for (int k = 0; k < std::min(top_k, samples); ++k) {
    const int idx = order[samples - 1 - k];
    if (four_d)
      s.worst_pair.push_back(pair_targets[idx]);
    else
      s.worst_rot.push_back(rot_targets[idx]);
  }
  return s;
}

double refine_max_error_deg(const TrainedModel& tm, const ErrorSummary& summary, int rounds,
                            int per_round, double radius) {
  Philox rng(tm.config.seed, 0xADCE);
  const bool four_d = tm.config.task == TaskKind::Mat4;
  double global_best = 0;

  const auto perturb_rot = [&](const UnitQuat& q, double r) {
    const double ang = r * rng.next_double();
    double ax = rng.next_gauss(), ay = rng.next_gauss(), az = rng.next_gauss();
    const double n = std::max(1e-12, std::sqrt(ax * ax + ay * ay + az * az));
    const double sa = std::sin(ang / 2) / n;
    return UnitQuat::normalized({std::cos(ang / 2), ax * sa, ay * sa, az * sa}) * q;
  };

  if (four_d) {
    for (const auto& seed : summary.worst_pair) {
      QuatPair cur = seed;
      double cur_err = eval_errors_pair_deg(tm, {cur})[0];
      double r = radius;
      for (int round = 0; round < rounds; ++round) {
        std::vector<QuatPair> cands(per_round);
        for (auto& c : cands) c = {perturb_rot(cur.l, r), perturb_rot(cur.r, r)};
        const auto errs = eval_errors_pair_deg(tm, cands);
        int best = static_cast<int>(std::max_element(errs.begin(), errs.end()) - errs.begin());
        if (errs[best] > cur_err) {
          cur_err = errs[best];
          cur = cands[best];
        } else {
          r *= 0.7;
        }
      }
      global_best = std::max(global_best, cur_err);
    }
  } else {
    for (const auto& seed : summary.worst_rot) {
      UnitQuat cur = seed;
      double cur_err = eval_errors_deg(tm, {cur}, nullptr)[0];
      double r = radius;
      for (int round = 0; round < rounds; ++round) {
        std::vector<UnitQuat> cands(per_round);
        for (auto& c : cands) c = perturb_rot(cur, r);
        const auto errs = eval_errors_deg(tm, cands, nullptr);
        int best = static_cast<int>(std::max_element(errs.begin(), errs.end()) - errs.begin());
        if (errs[best] > cur_err) {
          cur_err = errs[best];
          cur = cands[best];
        } else {
          r *= 0.7;
        }
      }
      global_best = std::max(global_best, cur_err);
    }
  }
  return global_best;
}

std::optional<Witness> model_witness(const TrainedModel& tm) {
  if (tm.model.head_kind != HeadKind::Quat || tm.model.n_heads != 1)
    throw std::invalid_argument("model_witness: needs a single quaternion head");
  const auto f = [&tm](const Mat3& r) {
    Matrix x;
    if (tm.has_encoder) {
      const pc::PointCloud rc = pc::rotate_cloud(tm.cloud, r);
      const Matrix feats =
          pc::encoder_forward_batch(tm.encoder, rc.points, 1, tm.cloud.size(), nullptr);
      const ModelOutputs outs = model_forward(tm.model, feats);
      double raw[4];
      for (int k = 0; k < 4; ++k) raw[k] = outs.head_raw[0](0, k);
      return decode_head_quat(raw);
    }
    x.resize(1, 9);
    double row[9];
    flatten3(r, row);
    for (int k = 0; k < 9; ++k) x(0, k) = row[k];
    const ModelOutputs outs = model_forward(tm.model, x);
    double raw[4];
    for (int k = 0; k < 4; ++k) raw[k] = outs.head_raw[0](0, k);
    return decode_head_quat(raw);
  };
  return witness_search(f);
}

// --- persistence ----------------------------------------------------------------

void save_trained(const std::string& path, const TrainedModel& tm) {
  save_checkpoint(path, tm.model,
                  tm.has_encoder ? pc::encoder_to_layers(tm.encoder)
                                 : std::vector<DenseLayer>{});
  // trailer: task group and the fixed cloud, enough to re-evaluate
  std::ofstream f(path, std::ios::binary | std::ios::app);
  const auto w32 = [&f](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  std::uint32_t gk = 0;
  if (tm.has_group) gk = static_cast<std::uint32_t>(tm.group.kind) + 1;
  w32(gk);
  w32(static_cast<std::uint32_t>(tm.has_group ? tm.group.n : 0));
  w32(tm.has_encoder ? static_cast<std::uint32_t>(tm.cloud.size()) : 0);
  if (tm.has_encoder)
    for (int i = 0; i < tm.cloud.size(); ++i)
      for (int k = 0; k < 3; ++k) {
        const double v = tm.cloud.points(i, k);
        f.write(reinterpret_cast<const char*>(&v), 8);
      }
  const double sigma = tm.config.noise_sigma;
  f.write(reinterpret_cast<const char*>(&sigma), 8);
  const std::uint64_t seed = tm.config.seed;
  f.write(reinterpret_cast<const char*>(&seed), 8);
}

TrainedModel load_trained(const std::string& path) {
  TrainedModel tm;
  std::vector<DenseLayer> enc_layers;
  std::size_t params_end = 0;
  tm.model = load_checkpoint(path, &enc_layers, &params_end);
  if (!enc_layers.empty()) {
    tm.encoder = pc::encoder_from_layers(enc_layers);
    tm.has_encoder = true;
  }
  std::ifstream f(path, std::ios::binary);
  f.seekg(static_cast<std::streamoff>(params_end));
  const auto r32 = [&f]() {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  const std::uint32_t gk = r32();
  const std::uint32_t gn = r32();
  if (gk != 0) {
    tm.group = build_group(static_cast<GroupKind>(gk - 1), static_cast<int>(gn));
    tm.coset = make_coset_table(tm.group);
    tm.has_group = true;
  }
  const std::uint32_t cloud_n = r32();
  if (cloud_n > 0) {
    tm.cloud.points.resize(cloud_n, 3);
    for (std::uint32_t i = 0; i < cloud_n; ++i)
      for (int k = 0; k < 3; ++k) {
        double v;
        f.read(reinterpret_cast<char*>(&v), 8);
        tm.cloud.points(i, k) = v;
      }
  }
  double sigma = 0.0;
  std::uint64_t seed = 1;
  f.read(reinterpret_cast<char*>(&sigma), 8);
  f.read(reinterpret_cast<char*>(&seed), 8);
  if (!f) throw std::runtime_error("load_trained: truncated trailer in " + path);
  tm.config.task = tm.model.task;
  tm.config.rep = tm.model.head_kind;
  tm.config.n_heads = tm.model.n_heads;
  tm.config.noise_sigma = sigma;
  tm.config.seed = seed;
  return tm;
}

}  // namespace rotkit::nn
