// Shared finite-difference harness for the trainable pathways: builds a small
// model + batch, computes the analytic gradients through the full loss
// pipeline, and compares every probed parameter against central differences.
// Probes within 1e-3 of a kink (tracked margins or two-scale disagreement)
// are skipped.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rotkit/nn.hpp"
#include "rotkit/pointcloud.hpp"

namespace gradcheck {

using namespace rotkit;
using namespace rotkit::nn;

struct Pipeline {
  TaskKind task = TaskKind::Mat3;
  HeadKind rep = HeadKind::Quat;
  int n_heads = 2;
  double lambda = 0.0;
  bool region4 = false;
  EnsembleModel model;
  pc::Encoder encoder;
  bool has_encoder = false;
  pc::PointCloud cloud;
  FiniteRotationGroup group;
  CosetTable coset;
  bool has_group = false;
  std::vector<UnitQuat> rot_targets;
  std::vector<QuatPair> pair_targets;
  Matrix x;
  int batch = 0;
};

inline double pipeline_loss(Pipeline& p, ModelGrads* grads, pc::EncoderGrads* egrads,
                            double* min_margin) {
  pc::EncoderCache ecache;
  ModelOutputs outs;
  if (p.has_encoder) {
    const Matrix feats =
        pc::encoder_forward_batch(p.encoder, p.x, p.batch, p.cloud.size(), &ecache);
    outs = model_forward(p.model, feats);
  } else {
    outs = model_forward(p.model, p.x);
  }
  const int raw_dim = head_raw_dim(p.rep);
  const double l_max = p.task == TaskKind::Mat4 ? 2 * kPi : kPi;
  std::vector<Matrix> draws(p.n_heads);
  for (auto& d : draws) d = Matrix::Zero(p.batch, raw_dim);
  Matrix dclf = Matrix::Zero(p.batch, p.n_heads);
  std::vector<double> errs(p.n_heads), dcoef, dgc;
  std::vector<std::vector<double>> derr(p.n_heads, std::vector<double>(raw_dim, 0.0));

  double total = 0;
  const double inv_b = 1.0 / p.batch;
  for (int s = 0; s < p.batch; ++s) {
    RotTarget rt;
    if (p.task != TaskKind::Mat4) {
      rt.q = p.rot_targets[s];
      rt.m = quat_to_rot(rt.q);
      if (p.has_group) {
        rt.coset_quats = &p.coset.quats;
        rt.coset_mats = &p.coset.mats;
      }
    }
    double raw[8];
    for (int i = 0; i < p.n_heads; ++i) {
      for (int k = 0; k < raw_dim; ++k) raw[k] = outs.head_raw[i](s, k);
      std::fill(derr[i].begin(), derr[i].end(), 0.0);
      if (p.task == TaskKind::Mat4) {
        if (p.region4 && !region_mask4(i + 1, p.pair_targets[s])) {
          errs[i] = 2 * kPi;
        } else {
          errs[i] = head_error_pair(raw, p.pair_targets[s], derr[i].data(), min_margin);
        }
      } else if (p.rep == HeadKind::Quat) {
        errs[i] = head_error_quat(raw, rt, derr[i].data(), min_margin);
      } else {
        errs[i] = head_error_rot(p.rep, raw, rt, derr[i].data(), min_margin);
      }
    }
    std::vector<double> g(p.n_heads);
    for (int i = 0; i < p.n_heads; ++i) g[i] = outs.classifier_raw(s, i);
    double loss = ensemble_loss_grad(errs, g, l_max, dcoef, dgc, min_margin);
    for (int i = 0; i < p.n_heads; ++i) {
      for (int k = 0; k < raw_dim; ++k) draws[i](s, k) += inv_b * dcoef[i] * derr[i][k];
      dclf(s, i) = inv_b * dgc[i];
    }
    if (p.lambda > 0) {
      for (int i = 0; i < p.n_heads; ++i) {
        for (int k = 0; k < raw_dim; ++k) raw[k] = outs.head_raw[i](s, k);
        double dpen[8] = {0};
        loss += p.lambda * head_penalty_grad(p.rep, raw, dpen);
        for (int k = 0; k < raw_dim; ++k) draws[i](s, k) += inv_b * p.lambda * dpen[k];
      }
    }
    total += loss * inv_b;
  }
  if (grads) {
    const Matrix dfeat = model_backward(p.model, outs, draws, dclf, *grads);
    if (p.has_encoder && egrads) pc::encoder_backward(p.encoder, ecache, dfeat, *egrads);
  }
  return total;
}

inline Pipeline make_pipeline(TaskKind task, HeadKind rep, int n_heads, double lambda,
                              bool group, bool region4, std::uint64_t seed) {
  Pipeline p;
  p.task = task;
  p.rep = rep;
  p.n_heads = n_heads;
  p.lambda = lambda;
  p.region4 = region4;
  p.batch = 3;
  Philox rng(seed);
  if (task == TaskKind::PointCloud) {
    p.cloud = pc::make_base_cloud(seed + 5, 16);
    p.encoder = pc::make_encoder(8, 12);
    pc::init_encoder(p.encoder, rng);
    p.has_encoder = true;
    p.model = make_model(task, rep, n_heads, {}, 12);
  } else {
    p.model = make_model(task, rep, n_heads, {10, 8});
  }
  init_model(p.model, rng);
  // move off the zero-initialized point so every pathway is exercised
  Philox jig(seed + 17);
  for (auto& h : p.model.heads)
    for (int i = 0; i < h.w.rows(); ++i)
      for (int j = 0; j < h.w.cols(); ++j) h.w(i, j) += 0.3 * jig.next_gauss();
  for (int i = 0; i < p.model.classifier.w.rows(); ++i)
    for (int j = 0; j < p.model.classifier.w.cols(); ++j)
      p.model.classifier.w(i, j) += 0.3 * jig.next_gauss();
  for (int i = 0; i < p.model.classifier.b.size(); ++i)
    p.model.classifier.b(i) += 0.2 * jig.next_gauss();

  if (group) {
    p.group = build_group(GroupKind::Dn, 2);
    p.coset = make_coset_table(p.group);
    p.has_group = true;
  }
  if (task == TaskKind::Mat4) {
    for (int s = 0; s < p.batch; ++s) p.pair_targets.push_back(sample_uniform_rot4(rng));
    p.x.resize(p.batch, 16);
    for (int s = 0; s < p.batch; ++s) {
      const Mat4 m = rqq(p.pair_targets[s]);
      for (int k = 0; k < 16; ++k) p.x(s, k) = m.m[k];
    }
  } else if (task == TaskKind::Mat3) {
    for (int s = 0; s < p.batch; ++s) p.rot_targets.push_back(sample_uniform_rot(rng));
    p.x.resize(p.batch, 9);
    for (int s = 0; s < p.batch; ++s) {
      const Mat3 m = quat_to_rot(p.rot_targets[s]);
      for (int k = 0; k < 9; ++k) p.x(s, k) = m.m[k];
    }
  } else {
    for (int s = 0; s < p.batch; ++s) p.rot_targets.push_back(sample_uniform_rot(rng));
    const int pts = p.cloud.size();
    p.x.resize(p.batch * pts, 3);
    for (int s = 0; s < p.batch; ++s) {
      const pc::PointCloud rc = pc::rotate_cloud(p.cloud, quat_to_rot(p.rot_targets[s]));
      for (int i = 0; i < pts; ++i)
        for (int k = 0; k < 3; ++k) p.x(s * pts + i, k) = rc.points(i, k);
    }
  }
  return p;
}

struct ParamRef {
  double* ptr;
  long count;
};

inline std::vector<ParamRef> param_refs(Pipeline& p) {
  std::vector<ParamRef> refs;
  const auto add = [&refs](DenseLayer& l) {
    refs.push_back({l.w.data(), l.w.size()});
    refs.push_back({l.b.data(), l.b.size()});
  };
  for (auto& l : p.model.trunk) add(l);
  for (auto& l : p.model.heads) add(l);
  add(p.model.classifier);
  if (p.has_encoder) {
    add(p.encoder.point1);
    add(p.encoder.point2);
    add(p.encoder.global);
    add(p.encoder.mix1);
    add(p.encoder.mix2);
  }
  return refs;
}

inline double grad_entry(const Pipeline& p, const ModelGrads& g, const pc::EncoderGrads& eg,
                         size_t tensor, long idx) {
  std::vector<const double*> ptrs;
  const auto add = [&ptrs](const LayerGrad& l) {
    ptrs.push_back(l.w.data());
    ptrs.push_back(l.b.data());
  };
  for (const auto& l : g.trunk) add(l);
  for (const auto& l : g.heads) add(l);
  add(g.classifier);
  if (p.has_encoder) {
    add(eg.point1);
    add(eg.point2);
    add(eg.global);
    add(eg.mix1);
    add(eg.mix2);
  }
  return ptrs[tensor][idx];
}

struct Result {
  int probes = 0;
  int failures = 0;
  double worst_rel = 0;
  bool skipped_config = false;  // the whole sample landed on a kink
};

inline Result run(TaskKind task, HeadKind rep, int n_heads, double lambda, bool group,
                  bool region4, std::uint64_t seed, int probes) {
  Pipeline p = make_pipeline(task, rep, n_heads, lambda, group, region4, seed);
  Result res;

  double margin = 1e9;
  ModelGrads grads = make_grads(p.model);
  pc::EncoderGrads egrads;
  if (p.has_encoder) egrads = pc::make_encoder_grads(p.encoder);
  pipeline_loss(p, &grads, p.has_encoder ? &egrads : nullptr, &margin);
  if (margin < 1e-3) {
    res.skipped_config = true;
    return res;
  }

  auto refs = param_refs(p);
  Philox pick(seed + 999);
  const double h = 1e-5;
  int attempts = 0;
  while (res.probes < probes && attempts < probes * 4) {
    ++attempts;
    const size_t tensor = static_cast<size_t>(pick.next_u64() % refs.size());
    if (refs[tensor].count == 0) continue;
    const long idx = static_cast<long>(pick.next_u64() % refs[tensor].count);
    double* slot = refs[tensor].ptr + idx;
    const double saved = *slot;

    *slot = saved + h;
    const double lp = pipeline_loss(p, nullptr, nullptr, nullptr);
    *slot = saved - h;
    const double lm = pipeline_loss(p, nullptr, nullptr, nullptr);
    *slot = saved + h / 2;
    const double lp2 = pipeline_loss(p, nullptr, nullptr, nullptr);
    *slot = saved - h / 2;
    const double lm2 = pipeline_loss(p, nullptr, nullptr, nullptr);
    *slot = saved;

    const double fd = (lp - lm) / (2 * h);
    const double fd2 = (lp2 - lm2) / h;
    const double scale = std::max({std::abs(fd), std::abs(fd2), 1e-6});
    if (std::abs(fd - fd2) > 1e-3 * scale) continue;  // kink inside the interval

    const double an = grad_entry(p, grads, egrads, tensor, idx);
    const double denom = std::max(std::abs(fd), std::abs(an));
    ++res.probes;
    if (denom < 1e-6) {
      if (std::abs(fd - an) >= 1e-6) ++res.failures;
    } else {
      const double rel = std::abs(fd - an) / denom;
      res.worst_rel = std::max(res.worst_rel, rel);
      if (rel >= 1e-4) ++res.failures;
    }
  }
  return res;
}

}  // namespace gradcheck
