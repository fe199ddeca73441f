#include "rotkit/nn.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rotkit::nn {

Matrix dense_forward(const DenseLayer& l, const Matrix& x) {
  return (x * l.w.transpose()).rowwise() + l.b.transpose();
}

Matrix mlp_forward(const std::vector<DenseLayer>& layers, const Matrix& x, MlpCache* cache) {
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(x);
  }
  Matrix h = x;
  for (const auto& l : layers) {
    h = dense_forward(l, h).cwiseMax(0.0);
    if (cache) cache->acts.push_back(h);
  }
  return h;
}

Matrix mlp_backward(const std::vector<DenseLayer>& layers, const MlpCache& cache,
                    const Matrix& dout, std::vector<LayerGrad>& grads) {
  Matrix d = dout;
  for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
    // through the rectifier: post-activation stored in acts[i + 1]
    d = d.cwiseProduct((cache.acts[i + 1].array() > 0.0).cast<double>().matrix());
    grads[i].w += d.transpose() * cache.acts[i];
    grads[i].b += d.colwise().sum().transpose();
    d = d * layers[i].w;
  }
  return d;
}

void glorot_init(DenseLayer& l, int out, int in, Philox& rng) {
  l.w.resize(out, in);
  l.b = Vector::Zero(out);
  const double bound = std::sqrt(6.0 / (in + out));
  for (int i = 0; i < out; ++i)
    for (int j = 0; j < in; ++j) l.w(i, j) = (2.0 * rng.next_double() - 1.0) * bound;
}

void zero_init(DenseLayer& l, int out, int in) {
  l.w = Matrix::Zero(out, in);
  l.b = Vector::Zero(out);
}

void adam_init(AdamState& s, const DenseLayer& l) {
  s.mw = Matrix::Zero(l.w.rows(), l.w.cols());
  s.vw = Matrix::Zero(l.w.rows(), l.w.cols());
  s.mb = Vector::Zero(l.b.size());
  s.vb = Vector::Zero(l.b.size());
}

void adam_step(DenseLayer& p, const LayerGrad& g, AdamState& s, const AdamParams& cfg, long t) {
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  s.mw = cfg.beta1 * s.mw + (1.0 - cfg.beta1) * g.w;
  s.vw = cfg.beta2 * s.vw.array().matrix() + (1.0 - cfg.beta2) * g.w.cwiseProduct(g.w);
  p.w.array() -=
      cfg.lr * (s.mw.array() / c1) / ((s.vw.array() / c2).sqrt() + cfg.eps);
  s.mb = cfg.beta1 * s.mb + (1.0 - cfg.beta1) * g.b;
  s.vb = cfg.beta2 * s.vb + (1.0 - cfg.beta2) * g.b.cwiseProduct(g.b);
  p.b.array() -=
      cfg.lr * (s.mb.array() / c1) / ((s.vb.array() / c2).sqrt() + cfg.eps);
}

int EnsembleModel::feature_dim() const {
  if (trunk.empty()) return input_dim;
  return static_cast<int>(trunk.back().b.size());
}

EnsembleModel make_model(TaskKind task, HeadKind kind, int n_heads,
                         const std::vector<int>& hidden, int input_dim) {
  if (n_heads < 1) throw std::invalid_argument("make_model: need at least one head");
  EnsembleModel m;
  m.task = task;
  m.head_kind = kind;
  m.n_heads = n_heads;
  if (input_dim > 0)
    m.input_dim = input_dim;
  else if (task == TaskKind::Mat3)
    m.input_dim = 9;
  else if (task == TaskKind::Mat4)
    m.input_dim = 16;
  else
    throw std::invalid_argument("make_model: point-cloud models need an explicit feature width");
  int in = m.input_dim;
  for (int h : hidden) {
    DenseLayer l;
    l.w.resize(h, in);
    l.b.resize(h);
    m.trunk.push_back(std::move(l));
    in = h;
  }
  const int feat = in;
  for (int i = 0; i < n_heads; ++i) {
    DenseLayer l;
    l.w.resize(head_raw_dim(kind), feat);
    l.b.resize(head_raw_dim(kind));
    m.heads.push_back(std::move(l));
  }
  m.classifier.w.resize(n_heads, feat);
  m.classifier.b.resize(n_heads);
  return m;
}

void init_model(EnsembleModel& model, Philox& rng) {
  int in = model.input_dim;
  for (auto& l : model.trunk) {
    const int out = static_cast<int>(l.b.size());
    glorot_init(l, out, in, rng);
    in = out;
  }
  const int feat = model.feature_dim();
  for (auto& head : model.heads) {
    zero_init(head, head_raw_dim(model.head_kind), feat);
    switch (model.head_kind) {
      case HeadKind::Quat: {
        const UnitQuat q = sample_uniform_rot(rng);
        for (int k = 0; k < 4; ++k) head.b[k] = q[k];
        break;
      }
      case HeadKind::EulerXYZ:
      case HeadKind::EulerXZY: {
        // gimbal-free band for the initial beta
        head.b[0] = (2.0 * rng.next_double() - 1.0) * kPi;
        head.b[1] = (2.0 * rng.next_double() - 1.0) * kPi / 4.0;
        head.b[2] = (2.0 * rng.next_double() - 1.0) * kPi;
        break;
      }
      case HeadKind::SixD: {
        const auto six = encode_six(quat_to_rot(sample_uniform_rot(rng)));
        for (int k = 0; k < 6; ++k) head.b[k] = six[k];
        break;
      }
      case HeadKind::FiveD: {
        const auto five = encode_five(quat_to_rot(sample_uniform_rot(rng)));
        for (int k = 0; k < 5; ++k) head.b[k] = five[k];
        break;
      }
      case HeadKind::QuatPair: {
        const QuatPair p = sample_uniform_rot4(rng);
        for (int k = 0; k < 4; ++k) {
          head.b[k] = p.l[k];
          head.b[4 + k] = p.r[k];
        }
        break;
      }
    }
  }
  zero_init(model.classifier, model.n_heads, feat);
  model.classifier.b.setConstant(1.0 / model.n_heads);
}

Matrix model_features(const EnsembleModel& model, const Matrix& x, MlpCache* cache) {
  if (model.trunk.empty()) {
    if (cache) {
      cache->acts.clear();
      cache->acts.push_back(x);
    }
    return x;
  }
  return mlp_forward(model.trunk, x, cache);
}

ModelOutputs model_forward(const EnsembleModel& model, const Matrix& x) {
  ModelOutputs out;
  out.feats = model_features(model, x, &out.cache);
  out.head_raw.reserve(model.heads.size());
  for (const auto& h : model.heads) out.head_raw.push_back(dense_forward(h, out.feats));
  out.classifier_raw = dense_forward(model.classifier, out.feats);
  return out;
}

ModelGrads make_grads(const EnsembleModel& model) {
  ModelGrads g;
  const auto zero_like = [](const DenseLayer& l) {
    LayerGrad lg;
    lg.w = Matrix::Zero(l.w.rows(), l.w.cols());
    lg.b = Vector::Zero(l.b.size());
    return lg;
  };
  for (const auto& l : model.trunk) g.trunk.push_back(zero_like(l));
  for (const auto& l : model.heads) g.heads.push_back(zero_like(l));
  g.classifier = zero_like(model.classifier);
  return g;
}

Matrix model_backward(const EnsembleModel& model, const ModelOutputs& out,
                      const std::vector<Matrix>& dhead_raw, const Matrix& dclassifier,
                      ModelGrads& grads) {
  Matrix dfeat = Matrix::Zero(out.feats.rows(), out.feats.cols());
  for (size_t i = 0; i < model.heads.size(); ++i) {
    grads.heads[i].w += dhead_raw[i].transpose() * out.feats;
    grads.heads[i].b += dhead_raw[i].colwise().sum().transpose();
    dfeat += dhead_raw[i] * model.heads[i].w;
  }
  grads.classifier.w += dclassifier.transpose() * out.feats;
  grads.classifier.b += dclassifier.colwise().sum().transpose();
  dfeat += dclassifier * model.classifier.w;
  if (model.trunk.empty()) return dfeat;
  return mlp_backward(model.trunk, out.cache, dfeat, grads.trunk);
}

int ensemble_predict_index(const Matrix& classifier_raw, int row) {
  const int n = static_cast<int>(classifier_raw.cols());
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (classifier_raw(row, i) > classifier_raw(row, best)) best = i;
  return best;
}

// --- checkpoint io -----------------------------------------------------------
//
// Layout (little-endian):
//   char[8]  magic "ROTKCKPT"
//   u32      version (1)
//   u32      task, u32 head_kind, u32 n_heads, u32 input_dim
//   u32      trunk layer count, then (u32 out, u32 in) per layer
//   u32      encoder layer count, then (u32 out, u32 in) per layer
//   f64 arrays in declaration order: trunk, encoder, heads, classifier;
//   each layer is W row-major then b.

namespace {

constexpr char kMagic[8] = {'R', 'O', 'T', 'K', 'C', 'K', 'P', 'T'};

void write_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), 4);
}
std::uint32_t read_u32(std::ifstream& f) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

void write_layer(std::ofstream& f, const DenseLayer& l) {
  for (int i = 0; i < l.w.rows(); ++i)
    for (int j = 0; j < l.w.cols(); ++j) {
      const double v = l.w(i, j);
      f.write(reinterpret_cast<const char*>(&v), 8);
    }
  for (int i = 0; i < l.b.size(); ++i) {
    const double v = l.b(i);
    f.write(reinterpret_cast<const char*>(&v), 8);
  }
}

void read_layer(std::ifstream& f, DenseLayer& l) {
  for (int i = 0; i < l.w.rows(); ++i)
    for (int j = 0; j < l.w.cols(); ++j) {
      double v;
      f.read(reinterpret_cast<char*>(&v), 8);
      l.w(i, j) = v;
    }
  for (int i = 0; i < l.b.size(); ++i) {
    double v;
    f.read(reinterpret_cast<char*>(&v), 8);
    l.b(i) = v;
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const EnsembleModel& model,
                     const std::vector<DenseLayer>& encoder_layers) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f.write(kMagic, 8);
  write_u32(f, 1);
  write_u32(f, static_cast<std::uint32_t>(model.task));
  write_u32(f, static_cast<std::uint32_t>(model.head_kind));
  write_u32(f, static_cast<std::uint32_t>(model.n_heads));
  write_u32(f, static_cast<std::uint32_t>(model.input_dim));
  write_u32(f, static_cast<std::uint32_t>(model.trunk.size()));
  for (const auto& l : model.trunk) {
    write_u32(f, static_cast<std::uint32_t>(l.w.rows()));
    write_u32(f, static_cast<std::uint32_t>(l.w.cols()));
  }
  write_u32(f, static_cast<std::uint32_t>(encoder_layers.size()));
  for (const auto& l : encoder_layers) {
    write_u32(f, static_cast<std::uint32_t>(l.w.rows()));
    write_u32(f, static_cast<std::uint32_t>(l.w.cols()));
  }
  for (const auto& l : model.trunk) write_layer(f, l);
  for (const auto& l : encoder_layers) write_layer(f, l);
  for (const auto& l : model.heads) write_layer(f, l);
  write_layer(f, model.classifier);
}

EnsembleModel load_checkpoint(const std::string& path, std::vector<DenseLayer>* encoder_layers,
                              std::size_t* params_end) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  const std::uint32_t version = read_u32(f);
  if (version != 1) throw std::runtime_error("load_checkpoint: unsupported version");
  EnsembleModel m;
  m.task = static_cast<TaskKind>(read_u32(f));
  m.head_kind = static_cast<HeadKind>(read_u32(f));
  m.n_heads = static_cast<int>(read_u32(f));
  m.input_dim = static_cast<int>(read_u32(f));
  const std::uint32_t n_trunk = read_u32(f);
  std::vector<std::pair<int, int>> tdims(n_trunk), edims;
  for (auto& d : tdims) {
    d.first = static_cast<int>(read_u32(f));
    d.second = static_cast<int>(read_u32(f));
  }
  const std::uint32_t n_enc = read_u32(f);
  edims.resize(n_enc);
  for (auto& d : edims) {
    d.first = static_cast<int>(read_u32(f));
    d.second = static_cast<int>(read_u32(f));
  }
  for (const auto& d : tdims) {
    DenseLayer l;
    l.w.resize(d.first, d.second);
    l.b.resize(d.first);
    read_layer(f, l);
    m.trunk.push_back(std::move(l));
  }
  std::vector<DenseLayer> enc;
  for (const auto& d : edims) {
    DenseLayer l;
    l.w.resize(d.first, d.second);
    l.b.resize(d.first);
    read_layer(f, l);
    enc.push_back(std::move(l));
  }
  if (encoder_layers) *encoder_layers = std::move(enc);
  const int feat = m.trunk.empty()
                       ? (n_enc > 0 ? static_cast<int>(edims.back().first) : m.input_dim)
                       : static_cast<int>(tdims.back().first);
  if (m.trunk.empty() && n_enc > 0) m.input_dim = feat;
  for (int i = 0; i < m.n_heads; ++i) {
    DenseLayer l;
    l.w.resize(head_raw_dim(m.head_kind), feat);
    l.b.resize(head_raw_dim(m.head_kind));
    read_layer(f, l);
    m.heads.push_back(std::move(l));
  }
  m.classifier.w.resize(m.n_heads, feat);
  m.classifier.b.resize(m.n_heads);
  read_layer(f, m.classifier);
  if (!f) throw std::runtime_error("load_checkpoint: truncated file " + path);
  if (params_end) *params_end = static_cast<std::size_t>(f.tellg());
  return m;
}

}  // namespace rotkit::nn
