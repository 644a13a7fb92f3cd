#include "hspp/membership.hpp"

#include <algorithm>
#include <cmath>

#include "hspp/container.hpp"
#include "hspp/synth.hpp"

namespace hspp {
namespace {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double silu(double x) { return x * sigmoid(x); }

inline double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

void affine(const Dense& layer, const double* x, double* y) {
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double* row = layer.w.data() + o * layer.in;
    double acc = layer.b[o];
    for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

// dW += dy (x)^T, db += dy, dx = W^T dy (when dx non-null).
void affine_backward(const Dense& layer, const double* x, const double* dy, double* dw, double* db, double* dx) {
  if (dx) std::fill(dx, dx + layer.in, 0.0);
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double g = dy[o];
    db[o] += g;
    if (g == 0.0) continue;
    const double* row = layer.w.data() + o * layer.in;
    double* drow = dw + o * layer.in;
    for (std::size_t i = 0; i < layer.in; ++i) {
      drow[i] += g * x[i];
      if (dx) dx[i] += g * row[i];
    }
  }
}

void init_dense(Dense& layer, Rng& rng, double gain) {
  // Glorot-style uniform bound scaled by gain.
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
  for (auto& w : layer.w) w = rng.uniform(-bound, bound);
  std::fill(layer.b.begin(), layer.b.end(), 0.0);
}

// Activations of one forward pass, kept for backpropagation.
struct Activations {
  std::vector<double> g1, a1, g2, gate, z, u1, v1, u2, v2, logits;
  ClassProbabilities p{};
};

void run_forward(const MembershipModel& m, std::span<const double> x, Activations& act) {
  const ModelShape& s = m.shape();
  const double* chunk = x.data() + kNumTraceFeatures;

  act.g1.resize(s.gate_hidden);
  act.a1.resize(s.gate_hidden);
  affine(m.gate1, chunk, act.g1.data());
  for (std::size_t i = 0; i < s.gate_hidden; ++i) act.a1[i] = silu(act.g1[i]);

  act.g2.resize(kNumTraceFeatures);
  act.gate.resize(kNumTraceFeatures);
  affine(m.gate2, act.a1.data(), act.g2.data());
  for (std::size_t i = 0; i < kNumTraceFeatures; ++i) act.gate[i] = sigmoid(act.g2[i]);

  act.z.resize(kNumInputs);
  for (std::size_t i = 0; i < kNumTraceFeatures; ++i) act.z[i] = act.gate[i] * x[i];
  for (std::size_t i = kNumTraceFeatures; i < kNumInputs; ++i) act.z[i] = x[i];

  act.u1.resize(s.trunk_hidden1);
  act.v1.resize(s.trunk_hidden1);
  affine(m.trunk1, act.z.data(), act.u1.data());
  for (std::size_t i = 0; i < s.trunk_hidden1; ++i) act.v1[i] = silu(act.u1[i]);

  act.u2.resize(s.trunk_hidden2);
  act.v2.resize(s.trunk_hidden2);
  affine(m.trunk2, act.v1.data(), act.u2.data());
  for (std::size_t i = 0; i < s.trunk_hidden2; ++i) act.v2[i] = silu(act.u2[i]);

  act.logits.resize(kNumClasses);
  affine(m.head, act.v2.data(), act.logits.data());
  const double top = *std::max_element(act.logits.begin(), act.logits.end());
  double total = 0;
  for (int c = 0; c < kNumClasses; ++c) total += (act.p[c] = std::exp(act.logits[c] - top));
  for (auto& v : act.p) v /= total;
}

std::size_t expect_finite(std::span<const double> x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw Error(ErrorKind::Range, "non-finite input at feature " + std::to_string(i + 1));
    }
  }
  return x.size();
}

NamedTensor f64_tensor(const std::string& name, std::vector<std::uint64_t> shape, const std::vector<double>& v) {
  NamedTensor t;
  t.name = name;
  t.dtype = DType::F64;
  t.shape = std::move(shape);
  t.f64 = v;
  return t;
}

}  // namespace

MembershipModel MembershipModel::initialize(const ModelShape& shape, std::uint64_t seed) {
  MembershipModel m;
  m.shape_ = shape;
  m.gate1 = Dense(kNumChunkFeatures, shape.gate_hidden);
  m.gate2 = Dense(shape.gate_hidden, kNumTraceFeatures);
  m.trunk1 = Dense(kNumInputs, shape.trunk_hidden1);
  m.trunk2 = Dense(shape.trunk_hidden1, shape.trunk_hidden2);
  m.head = Dense(shape.trunk_hidden2, kNumClasses);
  Rng rng(seed);
  init_dense(m.gate1, rng, 1.0);
  // gate2 starts at zero so the gate opens at exactly 0.5 everywhere
  init_dense(m.trunk1, rng, 1.0);
  init_dense(m.trunk2, rng, 1.0);
  init_dense(m.head, rng, 1.0);
  m.norm_mean.fill(0.0);
  m.norm_scale.fill(1.0);
  return m;
}

void MembershipModel::set_normalization(const std::array<double, kNumInputs>& mean,
                                        const std::array<double, kNumInputs>& scale) {
  norm_mean = mean;
  norm_scale = scale;
}

FeatureVector MembershipModel::standardize(const FeatureVector& raw) const {
  FeatureVector x{};
  for (std::size_t i = 0; i < kNumInputs; ++i) x[i] = (raw[i] - norm_mean[i]) / norm_scale[i];
  return x;
}

ClassProbabilities MembershipModel::forward(const FeatureVector& raw) const {
  expect_finite(raw);
  const FeatureVector x = standardize(raw);
  return forward_standardized(x);
}

ClassProbabilities MembershipModel::forward_standardized(std::span<const double> x) const {
  if (x.size() != kNumInputs) throw Error(ErrorKind::Invalid, "membership input must have 77 entries");
  expect_finite(x);
  thread_local Activations act;
  run_forward(*this, x, act);
  return act.p;
}

std::vector<double> MembershipModel::gate(std::span<const double, kNumChunkFeatures> chunk) const {
  std::vector<double> g1(shape_.gate_hidden), g2(kNumTraceFeatures);
  affine(gate1, chunk.data(), g1.data());
  for (auto& v : g1) v = silu(v);
  affine(gate2, g1.data(), g2.data());
  for (auto& v : g2) v = sigmoid(v);
  return g2;
}

std::vector<std::vector<double>*> MembershipModel::parameters() {
  return {&gate1.w, &gate1.b, &gate2.w, &gate2.b, &trunk1.w, &trunk1.b,
          &trunk2.w, &trunk2.b, &head.w, &head.b};
}

std::vector<const std::vector<double>*> MembershipModel::parameters() const {
  return {&gate1.w, &gate1.b, &gate2.w, &gate2.b, &trunk1.w, &trunk1.b,
          &trunk2.w, &trunk2.b, &head.w, &head.b};
}

bool MembershipModel::operator==(const MembershipModel& o) const {
  return shape_.gate_hidden == o.shape_.gate_hidden && shape_.trunk_hidden1 == o.shape_.trunk_hidden1 &&
         shape_.trunk_hidden2 == o.shape_.trunk_hidden2 && gate1 == o.gate1 && gate2 == o.gate2 &&
         trunk1 == o.trunk1 && trunk2 == o.trunk2 && head == o.head && norm_mean == o.norm_mean &&
         norm_scale == o.norm_scale;
}


double batch_loss(const MembershipModel& model, std::span<const FeatureVector> xs,
                  std::span<const HallucinationLabel> ys, const std::array<double, kNumClasses>& class_weight,
                  std::vector<std::vector<double>>* gradients) {
  if (xs.size() != ys.size() || xs.empty()) throw Error(ErrorKind::Invalid, "batch inputs and labels differ in size");
  const auto params = model.parameters();
  if (gradients) {
    gradients->resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) (*gradients)[i].assign(params[i]->size(), 0.0);
  }
  const ModelShape& s = model.shape();
  const double inv_n = 1.0 / static_cast<double>(xs.size());

  Activations act;
  std::vector<double> dlogits(kNumClasses), dv2(s.trunk_hidden2), du2(s.trunk_hidden2), dv1(s.trunk_hidden1),
      du1(s.trunk_hidden1), dz(kNumInputs), dg2(kNumTraceFeatures), da1(s.gate_hidden), dg1(s.gate_hidden);

  double loss = 0;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    const auto& x = xs[n];
    const int y = static_cast<int>(ys[n]);
    run_forward(model, x, act);
    const double w = class_weight[static_cast<std::size_t>(y)];
    loss += w * -std::log(std::max(act.p[static_cast<std::size_t>(y)], 1e-300)) * inv_n;
    if (!gradients) continue;

    auto& g = *gradients;
    for (int c = 0; c < kNumClasses; ++c) {
      dlogits[static_cast<std::size_t>(c)] = w * inv_n * (act.p[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0));
    }
    affine_backward(model.head, act.v2.data(), dlogits.data(), g[8].data(), g[9].data(), dv2.data());
    for (std::size_t i = 0; i < s.trunk_hidden2; ++i) du2[i] = dv2[i] * silu_grad(act.u2[i]);
    affine_backward(model.trunk2, act.v1.data(), du2.data(), g[6].data(), g[7].data(), dv1.data());
    for (std::size_t i = 0; i < s.trunk_hidden1; ++i) du1[i] = dv1[i] * silu_grad(act.u1[i]);
    affine_backward(model.trunk1, act.z.data(), du1.data(), g[4].data(), g[5].data(), dz.data());
    for (std::size_t i = 0; i < kNumTraceFeatures; ++i) {
      const double gt = act.gate[i];
      dg2[i] = dz[i] * x[i] * gt * (1.0 - gt);
    }
    affine_backward(model.gate2, act.a1.data(), dg2.data(), g[2].data(), g[3].data(), da1.data());
    for (std::size_t i = 0; i < s.gate_hidden; ++i) dg1[i] = da1[i] * silu_grad(act.g1[i]);
    affine_backward(model.gate1, x.data() + kNumTraceFeatures, dg1.data(), g[0].data(), g[1].data(), nullptr);
  }
  return loss;
}

double hallucination_score(const ClassProbabilities& p) { return 1.0 - p[0]; }

std::string encode_model(const MembershipModel& m) {
  Container c;
  const ModelShape& s = m.shape();
  c.meta = {{"shape", {{"gate_hidden", s.gate_hidden}, {"trunk_hidden1", s.trunk_hidden1}, {"trunk_hidden2", s.trunk_hidden2}}},
            {"feature_schema_hash", hex64(feature_schema_hash())},
            {"classes", {"CORRECT", "CATEGORY_HALLUC", "ATTRIBUTE_HALLUC", "RELATION_HALLUC"}},
            {"config", m.config_echo}};
  auto add_dense = [&](const std::string& name, const Dense& d) {
    c.tensors.push_back(f64_tensor(name + ".weight", {d.out, d.in}, d.w));
    c.tensors.push_back(f64_tensor(name + ".bias", {d.out}, d.b));
  };
  add_dense("gate1", m.gate1);
  add_dense("gate2", m.gate2);
  add_dense("trunk1", m.trunk1);
  add_dense("trunk2", m.trunk2);
  add_dense("head", m.head);
  c.tensors.push_back(f64_tensor("norm.mean", {kNumInputs}, {m.norm_mean.begin(), m.norm_mean.end()}));
  c.tensors.push_back(f64_tensor("norm.scale", {kNumInputs}, {m.norm_scale.begin(), m.norm_scale.end()}));
  return encode_container(std::string_view(kModelMagic, 4), kModelVersion, c);
}

MembershipModel decode_model(std::string_view bytes) {
  const Container c = decode_container(bytes, std::string_view(kModelMagic, 4), kModelVersion);
  ModelShape shape;
  try {
    const auto& s = c.meta.at("shape");
    shape.gate_hidden = s.at("gate_hidden").get<std::size_t>();
    shape.trunk_hidden1 = s.at("trunk_hidden1").get<std::size_t>();
    shape.trunk_hidden2 = s.at("trunk_hidden2").get<std::size_t>();
    if (c.meta.at("feature_schema_hash").get<std::string>() != hex64(feature_schema_hash())) {
      throw Error(ErrorKind::Inconsistent, "model was trained against a different feature schema");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Inconsistent, std::string("model header: ") + e.what());
  }

  MembershipModel m = MembershipModel::initialize(shape, 0);
  m.config_echo = c.meta.value("config", nlohmann::json::object());
  auto take = [&](const std::string& name, std::vector<double>& dst) {
    const NamedTensor* t = c.find(name);
    if (!t || t->dtype != DType::F64 || t->f64.size() != dst.size()) {
      throw Error(ErrorKind::Inconsistent, "model tensor " + name + " missing or mis-shaped");
    }
    dst = t->f64;
  };
  auto take_dense = [&](const std::string& name, Dense& d) {
    take(name + ".weight", d.w);
    take(name + ".bias", d.b);
  };
  take_dense("gate1", m.gate1);
  take_dense("gate2", m.gate2);
  take_dense("trunk1", m.trunk1);
  take_dense("trunk2", m.trunk2);
  take_dense("head", m.head);
  std::vector<double> mean(kNumInputs), scale(kNumInputs);
  take("norm.mean", mean);
  take("norm.scale", scale);
  std::copy(mean.begin(), mean.end(), m.norm_mean.begin());
  std::copy(scale.begin(), scale.end(), m.norm_scale.begin());
  return m;
}

void save_model(const MembershipModel& model, const std::string& path) { write_file(path, encode_model(model)); }

MembershipModel load_model(const std::string& path) { return decode_model(read_file(path)); }

}  // namespace hspp
