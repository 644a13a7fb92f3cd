#include <algorithm>
#include <cmath>
#include <numeric>

#include "hspp/common.hpp"
#include "hspp/features.hpp"

namespace hspp {
namespace shift {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::Invalid, "cosine: length mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::Range, "cosine of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::Invalid, "cosine: length mismatch");
  const bool za = std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; });
  const bool zb = std::all_of(b.begin(), b.end(), [](double v) { return v == 0.0; });
  if (za && zb) return 0.0;
  if (za || zb) return 1.0;
  if (std::equal(a.begin(), a.end(), b.begin())) return 0.0;
  return 1.0 - cosine_similarity(a, b);
}

double mean_shift_norm(std::span<const double> a, std::span<const double> b, std::size_t cols) {
  if (a.size() != b.size() || cols == 0 || a.size() % cols != 0) {
    throw Error(ErrorKind::Invalid, "mean shift: incompatible shapes");
  }
  const std::size_t rows = a.size() / cols;
  double acc = 0;
  for (std::size_t c = 0; c < cols; ++c) {
    double diff = 0;
    for (std::size_t r = 0; r < rows; ++r) diff += b[r * cols + c] - a[r * cols + c];
    diff /= static_cast<double>(rows);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw Error(ErrorKind::Invalid, "wasserstein: size mismatch");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double acc = 0;
  for (std::size_t i = 0; i < sa.size(); ++i) acc += std::abs(sa[i] - sb[i]);
  return acc / static_cast<double>(sa.size());
}

std::vector<double> softmax(std::span<const double> x) {
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  const double m = *std::max_element(x.begin(), x.end());
  double z = 0;
  for (std::size_t i = 0; i < x.size(); ++i) z += (out[i] = std::exp(x[i] - m));
  for (auto& v : out) v /= z;
  return out;
}

double entropy(std::span<const double> p) {
  double h = 0;
  for (double v : p) {
    if (v > 0) h -= v * std::log(v);
  }
  return h;
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorKind::Invalid, "js divergence: size mismatch");
  double js = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) js += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0) js += 0.5 * q[i] * std::log(q[i] / m);
  }
  return std::clamp(js, 0.0, std::log(2.0));
}

double variance_ratio(std::span<const double> earlier, std::span<const double> later) {
  auto variance = [](std::span<const double> x) {
    const double s = stats::pstdev(x);
    return s * s;
  };
  const double ve = variance(earlier), vl = variance(later);
  if (ve == 0.0) return vl == 0.0 ? 1.0 : 1e6;
  return std::clamp(vl / ve, 1e-6, 1e6);
}

double sign_flip_rate(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw Error(ErrorKind::Invalid, "sign flip: size mismatch");
  std::size_t flips = 0;
  for (std::size_t i = 0; i < a.size(); ++i) flips += (a[i] > 0) != (b[i] > 0);
  return static_cast<double>(flips) / static_cast<double>(a.size());
}

std::vector<double> normalize(std::span<const double> w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0)) throw Error(ErrorKind::Range, "weights sum to zero");
  std::vector<double> out(w.begin(), w.end());
  for (auto& v : out) v /= total;
  return out;
}

}  // namespace shift

namespace {

std::vector<double> widen(const std::vector<float>& v) { return {v.begin(), v.end()}; }

template <std::size_t Metrics>
void summarize_into(const std::array<std::vector<double>, Metrics>& series, double* out) {
  for (std::size_t m = 0; m < Metrics; ++m) {
    const auto s = stats::summarize(series[m]);
    out[m * 5 + 0] = s.mean;
    out[m * 5 + 1] = s.std;
    out[m * 5 + 2] = s.min;
    out[m * 5 + 3] = s.max;
    out[m * 5 + 4] = s.last;
  }
}

}  // namespace

std::array<double, 30> hidden_shift_block(const GenerationTrace& trace) {
  if (trace.hidden.size() < 2) throw Error(ErrorKind::Invalid, "hidden shift needs at least 2 layers");
  std::array<std::vector<double>, 6> series;
  std::vector<double> prev;
  std::size_t cols = 0;
  bool first = true;
  for (const auto& [layer, tensor] : trace.hidden) {
    auto cur = widen(tensor.values);
    if (!first) {
      if (cur.size() != prev.size()) throw Error(ErrorKind::Invalid, "hidden layers differ in size");
      series[0].push_back(shift::cosine_distance(prev, cur));
      series[1].push_back(shift::mean_shift_norm(prev, cur, cols));
      series[2].push_back(shift::wasserstein1(prev, cur));
      series[3].push_back(shift::js_divergence(shift::softmax(prev), shift::softmax(cur)));
      series[4].push_back(shift::variance_ratio(prev, cur));
      series[5].push_back(shift::sign_flip_rate(prev, cur));
    }
    cols = tensor.shape.size() == 2 ? tensor.shape[1] : tensor.size();
    prev = std::move(cur);
    first = false;
  }
  std::array<double, 30> out{};
  summarize_into(series, out.data());
  return out;
}

std::array<double, 20> attention_shift_block(const GenerationTrace& trace) {
  if (trace.attention.size() < 2) throw Error(ErrorKind::Invalid, "attention shift needs at least 2 layers");
  std::array<std::vector<double>, 4> series;
  std::vector<double> prev_raw, prev_dist;
  bool first = true;
  for (const auto& [layer, tensor] : trace.attention) {
    auto raw = widen(tensor.values);
    auto dist = shift::normalize(raw);
    if (!first) {
      if (raw.size() != prev_raw.size()) throw Error(ErrorKind::Invalid, "attention layers differ in size");
      series[0].push_back(shift::entropy(prev_dist) - shift::entropy(dist));
      series[1].push_back(shift::js_divergence(prev_dist, dist));
      series[2].push_back(*std::max_element(dist.begin(), dist.end()) -
                          *std::max_element(prev_dist.begin(), prev_dist.end()));
      series[3].push_back(shift::cosine_distance(prev_raw, raw));
    }
    prev_raw = std::move(raw);
    prev_dist = std::move(dist);
    first = false;
  }
  std::array<double, 20> out{};
  summarize_into(series, out.data());
  return out;
}

std::array<double, 12> probability_block(std::span<const double> p) {
  if (p.empty()) throw Error(ErrorKind::Invalid, "probability block needs at least one token");
  std::vector<double> logs;
  logs.reserve(p.size());
  std::size_t below_quarter = 0, below_three_quarters = 0;
  for (double v : p) {
    if (!(v > 0.0)) throw Error(ErrorKind::Range, "probabilities must be positive");
    logs.push_back(std::log(v));
    below_quarter += v < 0.25;
    below_three_quarters += v < 0.75;
  }
  const auto n = static_cast<double>(p.size());
  const double mean_log = stats::mean(logs);
  return {stats::mean(p),
          stats::pstdev(p),
          *std::min_element(p.begin(), p.end()),
          *std::max_element(p.begin(), p.end()),
          stats::median(p),
          p.front(),
          p.back(),
          mean_log,
          stats::pstdev(logs),
          static_cast<double>(below_quarter) / n,
          static_cast<double>(below_three_quarters) / n,
          std::exp(mean_log)};
}

std::array<double, kNumBaselineFeatures> baseline_features(const GenerationTrace& trace) {
  std::array<double, kNumBaselineFeatures> out{};
  const auto h = hidden_shift_block(trace);
  const auto a = attention_shift_block(trace);
  const std::vector<double> p(trace.p_max.begin(), trace.p_max.end());
  const auto pr = probability_block(p);
  std::copy(h.begin(), h.end(), out.begin());
  std::copy(a.begin(), a.end(), out.begin() + 30);
  std::copy(pr.begin(), pr.end(), out.begin() + 50);
  return out;
}

}  // namespace hspp
