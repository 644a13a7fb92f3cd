#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <thread>

#include "hspp/evaluation.hpp"
#include "hspp/synth.hpp"

namespace hspp {

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<std::pair<std::string, double>> permutation_importance(const MembershipModel& model,
                                                                   std::span<const LabeledExample> data,
                                                                   const Metric& metric,
                                                                   const ImportanceOptions& options) {
  if (options.repeats < 1) throw Error(ErrorKind::Invalid, "importance needs at least one repeat");
  std::vector<FeatureVector> xs;
  std::vector<HallucinationLabel> ys;
  for (const auto& e : data) {
    xs.push_back(model.standardize(e.x));
    ys.push_back(e.y);
  }
  auto score = [&](const std::vector<FeatureVector>& inputs) {
    std::vector<ClassProbabilities> probs(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) probs[i] = model.forward_standardized(inputs[i]);
    return metric(probs, ys);
  };
  const double reference = score(xs);

  std::vector<double> delta(kNumInputs, 0.0);
  parallel_for(kNumInputs, options.threads, [&](std::size_t f) {
    Rng rng(derive_seed(options.seed, "permute/" + std::to_string(f)));
    std::vector<FeatureVector> shuffled = xs;
    std::vector<double> column(xs.size());
    double total = 0;
    for (int r = 0; r < options.repeats; ++r) {
      for (std::size_t i = 0; i < xs.size(); ++i) column[i] = xs[i][f];
      for (std::size_t i = column.size(); i > 1; --i) std::swap(column[i - 1], column[rng.index(i)]);
      for (std::size_t i = 0; i < xs.size(); ++i) shuffled[i][f] = column[i];
      total += score(shuffled);
    }
    delta[f] = reference - total / options.repeats;
  });

  const auto& names = feature_names();
  std::vector<std::size_t> order(kNumInputs);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return delta[a] > delta[b]; });
  std::vector<std::pair<std::string, double>> out;
  for (auto f : order) out.emplace_back(names[f], delta[f]);
  return out;
}

}  // namespace hspp
