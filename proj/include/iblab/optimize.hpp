// Softmax-parameterized encoders and multi-restart gradient descent.

#pragma once

#include "iblab/prob.hpp"
#include "iblab/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cfloat>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace iblab {

struct OptimizerConfig {
  // The IB and DisenIB solvers divide each logit row's gradient by p(x)
  // before stepping, so this is a step per unit of row mass.
  double step_size = 0.5;
  int max_iters = 5000;
  double grad_tolerance = 1e-7;
  int restarts = 10;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
  // 0 selects std::thread::hardware_concurrency(); results never depend on it.
  unsigned threads = 0;

  static OptimizerConfig lagrangian_defaults() { return {}; }

  static OptimizerConfig disenib_defaults() {
    OptimizerConfig cfg;
    cfg.restarts = 20;
    return cfg;
  }

  void validate() const {
    if (!(step_size > 0.0)) throw ValidationError("optimizer: step_size must be positive");
    if (max_iters < 1) throw ValidationError("optimizer: max_iters must be positive");
    if (!(grad_tolerance > 0.0)) throw ValidationError("optimizer: grad_tolerance must be positive");
    if (restarts < 1) throw ValidationError("optimizer: restarts must be positive");
    if (!(init_scale >= 0.0)) throw ValidationError("optimizer: init_scale must be nonnegative");
  }
};

inline double safe_log(double v) { return std::log(std::max(v, DBL_MIN)); }

inline Matrix row_log_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    double z = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) z += std::exp(logits(r, c) - mx);
    const double lse = mx + std::log(z);
    for (Eigen::Index c = 0; c < logits.cols(); ++c) out(r, c) = logits(r, c) - lse;
  }
  return out;
}

inline Matrix row_softmax(const Matrix& logits) {
  Matrix out = row_log_softmax(logits).array().exp().matrix();
  // Renormalize so rows meet the simplex tolerance exactly.
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) /= out.row(r).sum();
  return out;
}

inline Encoder softmax_encoder(const Matrix& logits) { return Encoder(row_softmax(logits)); }

// Pulls d f / d q(z|x) back through the row-wise softmax.
inline Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs) {
  Matrix out(probs.rows(), probs.cols());
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double mean = probs.row(r).dot(grad_probs.row(r));
    out.row(r) = probs.row(r).array() * (grad_probs.row(r).array() - mean);
  }
  return out;
}

inline Matrix random_logits(Eigen::Index rows, Eigen::Index cols, double scale, CounterRng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

inline double max_abs(const std::vector<Matrix>& ms) {
  double out = 0.0;
  for (const auto& m : ms)
    if (m.size() > 0) out = std::max(out, m.cwiseAbs().maxCoeff());
  return out;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first
// exception after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

struct DescentRun {
  std::vector<Matrix> params;
  double objective = std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  int restart = 0;
  std::uint64_t seed = 0;
};

// Fixed-step gradient descent. `objective(params, grads)` returns the value
// and writes the descent direction for each parameter block into grads;
// the run stops once its max-norm drops below grad_tolerance.
template <typename Objective>
DescentRun gradient_descent(const Objective& objective, std::vector<Matrix> params,
                            const OptimizerConfig& cfg) {
  std::vector<Matrix> grads(params.size());
  DescentRun run;
  for (int it = 0; it < cfg.max_iters; ++it) {
    run.objective = objective(params, grads);
    run.grad_norm = max_abs(grads);
    run.iterations = it;
    if (run.grad_norm < cfg.grad_tolerance) {
      run.converged = true;
      run.params = std::move(params);
      return run;
    }
    for (std::size_t b = 0; b < params.size(); ++b) params[b] -= cfg.step_size * grads[b];
  }
  run.objective = objective(params, grads);
  run.grad_norm = max_abs(grads);
  run.converged = run.grad_norm < cfg.grad_tolerance;
  run.iterations = cfg.max_iters;
  run.params = std::move(params);
  return run;
}

struct BlockShape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

// Restart r starts from N(0, init_scale^2) logits drawn from the stream
// derive_seed(cfg.seed, r). The lowest objective wins; ties go to the
// lower restart index, so the result is independent of thread scheduling.
template <typename Objective>
DescentRun multi_restart(const Objective& objective, const std::vector<BlockShape>& shapes,
                         const OptimizerConfig& cfg) {
  cfg.validate();
  std::vector<DescentRun> runs(static_cast<std::size_t>(cfg.restarts));
  parallel_for(runs.size(), cfg.threads, [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(cfg.seed, r);
    CounterRng rng(seed);
    std::vector<Matrix> init;
    init.reserve(shapes.size());
    for (const auto& s : shapes) init.push_back(random_logits(s.rows, s.cols, cfg.init_scale, rng));
    runs[r] = gradient_descent(objective, std::move(init), cfg);
    runs[r].restart = static_cast<int>(r);
    runs[r].seed = seed;
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].objective < runs[best].objective) best = r;
  return std::move(runs[best]);
}

}  // namespace iblab
