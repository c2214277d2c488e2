// Synthetic joint distributions p(x, y) used as test beds.

#pragma once

#include "iblab/prob.hpp"
#include "iblab/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <string>

namespace iblab {

enum class InstanceFamily { deterministic_mod, noisy_mod, random_joint };

struct InstanceSpec {
  InstanceFamily family = InstanceFamily::deterministic_mod;
  std::size_t n = 8;
  std::size_t k = 2;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

inline std::string to_string(InstanceFamily f) {
  switch (f) {
    case InstanceFamily::deterministic_mod: return "deterministic_mod";
    case InstanceFamily::noisy_mod: return "noisy_mod";
    case InstanceFamily::random_joint: return "random_joint";
  }
  return "unknown";
}

inline std::vector<std::string> prefixed_labels(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// X uniform over n outcomes, y = x mod k.
inline JointXY make_deterministic(std::size_t n, std::size_t k) {
  if (k == 0 || n == 0) throw ValidationError("make_deterministic: n and k must be positive");
  if (k > n) throw ValidationError("make_deterministic: k must not exceed n");
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t x = 0; x < n; ++x) m(x, x % k) = 1.0 / static_cast<double>(n);
  return JointXY(std::move(m), prefixed_labels("x", n), prefixed_labels("y", k));
}

// Symmetric label flip on top of make_deterministic: each x keeps its label
// with probability 1 - eta and spreads eta evenly over the other k - 1.
// The seed is accepted for interface symmetry; the construction is exact.
inline JointXY make_noisy(std::size_t n, std::size_t k, double eta, std::uint64_t /*seed*/ = 0) {
  if (!(eta >= 0.0 && eta < 1.0)) throw ValidationError("make_noisy: eta must lie in [0, 1)");
  if (k < 2) throw ValidationError("make_noisy: k must be at least 2");
  if (k > n) throw ValidationError("make_noisy: k must not exceed n");
  const double px = 1.0 / static_cast<double>(n);
  const double off = eta / static_cast<double>(k - 1);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < k; ++y) m(x, y) = px * (y == x % k ? 1.0 - eta : off);
  return JointXY(std::move(m), prefixed_labels("x", n), prefixed_labels("y", k));
}

// Entries drawn i.i.d. from Uniform[0.05, 1) and normalized.
inline JointXY make_random_joint(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (n == 0 || k == 0) throw ValidationError("make_random_joint: n and k must be positive");
  CounterRng rng(seed, 0x6a6f696e74ULL);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  CompensatedSum total;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = 0.05 + 0.95 * rng.uniform();
    total.add(m.data()[i]);
  }
  m /= total.value();
  return JointXY(std::move(m), prefixed_labels("x", n), prefixed_labels("y", k));
}

inline JointXY make_instance(const InstanceSpec& spec) {
  switch (spec.family) {
    case InstanceFamily::deterministic_mod: return make_deterministic(spec.n, spec.k);
    case InstanceFamily::noisy_mod: return make_noisy(spec.n, spec.k, spec.noise, spec.seed);
    case InstanceFamily::random_joint: return make_random_joint(spec.n, spec.k, spec.seed);
  }
  throw ValidationError("make_instance: unknown family");
}

// Largest number of x values that share some label with positive mass;
// the class size for deterministic instances.
inline std::size_t max_class_size(const JointXY& data) {
  std::size_t best = 0;
  for (std::size_t y = 0; y < data.card_y(); ++y) {
    std::size_t c = 0;
    for (std::size_t x = 0; x < data.card_x(); ++x)
      if (data.probs()(x, y) > kZeroFloor) ++c;
    best = std::max(best, c);
  }
  return std::max<std::size_t>(best, 1);
}

inline std::size_t support_size_y(const JointXY& data) {
  std::size_t c = 0;
  for (double v : data.py_values())
    if (v > kZeroFloor) ++c;
  return c;
}

inline bool is_deterministic(const JointXY& data) {
  for (std::size_t x = 0; x < data.card_x(); ++x) {
    std::size_t nz = 0;
    for (std::size_t y = 0; y < data.card_y(); ++y)
      if (data.probs()(x, y) > kZeroFloor) ++nz;
    if (nz > 1) return false;
  }
  return true;
}

}  // namespace iblab
