// The IB Lagrangian family  -I(T;Y) + beta * h(I(X;T))  over softmax encoders,
// beta sweeps, and the search for the beta that hits a compression level.

#pragma once

#include "iblab/optimize.hpp"
#include "iblab/prob.hpp"

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace iblab {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BracketError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Monotone transform h applied to I(X;T). Every kind satisfies h(0) = 0.
struct Surrogate {
  enum class Kind { identity, square, power, exponential };

  Kind kind = Kind::identity;
  double param = 1.0;

  static Surrogate identity() { return {Kind::identity, 1.0}; }
  static Surrogate square() { return {Kind::square, 2.0}; }
  static Surrogate power(double u) {
    if (!(u > 1.0)) throw ValidationError("surrogate: power exponent must exceed 1");
    return {Kind::power, u};
  }
  // h(u) = exp(scale * u) - 1
  static Surrogate exponential(double scale) {
    if (!(scale > 0.0)) throw ValidationError("surrogate: exponential scale must be positive");
    return {Kind::exponential, scale};
  }

  double value(double u) const {
    switch (kind) {
      case Kind::identity: return u;
      case Kind::square: return u * u;
      case Kind::power: return std::pow(u, param);
      case Kind::exponential: return std::expm1(param * u);
    }
    return u;
  }

  double derivative(double u) const {
    switch (kind) {
      case Kind::identity: return 1.0;
      case Kind::square: return 2.0 * u;
      case Kind::power: return param * std::pow(u, param - 1.0);
      case Kind::exponential: return param * std::exp(param * u);
    }
    return 1.0;
  }

  // identity | square | power:<u> | exp:<scale>
  static Surrogate parse(const std::string& text) {
    if (text == "identity") return identity();
    if (text == "square") return square();
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
      const std::string head = text.substr(0, colon);
      double arg = 0.0;
      try {
        std::size_t used = 0;
        arg = std::stod(text.substr(colon + 1), &used);
        if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ValidationError("surrogate: bad numeric argument in '" + text + "'");
      }
      if (head == "power") return power(arg);
      if (head == "exp") return exponential(arg);
    }
    throw ValidationError("surrogate: unknown kind '" + text + "'");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::identity: return "identity";
      case Kind::square: return "square";
      case Kind::power: return "power:" + format_arg();
      case Kind::exponential: return "exp:" + format_arg();
    }
    return "identity";
  }

 private:
  std::string format_arg() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", param);
    return buf;
  }
};

// Realized encoder is the row-wise softmax of the logits.
struct EncoderParams {
  Matrix logits;

  Encoder encoder() const { return softmax_encoder(logits); }
  static EncoderParams uniform(std::size_t card_x, std::size_t card_t) {
    return {Matrix::Zero(static_cast<Eigen::Index>(card_x), static_cast<Eigen::Index>(card_t))};
  }
};

struct LagrangianValue {
  double objective = 0.0;
  double i_xt = 0.0;
  double i_ty = 0.0;
};

struct IBPoint {
  double beta = 0.0;
  double i_xt = 0.0;
  double i_ty = 0.0;
  double objective = 0.0;
  bool converged = false;
  int restarts_used = 0;
  std::uint64_t best_restart_seed = 0;
  int iterations = 0;
};

namespace detail {

inline void require_beta(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be finite and nonnegative");
}

inline void require_logit_rows(const JointXY& data, const Matrix& logits) {
  if (static_cast<std::size_t>(logits.rows()) != data.card_x() || logits.cols() < 1)
    throw DimensionError("encoder logits must have |X| = " + std::to_string(data.card_x()) +
                         " rows and at least one column");
}

// Precomputed data marginals shared by the hot loop.
struct DataView {
  explicit DataView(const JointXY& d) : pxy(d.probs()) {
    const auto px_v = d.px_values();
    const auto py_v = d.py_values();
    px = Eigen::Map<const Eigen::VectorXd>(px_v.data(), static_cast<Eigen::Index>(px_v.size()));
    py = Eigen::Map<const Eigen::VectorXd>(py_v.data(), static_cast<Eigen::Index>(py_v.size()));
    inv_px = px.unaryExpr([](double v) { return v > 0.0 ? 1.0 / v : 0.0; });
  }
  Matrix pxy;
  Eigen::VectorXd px;
  Eigen::VectorXd py;
  Eigen::VectorXd inv_px;
};

// Every logit-gradient row carries a factor p(x); dividing it out gives each
// row the same step regardless of |X| or how the mass is spread.
inline void precondition(const DataView& d, Matrix& grad) { grad = d.inv_px.asDiagonal() * grad; }

// I(X;T) and I(T;Y) for an encoder given in log space, plus their
// gradients with respect to q(t|x) when requested.
struct EncoderInfo {
  double i_xt = 0.0;
  double i_ty = 0.0;
  Matrix d_ixt;
  Matrix d_ity;
};

inline EncoderInfo encoder_info(const DataView& d, const Matrix& q, const Matrix& log_q, bool with_grad) {
  const Eigen::Index n = q.rows();
  const Eigen::Index m = q.cols();
  const Eigen::Index k = d.pxy.cols();
  const Eigen::VectorXd qt = q.transpose() * d.px;
  const Matrix qyt = d.pxy.transpose() * q;  // k x m
  Eigen::VectorXd log_qt(m);
  for (Eigen::Index t = 0; t < m; ++t) log_qt(t) = safe_log(qt(t));
  Matrix log_qyt(k, m);
  for (Eigen::Index i = 0; i < log_qyt.size(); ++i) log_qyt.data()[i] = safe_log(qyt.data()[i]);

  EncoderInfo out;
  CompensatedSum ixt, ity;
  for (Eigen::Index x = 0; x < n; ++x) {
    if (d.px(x) < kZeroFloor) continue;
    for (Eigen::Index t = 0; t < m; ++t) {
      const double w = d.px(x) * q(x, t);
      if (w < kZeroFloor) continue;
      ixt.add(w * (log_q(x, t) - log_qt(t)));
    }
  }
  for (Eigen::Index y = 0; y < k; ++y) {
    if (d.py(y) < kZeroFloor) continue;
    for (Eigen::Index t = 0; t < m; ++t) {
      const double w = qyt(y, t);
      if (w < kZeroFloor) continue;
      ity.add(w * (log_qyt(y, t) - log_qt(t) - std::log(d.py(y))));
    }
  }
  out.i_xt = std::max(ixt.value(), 0.0);
  out.i_ty = std::max(ity.value(), 0.0);
  if (!with_grad) return out;

  out.d_ixt.resize(n, m);
  out.d_ity.resize(n, m);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index t = 0; t < m; ++t) {
      out.d_ixt(x, t) = d.px(x) * (log_q(x, t) - log_qt(t));
      double acc = 0.0;
      for (Eigen::Index y = 0; y < k; ++y) {
        const double pxy = d.pxy(x, y);
        if (pxy == 0.0) continue;
        acc += pxy * (log_qyt(y, t) - log_qt(t));
      }
      out.d_ity(x, t) = acc;
    }
  return out;
}

inline LagrangianValue lagrangian_kernel(const DataView& d, const Matrix& logits, double beta,
                                         const Surrogate& h, Matrix* grad) {
  const Matrix log_q = row_log_softmax(logits);
  const Matrix q = log_q.array().exp().matrix();
  const EncoderInfo info = encoder_info(d, q, log_q, grad != nullptr);
  LagrangianValue v{-info.i_ty + beta * h.value(info.i_xt), info.i_xt, info.i_ty};
  if (grad) {
    const Matrix dq = -info.d_ity + (beta * h.derivative(info.i_xt)) * info.d_ixt;
    *grad = softmax_backward(q, dq);
  }
  return v;
}

}  // namespace detail

// Both informations are computed through the validated prob-core path.
inline LagrangianValue eval_lagrangian(const JointXY& data, const EncoderParams& params, double beta,
                                       const Surrogate& h) {
  detail::require_beta(beta);
  detail::require_logit_rows(data, params.logits);
  const Encoder enc = params.encoder();
  const double i_xt = mutual_information(compose_xt(data, enc));
  const double i_ty = mutual_information(compose_yt(data, enc));
  return {-i_ty + beta * h.value(i_xt), i_xt, i_ty};
}

inline Matrix grad_lagrangian(const JointXY& data, const EncoderParams& params, double beta,
                              const Surrogate& h) {
  detail::require_beta(beta);
  detail::require_logit_rows(data, params.logits);
  Matrix g;
  detail::lagrangian_kernel(detail::DataView(data), params.logits, beta, h, &g);
  return g;
}

inline IBPoint optimize_at_beta(const JointXY& data, double beta, const Surrogate& h, std::size_t card_t,
                                const OptimizerConfig& cfg) {
  detail::require_beta(beta);
  if (card_t < 1) throw ValidationError("optimize_at_beta: card_t must be positive");
  const detail::DataView view(data);
  auto objective = [&](const std::vector<Matrix>& p, std::vector<Matrix>& g) {
    const double v = detail::lagrangian_kernel(view, p[0], beta, h, &g[0]).objective;
    detail::precondition(view, g[0]);
    return v;
  };
  const DescentRun best = multi_restart(
      objective, {{static_cast<Eigen::Index>(data.card_x()), static_cast<Eigen::Index>(card_t)}}, cfg);
  const LagrangianValue v = eval_lagrangian(data, EncoderParams{best.params[0]}, beta, h);
  IBPoint pt;
  pt.beta = beta;
  pt.i_xt = v.i_xt;
  pt.i_ty = v.i_ty;
  pt.objective = v.objective;
  pt.converged = best.converged;
  pt.restarts_used = cfg.restarts;
  pt.best_restart_seed = best.seed;
  pt.iterations = best.iterations;
  return pt;
}

inline std::vector<IBPoint> sweep_beta(const JointXY& data, const std::vector<double>& betas,
                                       const Surrogate& h, std::size_t card_t, const OptimizerConfig& cfg) {
  for (std::size_t i = 0; i < betas.size(); ++i) {
    detail::require_beta(betas[i]);
    if (i > 0 && betas[i] < betas[i - 1]) throw ValidationError("sweep_beta: betas must be ascending");
  }
  std::vector<IBPoint> out;
  out.reserve(betas.size());
  for (double b : betas) out.push_back(optimize_at_beta(data, b, h, card_t, cfg));
  return out;
}

// count values from lo to hi inclusive, geometric when `log_spaced`.
inline std::vector<double> beta_grid(std::size_t count, double lo, double hi, bool log_spaced = true) {
  if (count == 0) throw ValidationError("beta grid: count must be positive");
  if (!(hi >= lo) || lo < 0.0) throw ValidationError("beta grid: need 0 <= lo <= hi");
  if (log_spaced && !(lo > 0.0)) throw ValidationError("beta grid: log spacing needs lo > 0");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(count - 1);
    out[i] = log_spaced ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))) : lo + f * (hi - lo);
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

inline constexpr double kCompressionTolerance = 0.02;
inline constexpr int kMaxBisectionSteps = 30;

struct CompressionSearch {
  double beta = 0.0;
  IBPoint point;
  bool within_tolerance = false;
  int bisection_steps = 0;
};

// Bisects beta in [beta_lo, beta_hi] until |I(X;T) - target| <= 0.02 nats
// or 30 steps are spent; returns the closest point seen. I(X;T) is assumed
// to decrease with beta, and a bracket whose endpoints fall on the same side
// of the target raises BracketError.
inline CompressionSearch beta_at_compression(const JointXY& data, double target_r, const Surrogate& h,
                                             std::size_t card_t, const OptimizerConfig& cfg, double beta_lo,
                                             double beta_hi) {
  detail::require_beta(beta_lo);
  detail::require_beta(beta_hi);
  if (!(beta_lo < beta_hi)) throw ValidationError("beta_at_compression: need beta_lo < beta_hi");
  if (!(target_r >= 0.0) || !(target_r < entropy_x(data)))
    throw ValidationError("beta_at_compression: target must lie in [0, H(X))");

  CompressionSearch best;
  double best_err = std::numeric_limits<double>::infinity();
  auto consider = [&](const IBPoint& pt) {
    const double err = std::abs(pt.i_xt - target_r);
    if (err < best_err) {
      best_err = err;
      best.beta = pt.beta;
      best.point = pt;
      best.within_tolerance = err <= kCompressionTolerance;
    }
    return err <= kCompressionTolerance;
  };

  IBPoint lo = optimize_at_beta(data, beta_lo, h, card_t, cfg);
  if (consider(lo)) return best;
  IBPoint hi = optimize_at_beta(data, beta_hi, h, card_t, cfg);
  if (consider(hi)) return best;
  if ((lo.i_xt - target_r) * (hi.i_xt - target_r) > 0.0) {
    throw BracketError("beta_at_compression: I(X;T) is " + std::to_string(lo.i_xt) + " at beta=" +
                       std::to_string(beta_lo) + " and " + std::to_string(hi.i_xt) + " at beta=" +
                       std::to_string(beta_hi) + ", both on the same side of target " +
                       std::to_string(target_r));
  }
  const bool decreasing = lo.i_xt > hi.i_xt;
  double a = beta_lo, b = beta_hi;
  for (int step = 1; step <= kMaxBisectionSteps; ++step) {
    const double mid = 0.5 * (a + b);
    const IBPoint pt = optimize_at_beta(data, mid, h, card_t, cfg);
    best.bisection_steps = step;
    if (consider(pt)) return best;
    const bool above = pt.i_xt > target_r;
    if (above == decreasing)
      a = mid;
    else
      b = mid;
  }
  return best;
}

}  // namespace iblab
