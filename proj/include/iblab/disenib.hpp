// Disentangled IB objective  -I(T;Y) - I(X;S,Y) + I(S;T)  over the encoder
// pair (q(s|x), q(t|x)), its optimizer, and the maximum-compression check.
//
// The three terms carry unit weights and there is no trade-off parameter.

#pragma once

#include "iblab/instances.hpp"
#include "iblab/lagrangian.hpp"
#include "iblab/optimize.hpp"
#include "iblab/prob.hpp"

#include <cstdint>
#include <utility>

namespace iblab {

struct DisenIBParams {
  Matrix logits_t;
  Matrix logits_s;

  Encoder encoder_t() const { return softmax_encoder(logits_t); }
  Encoder encoder_s() const { return softmax_encoder(logits_s); }
};

struct DisenIBValue {
  double objective = 0.0;
  InformationTerms terms;
};

struct DisenIBGradient {
  Matrix logits_t;
  Matrix logits_s;
};

// Distance from the maximum-compression point I(X;T) = I(T;Y) = H(Y).
struct ConsistencyReport {
  double gap = 0.0;
  double epsilon = 0.0;
  bool consistent = false;
  double i_xt = 0.0;
  double i_ty = 0.0;
  double i_xsy = 0.0;
  double i_st = 0.0;
  double objective = 0.0;
  double h_x = 0.0;
  double h_y = 0.0;
  double i_xy = 0.0;
  // Same gap measured against I(X;Y); differs from `gap` only when Y is
  // not a deterministic function of X.
  double gap_vs_i_xy = 0.0;
  // H(X) - I(X;S,Y): reconstruction capacity S failed to provide.
  double capacity_shortfall = 0.0;
};

struct DisenIBResult {
  DisenIBParams params;
  ConsistencyReport report;
  bool converged = false;
  int restarts_used = 0;
  std::uint64_t best_restart_seed = 0;
  int iterations = 0;
};

inline constexpr double kDefaultEpsilon = 0.05;

namespace detail {

inline void require_disenib_params(const JointXY& data, const DisenIBParams& p) {
  require_logit_rows(data, p.logits_t);
  require_logit_rows(data, p.logits_s);
}

inline double disenib_kernel(const DataView& d, const Matrix& logits_t, const Matrix& logits_s,
                             Matrix* grad_t, Matrix* grad_s, InformationTerms* terms = nullptr) {
  const Eigen::Index n = logits_t.rows();
  const Eigen::Index k = d.pxy.cols();
  const Eigen::Index ns = logits_s.cols();
  const Eigen::Index nt = logits_t.cols();
  const bool with_grad = grad_t != nullptr && grad_s != nullptr;

  const Matrix log_qt = row_log_softmax(logits_t);
  const Matrix qt = log_qt.array().exp().matrix();
  const Matrix log_qs = row_log_softmax(logits_s);
  const Matrix qs = log_qs.array().exp().matrix();

  const EncoderInfo t_info = encoder_info(d, qt, log_qt, with_grad);

  // I(X;S,Y) = sum p(x,y) q(s|x) ln[p(x,y) q(s|x) / (p(x) q(s,y))]
  const Matrix qsy = qs.transpose() * d.pxy;  // ns x k
  Matrix log_qsy(ns, k);
  for (Eigen::Index i = 0; i < log_qsy.size(); ++i) log_qsy.data()[i] = safe_log(qsy.data()[i]);
  CompensatedSum ixsy;
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = 0; y < k; ++y) {
      const double pxy = d.pxy(x, y);
      if (pxy < kZeroFloor) continue;
      const double base = std::log(pxy) - std::log(d.px(x));
      for (Eigen::Index s = 0; s < ns; ++s) {
        const double w = pxy * qs(x, s);
        if (w < kZeroFloor) continue;
        ixsy.add(w * (base + log_qs(x, s) - log_qsy(s, y)));
      }
    }

  // I(S;T) with q(s,t) = sum_x p(x) q(s|x) q(t|x)
  const Matrix qst = qs.transpose() * d.px.asDiagonal() * qt;  // ns x nt
  const Eigen::VectorXd q_s = qst.rowwise().sum();
  const Eigen::VectorXd q_t = qst.colwise().sum().transpose();
  Matrix log_qst(ns, nt);
  for (Eigen::Index i = 0; i < log_qst.size(); ++i) log_qst.data()[i] = safe_log(qst.data()[i]);
  CompensatedSum ist;
  for (Eigen::Index s = 0; s < ns; ++s)
    for (Eigen::Index t = 0; t < nt; ++t) {
      const double w = qst(s, t);
      if (w < kZeroFloor) continue;
      ist.add(w * (log_qst(s, t) - safe_log(q_s(s)) - safe_log(q_t(t))));
    }

  InformationTerms local{t_info.i_xt, t_info.i_ty, std::max(ixsy.value(), 0.0), std::max(ist.value(), 0.0)};
  if (terms) *terms = local;
  const double objective = -local.i_ty - local.i_xsy + local.i_st;
  if (!with_grad) return objective;

  // d/dq(t|x): -dI(T;Y) + p(x) sum_s q(s|x) ln[q(s,t) / q(t)]
  // d/dq(s|x): -sum_y p(x,y) ln[q(x,s,y) / q(s,y)] + p(x) sum_t q(t|x) ln[q(s,t) / q(s)]
  Matrix dt(n, nt), ds(n, ns);
  Matrix log_qst_over_t(ns, nt), log_qst_over_s(ns, nt);
  for (Eigen::Index s = 0; s < ns; ++s)
    for (Eigen::Index t = 0; t < nt; ++t) {
      log_qst_over_t(s, t) = log_qst(s, t) - safe_log(q_t(t));
      log_qst_over_s(s, t) = log_qst(s, t) - safe_log(q_s(s));
    }
  for (Eigen::Index x = 0; x < n; ++x) {
    const double px = d.px(x);
    for (Eigen::Index t = 0; t < nt; ++t) {
      double acc = 0.0;
      for (Eigen::Index s = 0; s < ns; ++s) acc += qs(x, s) * log_qst_over_t(s, t);
      dt(x, t) = -t_info.d_ity(x, t) + px * acc;
    }
    for (Eigen::Index s = 0; s < ns; ++s) {
      double rec = 0.0;
      for (Eigen::Index y = 0; y < k; ++y) {
        const double pxy = d.pxy(x, y);
        if (pxy == 0.0) continue;
        rec += pxy * (std::log(pxy) + log_qs(x, s) - log_qsy(s, y));
      }
      double dis = 0.0;
      for (Eigen::Index t = 0; t < nt; ++t) dis += qt(x, t) * log_qst_over_s(s, t);
      ds(x, s) = -rec + px * dis;
    }
  }
  *grad_t = softmax_backward(qt, dt);
  *grad_s = softmax_backward(qs, ds);
  return objective;
}

}  // namespace detail

// All four terms via the validated prob-core compositions.
inline DisenIBValue eval_disenib(const JointXY& data, const DisenIBParams& params) {
  detail::require_disenib_params(data, params);
  const InformationTerms terms = information_triple(data, params.encoder_s(), params.encoder_t());
  return {-terms.i_ty - terms.i_xsy + terms.i_st, terms};
}

inline DisenIBGradient grad_disenib(const JointXY& data, const DisenIBParams& params) {
  detail::require_disenib_params(data, params);
  DisenIBGradient g;
  detail::disenib_kernel(detail::DataView(data), params.logits_t, params.logits_s, &g.logits_t, &g.logits_s);
  return g;
}

// -H(Y) - H(X). Attained exactly on balanced deterministic instances when
// card_t >= |Y| and card_s >= the class size.
inline double analytic_minimum(const JointXY& data) { return -entropy_y(data) - entropy_x(data); }

inline ConsistencyReport make_report(const JointXY& data, const InformationTerms& terms, double objective,
                                     double epsilon) {
  if (!(epsilon > 0.0)) throw ValidationError("consistency: epsilon must be positive");
  ConsistencyReport r;
  r.h_x = entropy_x(data);
  r.h_y = entropy_y(data);
  r.i_xy = mutual_information_xy(data);
  r.i_xt = terms.i_xt;
  r.i_ty = terms.i_ty;
  r.i_xsy = terms.i_xsy;
  r.i_st = terms.i_st;
  r.objective = objective;
  r.epsilon = epsilon;
  r.gap = std::abs(terms.i_xt - r.h_y) + std::abs(terms.i_ty - r.h_y);
  r.gap_vs_i_xy = std::abs(terms.i_xt - r.i_xy) + std::abs(terms.i_ty - r.i_xy);
  r.consistent = r.gap < epsilon;
  r.capacity_shortfall = std::max(r.h_x - terms.i_xsy, 0.0);
  return r;
}

inline ConsistencyReport consistency_check(const JointXY& data, const DisenIBParams& params,
                                           double epsilon = kDefaultEpsilon) {
  const DisenIBValue v = eval_disenib(data, params);
  return make_report(data, v.terms, v.objective, epsilon);
}

inline std::size_t default_card_t(const JointXY& data) { return data.card_y(); }
inline std::size_t default_card_s(const JointXY& data) { return max_class_size(data); }

inline DisenIBResult optimize_disenib(const JointXY& data, std::size_t card_t, std::size_t card_s,
                                      const OptimizerConfig& cfg = OptimizerConfig::disenib_defaults(),
                                      double epsilon = kDefaultEpsilon) {
  if (card_t < support_size_y(data))
    throw ValidationError("optimize_disenib: card_t must be at least the number of labels with positive mass");
  if (card_s < 1) throw ValidationError("optimize_disenib: card_s must be positive");
  const detail::DataView view(data);
  auto objective = [&](const std::vector<Matrix>& p, std::vector<Matrix>& g) {
    const double v = detail::disenib_kernel(view, p[0], p[1], &g[0], &g[1]);
    detail::precondition(view, g[0]);
    detail::precondition(view, g[1]);
    return v;
  };
  const auto rows = static_cast<Eigen::Index>(data.card_x());
  DescentRun best = multi_restart(
      objective, {{rows, static_cast<Eigen::Index>(card_t)}, {rows, static_cast<Eigen::Index>(card_s)}}, cfg);
  DisenIBResult out;
  out.params = {std::move(best.params[0]), std::move(best.params[1])};
  out.report = consistency_check(data, out.params, epsilon);
  out.converged = best.converged;
  out.restarts_used = cfg.restarts;
  out.best_restart_seed = best.seed;
  out.iterations = best.iterations;
  return out;
}

}  // namespace iblab
