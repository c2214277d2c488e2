// Exact information-theoretic primitives on finite discrete distributions.
//
// Everything here is measured in nats. Probabilities live in the linear
// domain; totals use compensated summation. Entries below kZeroFloor are
// treated as exact zeros before any logarithm is taken, so 0 ln 0 = 0.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace iblab {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kSimplexTol = 1e-12;
inline constexpr double kJointTol = 1e-11;
inline constexpr double kZeroFloor = 1e-15;

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Raised when a divergence or variational bound would be infinite.
class SupportError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

template <typename Range>
double compensated_total(const Range& values) {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

// p * ln(p / q) with the 0 ln 0 convention; callers guarantee q > 0 when p > 0.
inline double xlogy_ratio(double p, double q) {
  if (p < kZeroFloor) return 0.0;
  return p * std::log(p / q);
}

inline double neg_xlogx(double p) {
  if (p < kZeroFloor) return 0.0;
  return -p * std::log(p);
}

namespace detail {

inline void check_simplex(std::span<const double> values, double tol, const char* what) {
  if (values.empty()) throw ValidationError(std::string(what) + ": empty support");
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0)
      throw ValidationError(std::string(what) + ": entries must be finite and nonnegative");
  }
  const double total = compensated_total(values);
  if (std::abs(total - 1.0) > tol)
    throw ValidationError(std::string(what) + ": entries sum to " + std::to_string(total) +
                          ", expected 1");
}

inline std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<const double> all_span(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace detail

class Distribution {
 public:
  explicit Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
    detail::check_simplex(probs_, kSimplexTol, "distribution");
  }

  static Distribution uniform(std::size_t n) {
    if (n == 0) throw ValidationError("distribution: empty support");
    return Distribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::vector<double> probs_;
};

inline double entropy(const Distribution& p) {
  CompensatedSum acc;
  for (double v : p.probs()) acc.add(neg_xlogx(v));
  return acc.value();
}

inline double kl_divergence(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw DimensionError("kl_divergence: support sizes differ");
  CompensatedSum acc;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < kZeroFloor) continue;
    if (q[i] < kZeroFloor)
      throw SupportError("kl_divergence: p has mass at index " + std::to_string(i) +
                         " where q has none");
    acc.add(p[i] * std::log(p[i] / q[i]));
  }
  return std::max(acc.value(), 0.0);
}

// p(x, y) over |X| x |Y| with opaque labels.
class JointXY {
 public:
  explicit JointXY(Matrix probs, std::vector<std::string> x_labels = {},
                   std::vector<std::string> y_labels = {})
      : probs_(std::move(probs)), x_labels_(std::move(x_labels)), y_labels_(std::move(y_labels)) {
    if (probs_.rows() == 0 || probs_.cols() == 0) throw ValidationError("joint: empty matrix");
    detail::check_simplex(detail::all_span(probs_), kSimplexTol, "joint");
    if (x_labels_.empty()) x_labels_ = default_labels(probs_.rows());
    if (y_labels_.empty()) y_labels_ = default_labels(probs_.cols());
    if (x_labels_.size() != static_cast<std::size_t>(probs_.rows()) ||
        y_labels_.size() != static_cast<std::size_t>(probs_.cols()))
      throw DimensionError("joint: label count does not match matrix shape");
  }

  const Matrix& probs() const { return probs_; }
  std::size_t card_x() const { return static_cast<std::size_t>(probs_.rows()); }
  std::size_t card_y() const { return static_cast<std::size_t>(probs_.cols()); }
  const std::vector<std::string>& x_labels() const { return x_labels_; }
  const std::vector<std::string>& y_labels() const { return y_labels_; }

  std::vector<double> px_values() const {
    std::vector<double> out(card_x());
    for (Eigen::Index x = 0; x < probs_.rows(); ++x) out[x] = compensated_total(detail::row_span(probs_, x));
    return out;
  }

  std::vector<double> py_values() const {
    std::vector<double> out(card_y());
    for (Eigen::Index y = 0; y < probs_.cols(); ++y) {
      CompensatedSum acc;
      for (Eigen::Index x = 0; x < probs_.rows(); ++x) acc.add(probs_(x, y));
      out[y] = acc.value();
    }
    return out;
  }

  Distribution px() const { return Distribution(px_values()); }
  Distribution py() const { return Distribution(py_values()); }

 private:
  static std::vector<std::string> default_labels(Eigen::Index n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (Eigen::Index i = 0; i < n; ++i) out.push_back(std::to_string(i));
    return out;
  }

  Matrix probs_;
  std::vector<std::string> x_labels_;
  std::vector<std::string> y_labels_;
};

// Row-stochastic q(z|x).
class Encoder {
 public:
  explicit Encoder(Matrix cond) : cond_(std::move(cond)) {
    if (cond_.rows() == 0 || cond_.cols() == 0) throw ValidationError("encoder: empty matrix");
    for (Eigen::Index x = 0; x < cond_.rows(); ++x)
      detail::check_simplex(detail::row_span(cond_, x), kSimplexTol, "encoder row");
  }

  static Encoder uniform(std::size_t card_x, std::size_t card_z) {
    return Encoder(Matrix::Constant(static_cast<Eigen::Index>(card_x),
                                    static_cast<Eigen::Index>(card_z),
                                    1.0 / static_cast<double>(card_z)));
  }

  // Deterministic encoder z = f(x).
  template <typename Fn>
  static Encoder from_map(std::size_t card_x, std::size_t card_z, Fn&& f) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(card_x), static_cast<Eigen::Index>(card_z));
    for (std::size_t x = 0; x < card_x; ++x) {
      const std::size_t z = f(x);
      if (z >= card_z) throw DimensionError("encoder: mapped value out of range");
      m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(z)) = 1.0;
    }
    return Encoder(std::move(m));
  }

  static Encoder identity(std::size_t n) {
    return from_map(n, n, [](std::size_t x) { return x; });
  }

  const Matrix& cond() const { return cond_; }
  std::size_t card_x() const { return static_cast<std::size_t>(cond_.rows()); }
  std::size_t card_z() const { return static_cast<std::size_t>(cond_.cols()); }

 private:
  Matrix cond_;
};

// Dense joint over a named tuple of finite variables, stored row-major
// (last axis fastest).
class CompositeJoint {
 public:
  CompositeJoint(std::vector<std::string> axes, std::vector<std::size_t> dims, std::vector<double> data)
      : axes_(std::move(axes)), dims_(std::move(dims)), data_(std::move(data)) {
    if (axes_.size() != dims_.size() || axes_.empty())
      throw DimensionError("composite joint: axis names and dims disagree");
    std::size_t total = 1;
    for (std::size_t d : dims_) {
      if (d == 0) throw DimensionError("composite joint: zero-length axis");
      total *= d;
    }
    if (total != data_.size()) throw DimensionError("composite joint: data size mismatch");
    detail::check_simplex(data_, kJointTol, "composite joint");
  }

  const std::vector<std::string>& axes() const { return axes_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::span<const double> data() const { return data_; }
  std::size_t rank() const { return dims_.size(); }

  std::size_t axis_index(const std::string& name) const {
    auto it = std::find(axes_.begin(), axes_.end(), name);
    if (it == axes_.end()) throw DimensionError("composite joint: no axis named " + name);
    return static_cast<std::size_t>(it - axes_.begin());
  }

  // Sums out every axis not listed in `keep`; the result follows `keep` order.
  CompositeJoint marginal(const std::vector<std::size_t>& keep) const {
    std::vector<std::size_t> out_dims;
    std::vector<std::string> out_axes;
    for (std::size_t a : keep) {
      if (a >= rank()) throw DimensionError("composite joint: axis out of range");
      out_dims.push_back(dims_[a]);
      out_axes.push_back(axes_[a]);
    }
    std::size_t out_size = 1;
    for (std::size_t d : out_dims) out_size *= d;
    std::vector<CompensatedSum> acc(out_size);
    std::vector<std::size_t> idx(rank(), 0);
    for (std::size_t flat = 0; flat < data_.size(); ++flat) {
      std::size_t o = 0;
      for (std::size_t a : keep) o = o * dims_[a] + idx[a];
      acc[o].add(data_[flat]);
      for (std::size_t a = rank(); a-- > 0;) {
        if (++idx[a] < dims_[a]) break;
        idx[a] = 0;
      }
    }
    std::vector<double> out(out_size);
    for (std::size_t i = 0; i < out_size; ++i) out[i] = acc[i].value();
    return CompositeJoint(std::move(out_axes), std::move(out_dims), std::move(out));
  }

  // Reinterprets the joint as two grouped variables (lhs, rhs) so grouped
  // quantities such as I(X; S,Y) reduce to a two-axis mutual information.
  CompositeJoint grouped(const std::vector<std::size_t>& lhs, const std::vector<std::size_t>& rhs) const {
    std::vector<std::size_t> order = lhs;
    order.insert(order.end(), rhs.begin(), rhs.end());
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw DimensionError("composite joint: axis listed twice");
    CompositeJoint m = marginal(order);
    auto name_of = [&](const std::vector<std::size_t>& group) {
      std::string s;
      for (std::size_t a : group) s += (s.empty() ? "" : ",") + axes_[a];
      return s;
    };
    auto card_of = [&](const std::vector<std::size_t>& group) {
      std::size_t c = 1;
      for (std::size_t a : group) c *= dims_[a];
      return c;
    };
    return CompositeJoint({name_of(lhs), name_of(rhs)}, {card_of(lhs), card_of(rhs)},
                          std::vector<double>(m.data().begin(), m.data().end()));
  }

  Distribution axis_distribution(std::size_t axis) const {
    CompositeJoint m = marginal({axis});
    return Distribution(std::vector<double>(m.data().begin(), m.data().end()));
  }

 private:
  std::vector<std::string> axes_;
  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

inline double entropy(const CompositeJoint& j) {
  CompensatedSum acc;
  for (double v : j.data()) acc.add(neg_xlogx(v));
  return acc.value();
}

inline double mutual_information(const CompositeJoint& j) {
  if (j.rank() != 2) throw DimensionError("mutual_information: joint must have exactly two axes");
  const std::size_t na = j.dims()[0];
  const std::size_t nb = j.dims()[1];
  const auto d = j.data();
  std::vector<double> pa(na), pb(nb);
  {
    std::vector<CompensatedSum> ra(na), rb(nb);
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t b = 0; b < nb; ++b) {
        ra[a].add(d[a * nb + b]);
        rb[b].add(d[a * nb + b]);
      }
    for (std::size_t a = 0; a < na; ++a) pa[a] = ra[a].value();
    for (std::size_t b = 0; b < nb; ++b) pb[b] = rb[b].value();
  }
  CompensatedSum acc;
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b) acc.add(xlogy_ratio(d[a * nb + b], pa[a] * pb[b]));
  return std::max(acc.value(), 0.0);
}

inline double mutual_information(const CompositeJoint& j, const std::vector<std::size_t>& lhs,
                                 const std::vector<std::size_t>& rhs) {
  return mutual_information(j.grouped(lhs, rhs));
}

inline CompositeJoint as_joint(const JointXY& data) {
  const Matrix& p = data.probs();
  return CompositeJoint({"X", "Y"}, {data.card_x(), data.card_y()},
                        std::vector<double>(p.data(), p.data() + p.size()));
}

inline void require_rows(const JointXY& data, const Encoder& enc, const char* what) {
  if (enc.card_x() != data.card_x())
    throw DimensionError(std::string(what) + ": encoder has " + std::to_string(enc.card_x()) +
                         " rows but data has |X| = " + std::to_string(data.card_x()));
}

// q(x, t) = p(x) q(t|x)
inline CompositeJoint compose_xt(const JointXY& data, const Encoder& enc_t) {
  require_rows(data, enc_t, "compose_xt");
  const auto px = data.px_values();
  const std::size_t nt = enc_t.card_z();
  std::vector<double> out(data.card_x() * nt);
  for (std::size_t x = 0; x < data.card_x(); ++x)
    for (std::size_t t = 0; t < nt; ++t) out[x * nt + t] = px[x] * enc_t.cond()(x, t);
  return CompositeJoint({"X", "T"}, {data.card_x(), nt}, std::move(out));
}

// q(y, t) = sum_x p(x, y) q(t|x)
inline CompositeJoint compose_yt(const JointXY& data, const Encoder& enc_t) {
  require_rows(data, enc_t, "compose_yt");
  const std::size_t ny = data.card_y();
  const std::size_t nt = enc_t.card_z();
  std::vector<CompensatedSum> acc(ny * nt);
  for (std::size_t x = 0; x < data.card_x(); ++x)
    for (std::size_t y = 0; y < ny; ++y) {
      const double pxy = data.probs()(x, y);
      if (pxy == 0.0) continue;
      for (std::size_t t = 0; t < nt; ++t) acc[y * nt + t].add(pxy * enc_t.cond()(x, t));
    }
  std::vector<double> out(ny * nt);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = acc[i].value();
  return CompositeJoint({"Y", "T"}, {ny, nt}, std::move(out));
}

// q(x, s, y) = p(x, y) q(s|x)
inline CompositeJoint compose_xsy(const JointXY& data, const Encoder& enc_s) {
  require_rows(data, enc_s, "compose_xsy");
  const std::size_t ns = enc_s.card_z();
  const std::size_t ny = data.card_y();
  std::vector<double> out(data.card_x() * ns * ny);
  for (std::size_t x = 0; x < data.card_x(); ++x)
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t y = 0; y < ny; ++y)
        out[(x * ns + s) * ny + y] = data.probs()(x, y) * enc_s.cond()(x, s);
  return CompositeJoint({"X", "S", "Y"}, {data.card_x(), ns, ny}, std::move(out));
}

// q(s, t) = sum_x p(x) q(s|x) q(t|x), using the chain S <-> X <-> T.
inline CompositeJoint compose_st(const JointXY& data, const Encoder& enc_s, const Encoder& enc_t) {
  require_rows(data, enc_s, "compose_st");
  require_rows(data, enc_t, "compose_st");
  const auto px = data.px_values();
  const std::size_t ns = enc_s.card_z();
  const std::size_t nt = enc_t.card_z();
  std::vector<CompensatedSum> acc(ns * nt);
  for (std::size_t x = 0; x < data.card_x(); ++x)
    for (std::size_t s = 0; s < ns; ++s) {
      const double w = px[x] * enc_s.cond()(x, s);
      if (w == 0.0) continue;
      for (std::size_t t = 0; t < nt; ++t) acc[s * nt + t].add(w * enc_t.cond()(x, t));
    }
  std::vector<double> out(ns * nt);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = acc[i].value();
  return CompositeJoint({"S", "T"}, {ns, nt}, std::move(out));
}

struct InformationTerms {
  double i_xt = 0.0;
  double i_ty = 0.0;
  double i_xsy = 0.0;
  double i_st = 0.0;
};

inline InformationTerms information_triple(const JointXY& data, const Encoder& enc_s, const Encoder& enc_t) {
  InformationTerms out;
  out.i_xt = mutual_information(compose_xt(data, enc_t));
  out.i_ty = mutual_information(compose_yt(data, enc_t));
  out.i_xsy = mutual_information(compose_xsy(data, enc_s), {0}, {1, 2});
  out.i_st = mutual_information(compose_st(data, enc_s, enc_t));
  return out;
}

inline double entropy_x(const JointXY& data) { return entropy(data.px()); }
inline double entropy_y(const JointXY& data) { return entropy(data.py()); }
inline double mutual_information_xy(const JointXY& data) { return mutual_information(as_joint(data)); }

}  // namespace iblab
