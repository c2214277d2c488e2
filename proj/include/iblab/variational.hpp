// Variational bounds evaluated exactly on discrete variables:
//
//   I(T;Y)   >= E_q(y,t) ln p(y|t)   + H(Y)
//   I(X;S,Y) >= E_q(x,s,y) ln r(x|s,y) + H(X)
//   I(X;T)   <= E_q(x,t) ln q(t|x) - E_q(t) ln v(t)
//
// together with the KL gaps that close each bound. Conditioning rows with
// zero probability get uniform conditionals; they carry no weight.

#pragma once

#include "iblab/prob.hpp"

#include <string>

namespace iblab {

namespace detail {

inline Matrix validated_rows(Matrix m, const char* what) {
  if (m.rows() == 0 || m.cols() == 0) throw ValidationError(std::string(what) + ": empty matrix");
  for (Eigen::Index r = 0; r < m.rows(); ++r) check_simplex(row_span(m, r), kSimplexTol, what);
  return m;
}

}  // namespace detail

// p(y|t), |T| x |Y|
class Decoder {
 public:
  explicit Decoder(Matrix cond) : cond_(detail::validated_rows(std::move(cond), "decoder row")) {}
  const Matrix& cond() const { return cond_; }
  std::size_t card_t() const { return static_cast<std::size_t>(cond_.rows()); }
  std::size_t card_y() const { return static_cast<std::size_t>(cond_.cols()); }

 private:
  Matrix cond_;
};

// r(x|s,y), (|S| * |Y|) x |X|; row s * |Y| + y holds r(. | s, y).
class Reconstructor {
 public:
  Reconstructor(Matrix cond, std::size_t card_s, std::size_t card_y)
      : cond_(detail::validated_rows(std::move(cond), "reconstructor row")), card_s_(card_s), card_y_(card_y) {
    if (static_cast<std::size_t>(cond_.rows()) != card_s * card_y)
      throw DimensionError("reconstructor: expected |S|*|Y| rows");
  }
  const Matrix& cond() const { return cond_; }
  std::size_t card_s() const { return card_s_; }
  std::size_t card_y() const { return card_y_; }
  std::size_t card_x() const { return static_cast<std::size_t>(cond_.cols()); }
  double operator()(std::size_t x, std::size_t s, std::size_t y) const { return cond_(s * card_y_ + y, x); }

 private:
  Matrix cond_;
  std::size_t card_s_;
  std::size_t card_y_;
};

using PriorT = Distribution;

inline Distribution marginal_t(const JointXY& data, const Encoder& enc_t) {
  return compose_xt(data, enc_t).axis_distribution(1);
}

inline Decoder optimal_decoder(const JointXY& data, const Encoder& enc_t) {
  const CompositeJoint yt = compose_yt(data, enc_t);
  const std::size_t ny = yt.dims()[0], nt = yt.dims()[1];
  Matrix out(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(ny));
  for (std::size_t t = 0; t < nt; ++t) {
    CompensatedSum qt;
    for (std::size_t y = 0; y < ny; ++y) qt.add(yt.data()[y * nt + t]);
    const double mass = qt.value();
    for (std::size_t y = 0; y < ny; ++y)
      out(t, y) = mass < kZeroFloor ? 1.0 / static_cast<double>(ny) : yt.data()[y * nt + t] / mass;
    out.row(t) /= out.row(t).sum();
  }
  return Decoder(std::move(out));
}

// The exact posterior q(x|s,y).
inline Reconstructor optimal_reconstructor(const JointXY& data, const Encoder& enc_s) {
  const CompositeJoint xsy = compose_xsy(data, enc_s);
  const std::size_t nx = xsy.dims()[0], ns = xsy.dims()[1], ny = xsy.dims()[2];
  Matrix out(static_cast<Eigen::Index>(ns * ny), static_cast<Eigen::Index>(nx));
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t y = 0; y < ny; ++y) {
      const std::size_t row = s * ny + y;
      CompensatedSum mass_acc;
      for (std::size_t x = 0; x < nx; ++x) mass_acc.add(xsy.data()[(x * ns + s) * ny + y]);
      const double mass = mass_acc.value();
      for (std::size_t x = 0; x < nx; ++x)
        out(row, x) = mass < kZeroFloor ? 1.0 / static_cast<double>(nx) : xsy.data()[(x * ns + s) * ny + y] / mass;
      out.row(row) /= out.row(row).sum();
    }
  return Reconstructor(std::move(out), ns, ny);
}

inline double ity_lower_bound(const JointXY& data, const Encoder& enc_t, const Decoder& dec) {
  if (dec.card_t() != enc_t.card_z() || dec.card_y() != data.card_y())
    throw DimensionError("ity_lower_bound: decoder must be |T| x |Y|");
  const CompositeJoint yt = compose_yt(data, enc_t);
  const std::size_t nt = yt.dims()[1];
  CompensatedSum acc;
  for (std::size_t y = 0; y < data.card_y(); ++y)
    for (std::size_t t = 0; t < nt; ++t) {
      const double w = yt.data()[y * nt + t];
      if (w < kZeroFloor) continue;
      const double p = dec.cond()(t, y);
      if (p < kZeroFloor)
        throw SupportError("ity_lower_bound: decoder gives zero mass to (t=" + std::to_string(t) +
                           ", y=" + std::to_string(y) + ") which has positive probability");
      acc.add(w * std::log(p));
    }
  return acc.value() + entropy_y(data);
}

// E_q(t) KL[q(Y|t) || p(Y|t)]
inline double decoder_gap(const JointXY& data, const Encoder& enc_t, const Decoder& dec) {
  const Decoder truth = optimal_decoder(data, enc_t);
  const Distribution qt = marginal_t(data, enc_t);
  CompensatedSum acc;
  for (std::size_t t = 0; t < qt.size(); ++t) {
    if (qt[t] < kZeroFloor) continue;
    const auto row = [](const Matrix& m, std::size_t r) {
      return Distribution(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    };
    acc.add(qt[t] * kl_divergence(row(truth.cond(), t), row(dec.cond(), t)));
  }
  return acc.value();
}

inline double ixsy_lower_bound(const JointXY& data, const Encoder& enc_s, const Reconstructor& rec) {
  if (rec.card_s() != enc_s.card_z() || rec.card_y() != data.card_y() || rec.card_x() != data.card_x())
    throw DimensionError("ixsy_lower_bound: reconstructor must be (|S|*|Y|) x |X|");
  const CompositeJoint xsy = compose_xsy(data, enc_s);
  const std::size_t nx = data.card_x(), ns = enc_s.card_z(), ny = data.card_y();
  CompensatedSum acc;
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t y = 0; y < ny; ++y) {
        const double w = xsy.data()[(x * ns + s) * ny + y];
        if (w < kZeroFloor) continue;
        const double r = rec(x, s, y);
        if (r < kZeroFloor)
          throw SupportError("ixsy_lower_bound: reconstructor gives zero mass to x=" + std::to_string(x) +
                             " at (s=" + std::to_string(s) + ", y=" + std::to_string(y) + ")");
        acc.add(w * std::log(r));
      }
  return acc.value() + entropy_x(data);
}

// E_q(s,y) KL[q(X|s,y) || r(X|s,y)]
inline double reconstructor_gap(const JointXY& data, const Encoder& enc_s, const Reconstructor& rec) {
  const Reconstructor truth = optimal_reconstructor(data, enc_s);
  const CompositeJoint sy = compose_xsy(data, enc_s).marginal({1, 2});
  const std::size_t ny = data.card_y();
  CompensatedSum acc;
  for (std::size_t s = 0; s < enc_s.card_z(); ++s)
    for (std::size_t y = 0; y < ny; ++y) {
      const double w = sy.data()[s * ny + y];
      if (w < kZeroFloor) continue;
      const Eigen::Index row = static_cast<Eigen::Index>(s * ny + y);
      Distribution p(std::vector<double>(truth.cond().row(row).begin(), truth.cond().row(row).end()));
      Distribution q(std::vector<double>(rec.cond().row(row).begin(), rec.cond().row(row).end()));
      acc.add(w * kl_divergence(p, q));
    }
  return acc.value();
}

inline double vib_upper_bound(const JointXY& data, const Encoder& enc_t, const PriorT& prior) {
  if (prior.size() != enc_t.card_z()) throw DimensionError("vib_upper_bound: prior must be over |T| outcomes");
  const CompositeJoint xt = compose_xt(data, enc_t);
  const Distribution qt = xt.axis_distribution(1);
  const std::size_t nt = enc_t.card_z();
  CompensatedSum acc;
  for (std::size_t x = 0; x < data.card_x(); ++x)
    for (std::size_t t = 0; t < nt; ++t) {
      const double w = xt.data()[x * nt + t];
      if (w < kZeroFloor) continue;
      acc.add(w * std::log(enc_t.cond()(x, t)));
    }
  for (std::size_t t = 0; t < nt; ++t) {
    if (qt[t] < kZeroFloor) continue;
    if (prior[t] < kZeroFloor)
      throw SupportError("vib_upper_bound: prior has no mass at t=" + std::to_string(t) +
                         " where the marginal is positive");
    acc.add(-qt[t] * std::log(prior[t]));
  }
  return acc.value();
}

// KL[q(T) || v(T)]
inline double prior_gap(const JointXY& data, const Encoder& enc_t, const PriorT& prior) {
  return kl_divergence(marginal_t(data, enc_t), prior);
}

}  // namespace iblab
