/*
 * Copyright 2026 The freqdyn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Polynomials, the dense Gaussian-rational sequence, circle norms, weighted
// least-squares fitting on disjoint compacts and assembly of piecewise targets.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "freqdyn/density.hpp"
#include "freqdyn/geometry.hpp"
#include "freqdyn/maps.hpp"
#include "freqdyn/runaway.hpp"

namespace freqdyn {

/// Discrete orthogonal basis produced by Arnoldi on a node set: q_0 = 1 and
/// h(k, k-1) q_k = u q_{k-1} - sum_{j<k} h(j, k-1) q_j, u = (z - center)/scale.
/// Evaluating through the recurrence avoids the monomial Vandermonde matrix.
struct ArnoldiBasis {
  cplx center{};
  double scale = 1.0;
  Eigen::MatrixXcd h;  // (d + 1) x d, upper Hessenberg

  int degree() const { return static_cast<int>(h.cols()); }

  /// Orthonormal (in the node mean) basis of degree d on the nodes, plus the
  /// basis values there, by classical Gram-Schmidt with one reorthogonalization.
  static std::pair<ArnoldiBasis, Eigen::MatrixXcd> build(const std::vector<cplx>& nodes, cplx center,
                                                         double scale, int d) {
    const auto m = static_cast<Eigen::Index>(nodes.size());
    ArnoldiBasis b{center, scale, Eigen::MatrixXcd::Zero(d + 1, d)};
    Eigen::VectorXcd u(m);
    for (Eigen::Index i = 0; i < m; ++i) u(i) = (nodes[static_cast<std::size_t>(i)] - center) / scale;
    Eigen::MatrixXcd q(m, d + 1);
    q.col(0).setOnes();
    const double mean = static_cast<double>(m);
    for (int k = 1; k <= d; ++k) {
      Eigen::VectorXcd v = u.cwiseProduct(q.col(k - 1));
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXcd c = q.leftCols(k).adjoint() * v / mean;
        v -= q.leftCols(k) * c;
        b.h.col(k - 1).head(k) += c;
      }
      const double norm = v.norm() / std::sqrt(mean);
      if (!(norm > 0.0)) throw std::invalid_argument("Arnoldi basis: too few distinct nodes for the degree");
      b.h(k, k - 1) = norm;
      q.col(k) = v / norm;
    }
    return {std::move(b), std::move(q)};
  }

  /// Basis values q_0..q_cols-1 at the given points (rows).
  Eigen::MatrixXcd values(const cplx* z, Eigen::Index count, int cols) const {
    Eigen::MatrixXcd w(count, cols);
    Eigen::VectorXcd u(count);
    for (Eigen::Index i = 0; i < count; ++i) u(i) = (z[i] - center) / scale;
    w.col(0).setOnes();
    for (int k = 1; k < cols; ++k) {
      w.col(k) = (u.cwiseProduct(w.col(k - 1)) - w.leftCols(k) * h.col(k - 1).head(k)) / h(k, k - 1);
    }
    return w;
  }
};

/// Coefficients in the shifted, scaled monomial basis ((z - center)/scale)^j,
/// or in an Arnoldi basis when one is attached.
class Polynomial {
 public:
  Polynomial() : coeffs_{0.0} {}
  explicit Polynomial(std::vector<cplx> coeffs, cplx center = 0.0, double scale = 1.0)
      : coeffs_(std::move(coeffs)), center_(center), scale_(scale) {
    if (!(scale_ > 0.0)) throw std::invalid_argument("Polynomial: scale must be positive");
    trim();
  }
  Polynomial(std::vector<cplx> coeffs, std::shared_ptr<const ArnoldiBasis> basis)
      : coeffs_(std::move(coeffs)), arnoldi_(std::move(basis)) {
    if (!arnoldi_) throw std::invalid_argument("Polynomial: missing Arnoldi basis");
    center_ = arnoldi_->center;
    scale_ = arnoldi_->scale;
    if (!(scale_ > 0.0)) throw std::invalid_argument("Polynomial: scale must be positive");
    if (static_cast<int>(coeffs_.size()) > arnoldi_->degree() + 1) {
      throw std::invalid_argument("Polynomial: more coefficients than Arnoldi basis vectors");
    }
    trim();
  }

  static Polynomial monomial(int mu) {
    std::vector<cplx> c(static_cast<std::size_t>(mu) + 1, 0.0);
    c.back() = 1.0;
    return Polynomial(std::move(c));
  }

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == cplx(0.0); }
  const std::vector<cplx>& coefficients() const { return coeffs_; }
  cplx center() const { return center_; }
  double scale() const { return scale_; }
  const ArnoldiBasis* arnoldi() const { return arnoldi_.get(); }
  std::shared_ptr<const ArnoldiBasis> arnoldi_ptr() const { return arnoldi_; }

  cplx operator()(cplx z) const {
    if (arnoldi_) return evaluate(std::vector<cplx>{z}).front();
    const cplx u = (z - center_) / scale_;
    cplx acc = coeffs_.back();
    for (auto it = coeffs_.rbegin() + 1; it != coeffs_.rend(); ++it) acc = acc * u + *it;
    return acc;
  }

  /// Values at many points; the Arnoldi recurrence runs in blocks.
  std::vector<cplx> evaluate(const std::vector<cplx>& z) const {
    std::vector<cplx> out(z.size());
    if (!arnoldi_) {
      for (std::size_t i = 0; i < z.size(); ++i) out[i] = (*this)(z[i]);
      return out;
    }
    const int cols = static_cast<int>(coeffs_.size());
    const Eigen::Map<const Eigen::VectorXcd> c(coeffs_.data(), cols);
    constexpr std::size_t kBlock = 2048;
    for (std::size_t start = 0; start < z.size(); start += kBlock) {
      const auto count = static_cast<Eigen::Index>(std::min(kBlock, z.size() - start));
      const Eigen::VectorXcd v = arnoldi_->values(z.data() + start, count, cols) * c;
      for (Eigen::Index i = 0; i < count; ++i) out[start + static_cast<std::size_t>(i)] = v(i);
    }
    return out;
  }

  Polynomial scaled(cplx factor) const {
    std::vector<cplx> c = coeffs_;
    for (auto& x : c) x *= factor;
    return arnoldi_ ? Polynomial(std::move(c), arnoldi_) : Polynomial(std::move(c), center_, scale_);
  }

 private:
  void trim() {
    while (coeffs_.size() > 1 && coeffs_.back() == cplx(0.0)) coeffs_.pop_back();
    if (coeffs_.empty()) coeffs_.push_back(0.0);
  }

  std::vector<cplx> coeffs_;
  cplx center_{};
  double scale_ = 1.0;
  std::shared_ptr<const ArnoldiBasis> arnoldi_;
};

/// Coefficients in the plain monomial basis z^j. Centered monomial-basis
/// polynomials are rescaled directly; all others are re-expanded by a discrete
/// Fourier transform of samples on the unit circle, exact for degree < N.
inline std::vector<cplx> unshifted_coefficients(const Polynomial& p) {
  const auto& c = p.coefficients();
  const int d = p.degree();
  std::vector<cplx> out(c.size());
  if (p.center() == cplx(0.0) && !p.arnoldi()) {
    double s = 1.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      out[j] = c[j] / s;
      s *= p.scale();
    }
    return out;
  }
  int n = 64;
  while (n < 2 * (d + 1)) n *= 2;
  std::vector<cplx> nodes(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) nodes[k] = std::polar(1.0, 2.0 * kPi * k / n);
  const std::vector<cplx> samples = p.evaluate(nodes);
  for (int j = 0; j <= d; ++j) {
    cplx acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const int phase = static_cast<int>((static_cast<std::int64_t>(j) * k) % n);
      acc += samples[k] * std::polar(1.0, -2.0 * kPi * phase / n);
    }
    out[static_cast<std::size_t>(j)] = acc / static_cast<double>(n);
  }
  return out;
}

/// L2 norm on the unit circle with respect to d(theta)/2pi, by Parseval.
inline double l2_circle_norm(const Polynomial& p) {
  double s = 0.0;
  for (cplx c : unshifted_coefficients(p)) s += std::norm(c);
  return std::sqrt(s);
}

/// Same norm by trapezoid quadrature, an independent cross-check.
inline double circle_quadrature_norm(const std::function<cplx(cplx)>& f, int points = 2048) {
  double s = 0.0;
  for (int k = 0; k < points; ++k) s += std::norm(f(std::polar(1.0, 2.0 * kPi * k / points)));
  return std::sqrt(s / points);
}

// ---------------------------------------------------------------------------
// Dense sequence of Gaussian-rational polynomials

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

struct GaussianRational {
  Rational re, im;

  cplx value() const { return {re.value(), im.value()}; }
  bool operator==(const GaussianRational&) const = default;
};

namespace enumeration {

/// Cantor pairing; throws when the index does not fit in 64 bits.
inline std::uint64_t pair(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = 0, t = 0, out = 0;
  if (__builtin_add_overflow(a, b, &s) || __builtin_mul_overflow(s, s + 1, &t) || s + 1 == 0 ||
      __builtin_add_overflow(t / 2, b, &out)) {
    throw std::overflow_error("Cantor pairing exceeds 64 bits");
  }
  return out;
}

inline std::pair<std::uint64_t, std::uint64_t> unpair(std::uint64_t z) {
  auto w = static_cast<std::uint64_t>((std::sqrt(8.0 * static_cast<double>(z) + 1.0) - 1.0) / 2.0);
  while (w * (w + 1) / 2 > z) --w;
  while ((w + 1) * (w + 2) / 2 <= z) ++w;
  const std::uint64_t b = z - w * (w + 1) / 2;
  return {w - b, b};
}

/// Calkin-Wilf tree in breadth-first order: 1 -> 1/1, 2 -> 1/2, 3 -> 2/1, ...
inline Rational calkin_wilf(std::uint64_t index) {
  std::int64_t a = 1, b = 1;
  const int top = 63 - std::countl_zero(index);
  for (int bit = top - 1; bit >= 0; --bit) {
    if ((index >> bit) & 1U) a += b; else b += a;
  }
  return {a, b};
}

inline std::uint64_t calkin_wilf_index(std::int64_t a, std::int64_t b) {
  std::vector<int> bits;
  while (!(a == 1 && b == 1)) {
    if (a < b) {
      b -= a;
      bits.push_back(0);
    } else {
      a -= b;
      bits.push_back(1);
    }
  }
  std::uint64_t index = 1;
  for (auto it = bits.rbegin(); it != bits.rend(); ++it) index = 2 * index + static_cast<std::uint64_t>(*it);
  return index;
}

/// 0 -> 0, 2k - 1 -> cw(k), 2k -> -cw(k).
inline Rational rational(std::uint64_t index) {
  if (index == 0) return {0, 1};
  Rational q = calkin_wilf((index + 1) / 2);
  if (index % 2 == 0) q.num = -q.num;
  return q;
}

inline std::uint64_t rational_index(Rational q) {
  if (q.num == 0) return 0;
  const std::int64_t g = std::gcd(q.num, q.den);
  std::int64_t a = q.num / g, b = q.den / g;
  if (b < 0) {
    a = -a;
    b = -b;
  }
  const std::uint64_t k = calkin_wilf_index(a < 0 ? -a : a, b);
  return a > 0 ? 2 * k - 1 : 2 * k;
}

inline GaussianRational gaussian(std::uint64_t index) {
  const auto [a, b] = unpair(index);
  return {rational(a), rational(b)};
}

inline std::uint64_t gaussian_index(const GaussianRational& g) {
  return pair(rational_index(g.re), rational_index(g.im));
}

}  // namespace enumeration

/// Coefficients of P_l. l = 1 is the zero polynomial; l >= 2 decodes
/// (degree, tuple) from l - 2 by Cantor unpairing, the top coefficient
/// being forced nonzero. The map l -> P_l is a bijection onto Q[i][z].
inline std::vector<GaussianRational> dense_coefficients(std::uint64_t l) {
  if (l < 1) throw std::invalid_argument("dense sequence index starts at 1");
  if (l == 1) return {};
  auto [degree, rest] = enumeration::unpair(l - 2);
  std::vector<std::uint64_t> k;
  for (std::uint64_t i = 0; i < degree; ++i) {
    auto [head, tail] = enumeration::unpair(rest);
    k.push_back(head);
    rest = tail;
  }
  k.push_back(rest + 1);
  std::vector<GaussianRational> out;
  for (auto idx : k) out.push_back(enumeration::gaussian(idx));
  return out;
}

/// Inverse of dense_coefficients (trailing zero coefficients are ignored).
inline std::uint64_t dense_index(std::vector<GaussianRational> coeffs) {
  while (!coeffs.empty() && coeffs.back().re.num == 0 && coeffs.back().im.num == 0) coeffs.pop_back();
  if (coeffs.empty()) return 1;
  const std::uint64_t degree = coeffs.size() - 1;
  std::uint64_t rest = enumeration::gaussian_index(coeffs.back()) - 1;
  for (std::size_t i = degree; i-- > 0;) rest = enumeration::pair(enumeration::gaussian_index(coeffs[i]), rest);
  return enumeration::pair(degree, rest) + 2;
}

inline Polynomial enumerate_dense_polynomial(std::uint64_t l) {
  std::vector<cplx> c;
  for (const auto& g : dense_coefficients(l)) c.push_back(g.value());
  return Polynomial(std::move(c));
}

using DenseSequence = std::function<Polynomial(int)>;

inline DenseSequence default_dense_sequence() {
  return [](int l) { return enumerate_dense_polynomial(static_cast<std::uint64_t>(l)); };
}

// ---------------------------------------------------------------------------
// Piecewise targets

struct MonomialSpec {
  int mu = 1;
};
struct FixedPolySpec {
  Polynomial p;
};
struct ComposedInverseSpec {
  Polynomial p;
  HoloMap map;
};
struct ZeroSpec {};

using PieceSpec = std::variant<MonomialSpec, FixedPolySpec, ComposedInverseSpec, ZeroSpec>;

/// Bookkeeping for island pieces: which orbit index and which blocks it serves.
struct IslandTag {
  std::int64_t n = 0;
  int nu = 0;
  int l = 0;      // 0 when the piece carries no dense-sequence target
  int block = 0;  // p for spaceable/dense splits, mu for mixed splits
};

struct Piece {
  CompactSet region;                    // certified superset used for disjointness
  PieceSpec spec;
  double tau = 0.0;                     // tolerance budget, also the envelope
  std::optional<HoloMap> map;           // islands: points are map(source grid)
  std::optional<CompactSet> source;
  std::optional<IslandTag> tag;
};

struct PiecewiseTarget {
  Domain domain;
  std::vector<Piece> pieces;
};

inline std::vector<cplx> piece_grid(const Piece& piece, int resolution) {
  if (piece.map && piece.source) {
    std::vector<cplx> out;
    for (cplx z : sample_grid(*piece.source, resolution)) out.push_back(apply(*piece.map, z));
    return out;
  }
  return sample_grid(piece.region, resolution);
}

inline cplx target_value(const Piece& piece, cplx w) {
  struct Visitor {
    cplx w;
    cplx operator()(const MonomialSpec& m) const { return int_power(w, m.mu); }
    cplx operator()(const FixedPolySpec& f) const { return f.p(w); }
    cplx operator()(const ComposedInverseSpec& c) const { return c.p(inverse_apply(c.map, w)); }
    cplx operator()(const ZeroSpec&) const { return 0.0; }
  };
  return std::visit(Visitor{w}, piece.spec);
}

inline void validate_target(const PiecewiseTarget& t) {
  for (std::size_t i = 0; i < t.pieces.size(); ++i) {
    if (!(t.pieces[i].tau > 0.0)) throw std::invalid_argument("piece tolerance must be positive");
    for (std::size_t j = i + 1; j < t.pieces.size(); ++j) {
      if (disjointness(t.pieces[i].region, t.pieces[j].region) != Overlap::Disjoint) {
        throw std::invalid_argument("target regions " + std::to_string(i) + " and " +
                                    std::to_string(j) + " are not certified disjoint");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Fitting

enum class FitStatus { Passed, NonConverged, IllConditioned };

inline std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Passed: return "PASS";
    case FitStatus::NonConverged: return "FAILED(non-converged)";
    case FitStatus::IllConditioned: return "FAILED(ill-conditioned)";
  }
  return "?";
}

struct FitOptions {
  int max_degree = 256;
  int start_degree = 8;
  int grid_res = 8;               // fit grid, raised to degree/4 at high degree; verification 2x
  double condition_threshold = 1e12;
  double honesty_factor = 2.0;
};

struct FhcCandidate {
  Polynomial poly;
  PiecewiseTarget target;
  std::vector<double> certificate;  // sup error per piece on the verification grid
  std::vector<double> fine_errors;  // same on the 4x finer grid
  std::vector<double> envelope;     // required bound per piece
  FitStatus status = FitStatus::NonConverged;
  int degree = 0;
  std::string solver;
  std::vector<int> degrees_tried;

  bool passed() const { return status == FitStatus::Passed; }
};

namespace detail {

struct Sample {
  cplx w;
  cplx value;
  double weight;
};

inline ClosedDisc union_disc(const PiecewiseTarget& t) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : t.pieces) {
    const ClosedDisc d = enclosing_disc(p.region);
    xmin = std::min(xmin, d.center.real() - d.radius);
    xmax = std::max(xmax, d.center.real() + d.radius);
    ymin = std::min(ymin, d.center.imag() - d.radius);
    ymax = std::max(ymax, d.center.imag() + d.radius);
  }
  const cplx c((xmin + xmax) / 2.0, (ymin + ymax) / 2.0);
  double r = 0.0;
  for (const auto& p : t.pieces) {
    const ClosedDisc d = enclosing_disc(p.region);
    r = std::max(r, std::abs(d.center - c) + d.radius);
  }
  return {c, r > 0.0 ? r : 1.0};
}

inline std::vector<double> piece_errors(const PiecewiseTarget& t, const Polynomial& p, int res) {
  std::vector<double> out;
  for (const auto& piece : t.pieces) {
    const auto grid = piece_grid(piece, res);
    const auto values = p.evaluate(grid);
    double e = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) e = std::max(e, std::abs(values[i] - target_value(piece, grid[i])));
    out.push_back(e);
  }
  return out;
}

// Fit nodes must outnumber the degree on every piece boundary, so the grid
// resolution grows with the degree once it passes 4 * grid_res.
inline int fit_resolution(int degree, const FitOptions& opt) { return std::max(opt.grid_res, (degree + 3) / 4); }

}  // namespace detail

/// Weighted least squares (weights 1/tau) over all pieces with degree doubling
/// from start_degree. Each degree tries the monomial normal equations first and
/// switches to an Arnoldi basis when they are ill-conditioned. A degree is
/// accepted once every piece's sup error on the verification grid (2x the fit
/// resolution) and on a finer grid is below its tolerance, and the finer grid
/// does not exceed honesty_factor times the verification error.
inline FhcCandidate fit_on_compacts(const PiecewiseTarget& target, const FitOptions& opt = {}) {
  validate_target(target);
  FhcCandidate cand;
  cand.target = target;
  for (const auto& p : target.pieces) cand.envelope.push_back(p.tau);

  const ClosedDisc basis = detail::union_disc(target);
  if (target.pieces.empty()) {
    cand.poly = Polynomial({0.0}, basis.center, basis.radius);
    cand.status = FitStatus::Passed;
    cand.solver = "none";
    return cand;
  }

  std::vector<int> schedule;
  for (int d = std::min(opt.start_degree, opt.max_degree); d < opt.max_degree; d *= 2) schedule.push_back(d);
  schedule.push_back(opt.max_degree);

  bool use_arnoldi = false;
  for (int degree : schedule) {
    cand.degrees_tried.push_back(degree);
    const int res = detail::fit_resolution(degree, opt);
    std::vector<cplx> nodes, values;
    std::vector<double> weights;
    for (const auto& piece : target.pieces) {
      for (cplx w : piece_grid(piece, res)) {
        nodes.push_back(w);
        values.push_back(target_value(piece, w));
        weights.push_back(1.0 / piece.tau);
      }
    }
    const auto rows = static_cast<Eigen::Index>(nodes.size());
    const Eigen::Index cols = degree + 1;
    Eigen::VectorXcd rhs(rows);
    for (Eigen::Index i = 0; i < rows; ++i) rhs(i) = weights[static_cast<std::size_t>(i)] * values[static_cast<std::size_t>(i)];

    Eigen::VectorXcd coef;
    if (!use_arnoldi) {
      Eigen::MatrixXcd a(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        const cplx u = (nodes[static_cast<std::size_t>(i)] - basis.center) / basis.radius;
        cplx power = weights[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < cols; ++j) {
          a(i, j) = power;
          power *= u;
        }
      }
      const Eigen::MatrixXcd normal = a.adjoint() * a;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(normal, Eigen::EigenvaluesOnly);
      const double lmin = eig.eigenvalues().minCoeff();
      const double lmax = eig.eigenvalues().maxCoeff();
      // Conditioning only worsens with the degree, so the switch is permanent.
      use_arnoldi = !(lmin > 0.0 && lmax / lmin < opt.condition_threshold);
      if (!use_arnoldi) {
        coef = normal.ldlt().solve(a.adjoint() * rhs);
        cand.solver = "normal-equations";
        if (coef.allFinite()) {
          cand.poly = Polynomial(std::vector<cplx>(coef.data(), coef.data() + coef.size()), basis.center, basis.radius);
        }
      }
    }
    if (use_arnoldi) {
      if (rows <= cols) {
        cand.status = FitStatus::IllConditioned;
        cand.degree = degree;
        return cand;
      }
      auto [arn, q] = ArnoldiBasis::build(nodes, basis.center, basis.radius, degree);
      for (Eigen::Index i = 0; i < rows; ++i) q.row(i) *= weights[static_cast<std::size_t>(i)];
      coef = q.colPivHouseholderQr().solve(rhs);
      cand.solver = "arnoldi";
      if (coef.allFinite()) {
        cand.poly = Polynomial(std::vector<cplx>(coef.data(), coef.data() + coef.size()),
                               std::make_shared<const ArnoldiBasis>(std::move(arn)));
      }
    }
    if (!coef.allFinite()) {
      cand.status = FitStatus::IllConditioned;
      cand.degree = degree;
      return cand;
    }

    cand.degree = degree;
    cand.certificate = detail::piece_errors(target, cand.poly, 2 * res);
    cand.fine_errors.clear();
    bool ok = true;
    for (std::size_t i = 0; i < cand.certificate.size(); ++i) ok = ok && cand.certificate[i] < cand.envelope[i];
    if (!ok) continue;
    cand.fine_errors = detail::piece_errors(target, cand.poly, std::max(8 * opt.grid_res, 4 * res));
    for (std::size_t i = 0; i < cand.fine_errors.size(); ++i) {
      ok = ok && cand.fine_errors[i] < cand.envelope[i] &&
           cand.fine_errors[i] <= opt.honesty_factor * cand.certificate[i] + 1e-12;
    }
    if (ok) {
      cand.status = FitStatus::Passed;
      return cand;
    }
  }
  cand.status = FitStatus::NonConverged;
  return cand;
}

// ---------------------------------------------------------------------------
// Index splits A(nu, l), A(nu, l, p), A(nu, l, 1, mu)

struct BlockLabel {
  int l = 0;
  int p = 0;
  int mu = 0;  // sub-block of A(nu, l, 1) for mixed builds
};

/// Block labels per (nu, n). Indices falling in the absorbing tail part get no label.
class SplitPlan {
 public:
  /// A(nu) -> A(nu, l, p), l <= l_max, p <= p_max; block (l, p) is split part
  /// (p - 1) * l_max + l and part l_max * p_max + 1 is the unlabelled rest.
  static SplitPlan blocks(const std::vector<IndexSet>& family, int l_max, int p_max,
                          std::int64_t horizon) {
    if (l_max < 1 || p_max < 1) throw std::invalid_argument("SplitPlan: l_max, p_max >= 1");
    SplitPlan plan;
    plan.l_max_ = l_max;
    plan.p_max_ = p_max;
    for (std::size_t i = 0; i < family.size(); ++i) {
      const int nu = static_cast<int>(i) + 1;
      const auto parts = split(family[i], l_max * p_max + 1, horizon);
      for (int q = 1; q <= l_max * p_max; ++q) {
        const int l = (q - 1) % l_max + 1;
        const int p = (q - 1) / l_max + 1;
        for (auto n : parts[static_cast<std::size_t>(q - 1)].elements()) plan.labels_[nu][n] = {l, p, 0};
      }
    }
    return plan;
  }

  static SplitPlan existence(const std::vector<IndexSet>& family, int l_max, std::int64_t horizon) {
    return blocks(family, l_max, 1, horizon);
  }

  /// Additionally splits every A(nu, l, 1) into A(nu, l, 1, mu), mu <= mu_max.
  static SplitPlan mixed(const std::vector<IndexSet>& family, int l_max, int p_max, int mu_max,
                         std::int64_t horizon) {
    SplitPlan plan = blocks(family, l_max, p_max, horizon);
    plan.mu_max_ = mu_max;
    for (auto& [nu, by_n] : plan.labels_) {
      for (int l = 1; l <= l_max; ++l) {
        std::vector<std::int64_t> e;
        for (const auto& [n, lab] : by_n) {
          if (lab.l == l && lab.p == 1) e.push_back(n);
        }
        const auto parts = split(IndexSet(e, horizon), mu_max + 1, horizon);
        for (int mu = 1; mu <= mu_max; ++mu) {
          for (auto n : parts[static_cast<std::size_t>(mu - 1)].elements()) by_n[n].mu = mu;
        }
      }
    }
    return plan;
  }

  std::optional<BlockLabel> label(int nu, std::int64_t n) const {
    auto it = labels_.find(nu);
    if (it == labels_.end()) return std::nullopt;
    auto jt = it->second.find(n);
    if (jt == it->second.end()) return std::nullopt;
    return jt->second;
  }

  /// Designed set A(nu, l, p) (mu = 0) or A(nu, l, 1, mu) (mu > 0).
  IndexSet designed(int nu, int l, int p, int mu, std::int64_t horizon) const {
    std::vector<std::int64_t> e;
    auto it = labels_.find(nu);
    if (it != labels_.end()) {
      for (const auto& [n, lab] : it->second) {
        if (n <= horizon && lab.l == l && lab.p == p && (mu == 0 || lab.mu == mu)) e.push_back(n);
      }
    }
    return IndexSet(std::move(e), horizon);
  }

  int l_max() const { return l_max_; }
  int p_max() const { return p_max_; }
  int mu_max() const { return mu_max_; }

 private:
  std::map<int, std::map<std::int64_t, BlockLabel>> labels_;
  int l_max_ = 1;
  int p_max_ = 1;
  int mu_max_ = 0;
};

// ---------------------------------------------------------------------------
// Target assembly

struct AssemblyOptions {
  int grid_res = 8;
  BoundarySampling sampling;
  DenseSequence dense = default_dense_sequence();
};

namespace detail {

inline double min_eps(const Domain& domain, const std::vector<cplx>& pts, const BoundarySampling& s) {
  double m = std::numeric_limits<double>::infinity();
  for (cplx w : pts) m = std::min(m, eps_to_boundary(domain, w, s));
  return m;
}

enum class IslandRule { Existence, Spaceable, Dense, Mixed };

// One piece per island: P_l o phi_n^-1 when the island's label selects it,
// zero otherwise. `scale` turns the sampled minimum of eps into tau.
inline void add_islands(PiecewiseTarget& t, const CarlemanTruncation& tr, const SplitPlan& plan,
                        IslandRule rule, int selector, const std::function<double(double)>& scale,
                        const AssemblyOptions& opt) {
  for (const auto& isl : tr.islands) {
    Piece piece;
    piece.region = isl.image_bound;
    piece.map = isl.map;
    piece.source = isl.source;
    const auto label = plan.label(isl.nu, isl.n);
    bool active = false;
    if (label) {
      switch (rule) {
        case IslandRule::Existence: active = true; break;
        case IslandRule::Spaceable:
        case IslandRule::Dense: active = label->p == selector; break;
        case IslandRule::Mixed: active = label->p == 1 && label->mu == selector; break;
      }
    }
    IslandTag tag{isl.n, isl.nu, 0, label ? (rule == IslandRule::Mixed ? label->mu : label->p) : 0};
    if (active) {
      tag.l = label->l;
      piece.spec = ComposedInverseSpec{opt.dense(label->l), isl.map};
    } else {
      piece.spec = ZeroSpec{};
    }
    piece.tag = tag;
    const auto grid = piece_grid(piece, opt.grid_res);
    piece.tau = grid.empty() ? scale(1.0) : scale(min_eps(t.domain, grid, opt.sampling));
    t.pieces.push_back(std::move(piece));
  }
}

inline Piece base_piece(const CompactSet& k, PieceSpec spec, double tau) {
  Piece piece;
  piece.region = k;
  piece.spec = std::move(spec);
  piece.tau = tau;
  return piece;
}

}  // namespace detail

/// g = P_l o phi_n^-1 on islands with n in A(nu, l), l <= l_max; zero on the
/// rest. tau is the sampled minimum of eps over the island.
inline PiecewiseTarget assemble_existence_target(const CarlemanTruncation& tr, const Domain& domain,
                                                 const SplitPlan& plan,
                                                 const AssemblyOptions& opt = {}) {
  PiecewiseTarget t{domain, {}};
  detail::add_islands(t, tr, plan, detail::IslandRule::Existence, 0, [](double e) { return e; }, opt);
  return t;
}

/// g_mu = z^mu on K_1, P_l o phi_n^-1 on A(nu, l, mu), zero elsewhere;
/// tolerances 3^-mu min(1, eps).
inline PiecewiseTarget assemble_spaceable_target(int mu, const CarlemanTruncation& tr,
                                                 const Domain& domain, const SplitPlan& plan,
                                                 const AssemblyOptions& opt = {}) {
  if (tr.base.empty()) throw std::invalid_argument("spaceable target needs the base compact K_1");
  const double factor = std::pow(3.0, -mu);
  auto scale = [factor](double e) { return factor * std::min(1.0, e); };
  PiecewiseTarget t{domain, {}};
  const CompactSet& k1 = tr.base.front();
  t.pieces.push_back(detail::base_piece(
      k1, MonomialSpec{mu}, scale(detail::min_eps(domain, sample_grid(k1, opt.grid_res), opt.sampling))));
  detail::add_islands(t, tr, plan, detail::IslandRule::Spaceable, mu, scale, opt);
  return t;
}

/// g_mu = P_mu on K_{mu+1}, P_l o phi_n^-1 on A(nu, l, mu + 1), zero elsewhere;
/// tolerances (1/mu) min(1, eps). The truncation's last base compact is K_{mu+1}.
inline PiecewiseTarget assemble_dense_target(int mu, const CarlemanTruncation& tr,
                                             const Domain& domain, const SplitPlan& plan,
                                             const AssemblyOptions& opt = {}) {
  if (static_cast<int>(tr.base.size()) != mu + 1) {
    throw std::invalid_argument("dense target for mu needs bases K_1..K_{mu+1}");
  }
  const double factor = 1.0 / mu;
  auto scale = [factor](double e) { return factor * std::min(1.0, e); };
  PiecewiseTarget t{domain, {}};
  const CompactSet& k = tr.base.back();
  t.pieces.push_back(detail::base_piece(
      k, FixedPolySpec{opt.dense(mu)},
      scale(detail::min_eps(domain, sample_grid(k, opt.grid_res), opt.sampling))));
  detail::add_islands(t, tr, plan, detail::IslandRule::Dense, mu + 1, scale, opt);
  return t;
}

/// h_mu = z^mu on K_1, P_l o phi_n^-1 on A(nu, l, 1, mu), zero elsewhere;
/// tolerances 3^-mu min(1, eps).
inline PiecewiseTarget assemble_mixed_target(int mu, const CarlemanTruncation& tr,
                                             const Domain& domain, const SplitPlan& plan,
                                             const AssemblyOptions& opt = {}) {
  if (tr.base.empty()) throw std::invalid_argument("mixed target needs the base compact K_1");
  const double factor = std::pow(3.0, -mu);
  auto scale = [factor](double e) { return factor * std::min(1.0, e); };
  PiecewiseTarget t{domain, {}};
  const CompactSet& k1 = tr.base.front();
  t.pieces.push_back(detail::base_piece(
      k1, MonomialSpec{mu}, scale(detail::min_eps(domain, sample_grid(k1, opt.grid_res), opt.sampling))));
  detail::add_islands(t, tr, plan, detail::IslandRule::Mixed, mu, scale, opt);
  return t;
}

// ---------------------------------------------------------------------------
// Span bases

enum class BasisKind { Spaceable, Dense, Mixed };

inline std::string to_string(BasisKind k) {
  switch (k) {
    case BasisKind::Spaceable: return "Spaceable";
    case BasisKind::Dense: return "Dense";
    case BasisKind::Mixed: return "Mixed";
  }
  return "?";
}

struct SpanBasis {
  std::vector<FhcCandidate> members;
  BasisKind kind = BasisKind::Spaceable;
  double perturbation_sum = 0.0;
  std::size_t spaceable_count = 0;  // Mixed: leading members built from h_mu
};

inline int base_monomial(const FhcCandidate& c) {
  for (const auto& p : c.target.pieces) {
    if (const auto* m = std::get_if<MonomialSpec>(&p.spec)) return m->mu;
  }
  throw std::invalid_argument("member has no monomial base piece");
}

/// Sum over the monomial-based members of ||f_mu - z^mu||_2 times ||e*_mu||_2 = 1.
inline double verify_basis_perturbation(const SpanBasis& basis) {
  const std::size_t count =
      basis.kind == BasisKind::Mixed ? basis.spaceable_count
      : basis.kind == BasisKind::Spaceable ? basis.members.size() : 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& m = basis.members[i];
    auto c = unshifted_coefficients(m.poly);
    const auto mu = static_cast<std::size_t>(base_monomial(m));
    if (c.size() <= mu) c.resize(mu + 1, 0.0);
    c[mu] -= 1.0;
    double s = 0.0;
    for (cplx x : c) s += std::norm(x);
    sum += std::sqrt(s);
  }
  return sum;
}

struct GramReport {
  Eigen::MatrixXcd gram;
  double lambda_min = 0.0;
  double h_bound = std::numeric_limits<double>::infinity();  // 1 / lambda_min
};

/// Gram matrix of the members on the unit circle (by Parseval) and its
/// smallest eigenvalue.
inline GramReport gram_independence(const std::vector<Polynomial>& members) {
  if (members.empty()) throw std::invalid_argument("gram_independence needs a member");
  std::vector<std::vector<cplx>> coeffs;
  for (const auto& p : members) coeffs.push_back(unshifted_coefficients(p));
  const auto n = static_cast<Eigen::Index>(members.size());
  GramReport r;
  r.gram.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& a = coeffs[static_cast<std::size_t>(i)];
      const auto& b = coeffs[static_cast<std::size_t>(j)];
      cplx s = 0.0;
      for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) s += a[k] * std::conj(b[k]);
      r.gram(i, j) = s;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(r.gram, Eigen::EigenvaluesOnly);
  r.lambda_min = eig.eigenvalues().minCoeff();
  if (r.lambda_min > 0.0) r.h_bound = 1.0 / r.lambda_min;
  return r;
}

inline GramReport gram_independence(const SpanBasis& basis) {
  std::vector<Polynomial> polys;
  for (const auto& m : basis.members) polys.push_back(m.poly);
  return gram_independence(polys);
}

/// Builds a basis and enforces its invariants: every member passed its fit,
/// the Gram matrix has full numerical rank, and a spaceable perturbation sum
/// stays below 1/2.
inline SpanBasis make_span_basis(std::vector<FhcCandidate> members, BasisKind kind,
                                 std::size_t spaceable_count = 0) {
  SpanBasis b{std::move(members), kind, 0.0, spaceable_count};
  if (b.members.empty()) throw std::invalid_argument("basis needs at least one member");
  for (const auto& m : b.members) {
    if (!m.passed()) throw std::invalid_argument("basis member failed its fit: " + to_string(m.status));
  }
  if (kind == BasisKind::Spaceable) b.spaceable_count = b.members.size();
  b.perturbation_sum = verify_basis_perturbation(b);
  if (kind != BasisKind::Dense && !(b.perturbation_sum < 0.5)) {
    throw std::invalid_argument("basis rejected: perturbation sum " + std::to_string(b.perturbation_sum) +
                                " is not below 1/2");
  }
  if (!(gram_independence(b).lambda_min > 1e-12)) {
    throw std::invalid_argument("basis rejected: Gram matrix is numerically singular");
  }
  return b;
}

}  // namespace freqdyn
