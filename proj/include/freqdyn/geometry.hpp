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

// Planar domains, compact sets, exhaustions and the chordal metric.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/tools/minima.hpp>

namespace freqdyn {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

/// Raised when a point or set is used outside the domain it must live in.
class DomainViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A point of the Riemann sphere: either a finite complex number or infinity.
struct ExtendedPoint {
  cplx z{};
  bool infinite = false;

  ExtendedPoint() = default;
  ExtendedPoint(cplx value) : z(value) {}  // NOLINT(google-explicit-constructor)
  ExtendedPoint(double value) : z(value) {}  // NOLINT(google-explicit-constructor)

  static ExtendedPoint infinity() {
    ExtendedPoint p;
    p.infinite = true;
    return p;
  }
};

/// Chordal distance on the sphere of diameter 2.
inline double chordal_distance(const ExtendedPoint& a, const ExtendedPoint& b) {
  if (a.infinite && b.infinite) return 0.0;
  if (a.infinite) return 2.0 / std::sqrt(1.0 + std::norm(b.z));
  if (b.infinite) return 2.0 / std::sqrt(1.0 + std::norm(a.z));
  return 2.0 * std::abs(a.z - b.z) /
         std::sqrt((1.0 + std::norm(a.z)) * (1.0 + std::norm(b.z)));
}

// ---------------------------------------------------------------------------
// Domains

enum class DomainKind { WholePlane, UnitDisc, RightHalfPlane, SlitPlane };

inline std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::WholePlane: return "WholePlane";
    case DomainKind::UnitDisc: return "UnitDisc";
    case DomainKind::RightHalfPlane: return "RightHalfPlane";
    case DomainKind::SlitPlane: return "SlitPlane";
  }
  return "?";
}

inline DomainKind domain_kind_from_string(const std::string& name) {
  if (name == "WholePlane") return DomainKind::WholePlane;
  if (name == "UnitDisc") return DomainKind::UnitDisc;
  if (name == "RightHalfPlane") return DomainKind::RightHalfPlane;
  if (name == "SlitPlane") return DomainKind::SlitPlane;
  throw std::invalid_argument("unknown domain kind: " + name);
}

struct Domain {
  DomainKind kind = DomainKind::WholePlane;

  bool contains(cplx z) const {
    switch (kind) {
      case DomainKind::WholePlane: return std::isfinite(z.real()) && std::isfinite(z.imag());
      case DomainKind::UnitDisc: return std::abs(z) < 1.0;
      case DomainKind::RightHalfPlane: return z.real() > 0.0;
      case DomainKind::SlitPlane: return !(z.imag() == 0.0 && z.real() <= 0.0);
    }
    return false;
  }

  /// Whether infinity belongs to the boundary taken in the extended plane.
  bool unbounded() const { return kind != DomainKind::UnitDisc; }

  std::string boundary_description() const {
    switch (kind) {
      case DomainKind::WholePlane: return "{inf}";
      case DomainKind::UnitDisc: return "unit circle |z| = 1";
      case DomainKind::RightHalfPlane: return "imaginary axis plus {inf}";
      case DomainKind::SlitPlane: return "ray (-inf, 0] plus {inf}";
    }
    return "";
  }

  bool operator==(const Domain&) const = default;
};

/// Density of the boundary sampling used by eps_to_boundary.
struct BoundarySampling {
  int points = 10000;
  double log10_min = -8.0;
  double log10_max = 8.0;
};

namespace detail {

// Minimizes s -> dist(s) over log-spaced samples of [10^lo, 10^hi] plus s = 0,
// then polishes the best bracket with Brent's method.
template <typename Dist>
double minimize_over_ray(Dist dist, const BoundarySampling& sampling) {
  const int count = std::max(sampling.points, 3);
  std::vector<double> s(static_cast<std::size_t>(count) + 1);
  s[0] = 0.0;
  for (int i = 0; i < count; ++i) {
    const double t = sampling.log10_min +
                     (sampling.log10_max - sampling.log10_min) * i / (count - 1);
    s[static_cast<std::size_t>(i) + 1] = std::pow(10.0, t);
  }
  std::size_t best = 0;
  double best_value = dist(s[0]);
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double v = dist(s[i]);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  const double lo = s[best == 0 ? 0 : best - 1];
  const double hi = s[std::min(best + 1, s.size() - 1)];
  if (hi > lo) {
    auto polished = boost::math::tools::brent_find_minima(dist, lo, hi, 52);
    best_value = std::min(best_value, polished.second);
  }
  return best_value;
}

}  // namespace detail

/// Chordal distance from z to the boundary of the domain in the extended plane.
inline double eps_to_boundary(const Domain& domain, cplx z,
                              const BoundarySampling& sampling = {}) {
  if (!domain.contains(z)) {
    throw DomainViolation("eps_to_boundary: point outside " + to_string(domain.kind));
  }
  const ExtendedPoint p(z);
  const double to_infinity = chordal_distance(p, ExtendedPoint::infinity());
  switch (domain.kind) {
    case DomainKind::WholePlane:
      return to_infinity;
    case DomainKind::UnitDisc: {
      // The nearest circle point is z/|z|, so the Euclidean gap is 1 - |z|.
      const double r = std::abs(z);
      return 2.0 * (1.0 - r) / std::sqrt(2.0 * (1.0 + r * r));
    }
    case DomainKind::RightHalfPlane: {
      auto up = [&](double t) { return chordal_distance(p, cplx(0.0, t)); };
      auto down = [&](double t) { return chordal_distance(p, cplx(0.0, -t)); };
      return std::min({to_infinity, detail::minimize_over_ray(up, sampling),
                       detail::minimize_over_ray(down, sampling)});
    }
    case DomainKind::SlitPlane: {
      auto ray = [&](double s) { return chordal_distance(p, cplx(-s, 0.0)); };
      return std::min(to_infinity, detail::minimize_over_ray(ray, sampling));
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Compact sets

struct ClosedDisc {
  cplx center{};
  double radius = 0.0;

  bool contains(cplx z) const { return std::abs(z - center) <= radius; }
  bool operator==(const ClosedDisc&) const = default;
};

/// {r e^{i theta} : rmin <= r <= rmax, |theta| <= half_angle}.
/// rmin > rmax encodes the empty set (the slit-plane exhaustion yields it while
/// its outer radius is below one).
struct AnnularSector {
  double rmin = 1.0;
  double rmax = 1.0;
  double half_angle = kPi;

  bool empty() const { return rmin > rmax; }
  bool contains(cplx z) const {
    if (empty()) return false;
    const double r = std::abs(z);
    return r >= rmin && r <= rmax && std::abs(std::arg(z)) <= half_angle;
  }
  bool operator==(const AnnularSector&) const = default;
};

/// A compact given by an ordered closed boundary polygon and an enclosing disc.
struct SampledCompact {
  std::vector<cplx> boundary_points;
  ClosedDisc enclosing;

  bool contains(cplx z) const {
    const auto& pts = boundary_points;
    if (pts.empty() || !enclosing.contains(z)) return false;
    if (pts.size() < 3) {
      return std::any_of(pts.begin(), pts.end(), [&](cplx p) { return p == z; });
    }
    bool inside = false;
    for (std::size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
      const cplx a = pts[i], b = pts[j];
      if ((a.imag() > z.imag()) != (b.imag() > z.imag())) {
        const double x = (b.real() - a.real()) * (z.imag() - a.imag()) / (b.imag() - a.imag()) +
                         a.real();
        if (z.real() < x) inside = !inside;
      }
    }
    if (inside) return true;
    return std::any_of(pts.begin(), pts.end(), [&](cplx p) { return p == z; });
  }
};

using CompactSet = std::variant<ClosedDisc, AnnularSector, SampledCompact>;

inline ClosedDisc make_disc(cplx center, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("closed disc needs radius >= 0");
  return {center, radius};
}

inline AnnularSector make_sector(double rmin, double rmax, double half_angle) {
  if (!(rmin > 0.0)) throw std::invalid_argument("annular sector needs rmin > 0");
  if (!(half_angle >= 0.0 && half_angle <= kPi)) {
    throw std::invalid_argument("annular sector half angle must lie in [0, pi]");
  }
  return {rmin, rmax, half_angle};
}

inline SampledCompact make_sampled(std::vector<cplx> boundary, ClosedDisc enclosing) {
  for (cplx p : boundary) {
    if (std::abs(p - enclosing.center) > enclosing.radius * (1.0 + 1e-12)) {
      throw std::invalid_argument("sampled compact: boundary point outside enclosing disc");
    }
  }
  return {std::move(boundary), enclosing};
}

inline bool is_empty(const CompactSet& c) {
  if (const auto* s = std::get_if<AnnularSector>(&c)) return s->empty();
  if (const auto* s = std::get_if<SampledCompact>(&c)) return s->boundary_points.empty();
  return false;
}

inline bool contains(const CompactSet& c, cplx z) {
  return std::visit([&](const auto& set) { return set.contains(z); }, c);
}

inline ClosedDisc enclosing_disc(const CompactSet& c) {
  struct Visitor {
    ClosedDisc operator()(const ClosedDisc& d) const { return d; }
    ClosedDisc operator()(const AnnularSector& s) const { return {0.0, s.rmax}; }
    ClosedDisc operator()(const SampledCompact& s) const { return s.enclosing; }
  };
  return std::visit(Visitor{}, c);
}

namespace detail {

inline std::vector<cplx> disc_grid(const ClosedDisc& d, int resolution) {
  std::vector<cplx> out;
  out.push_back(d.center);
  if (d.radius == 0.0) return out;
  for (int k = 1; k <= resolution; ++k) {
    const double rho = d.radius * (static_cast<double>(k) / resolution);
    const int angles = 8 * k;
    for (int m = 0; m < angles; ++m) {
      const double theta = 2.0 * kPi * (static_cast<double>(m) / angles);
      out.push_back(d.center + std::polar(rho, theta));
    }
  }
  return out;
}

inline std::vector<cplx> sector_grid(const AnnularSector& s, int resolution) {
  std::vector<cplx> out;
  if (s.empty()) return out;
  const int radial = s.rmax > s.rmin ? resolution : 0;
  const int angular = s.half_angle > 0.0 ? 8 * resolution : 0;
  for (int k = 0; k <= radial; ++k) {
    const double frac = radial == 0 ? 0.0 : static_cast<double>(k) / radial;
    const double rho = s.rmin + (s.rmax - s.rmin) * frac;
    for (int m = 0; m <= angular; ++m) {
      const double afrac = angular == 0 ? 0.5 : static_cast<double>(m) / angular;
      const double theta = -s.half_angle + 2.0 * s.half_angle * afrac;
      out.push_back(std::polar(rho, theta));
    }
  }
  return out;
}

inline std::vector<cplx> sampled_grid(const SampledCompact& s, int resolution) {
  std::vector<cplx> out;
  const std::size_t n = s.boundary_points.size();
  if (n == 0) return out;
  std::size_t stride = 1;
  const std::size_t wanted = static_cast<std::size_t>(8) * static_cast<std::size_t>(resolution);
  while (stride * 2 * wanted <= n) stride *= 2;
  for (std::size_t i = 0; i < n; i += stride) out.push_back(s.boundary_points[i]);
  for (cplx z : disc_grid(s.enclosing, resolution)) {
    if (s.contains(z)) out.push_back(z);
  }
  return out;
}

}  // namespace detail

/// Deterministic sample of boundary and interior. Doubling the resolution
/// yields a superset of the previous sample.
inline std::vector<cplx> sample_grid(const CompactSet& c, int resolution) {
  if (resolution < 1) throw std::invalid_argument("sample_grid: resolution must be >= 1");
  struct Visitor {
    int res;
    std::vector<cplx> operator()(const ClosedDisc& d) const { return detail::disc_grid(d, res); }
    std::vector<cplx> operator()(const AnnularSector& s) const {
      return detail::sector_grid(s, res);
    }
    std::vector<cplx> operator()(const SampledCompact& s) const {
      return detail::sampled_grid(s, res);
    }
  };
  return std::visit(Visitor{resolution}, c);
}

/// Smallest closed disc containing the points (Welzl, fixed-seed shuffle).
inline ClosedDisc minimal_enclosing_disc(std::span<const cplx> input) {
  if (input.empty()) throw std::invalid_argument("minimal_enclosing_disc: no points");
  std::vector<cplx> pts(input.begin(), input.end());
  std::mt19937_64 rng(0x5eedULL);
  std::shuffle(pts.begin(), pts.end(), rng);

  auto from2 = [](cplx a, cplx b) { return ClosedDisc{(a + b) / 2.0, std::abs(a - b) / 2.0}; };
  auto from3 = [&](cplx a, cplx b, cplx c) {
    const cplx ab = b - a, ac = c - a;
    const double d = 2.0 * (ab.real() * ac.imag() - ab.imag() * ac.real());
    if (std::abs(d) < 1e-300) {
      ClosedDisc best = from2(a, b);
      for (auto cand : {from2(a, c), from2(b, c)}) {
        if (cand.radius > best.radius) best = cand;
      }
      return best;
    }
    const double ux = (ac.imag() * std::norm(ab) - ab.imag() * std::norm(ac)) / d;
    const double uy = (ab.real() * std::norm(ac) - ac.real() * std::norm(ab)) / d;
    const cplx center = a + cplx(ux, uy);
    return ClosedDisc{center, std::abs(center - a)};
  };
  auto inside = [](const ClosedDisc& d, cplx z) {
    return std::abs(z - d.center) <= d.radius * (1.0 + 1e-12) + 1e-300;
  };

  ClosedDisc disc{pts[0], 0.0};
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (inside(disc, pts[i])) continue;
    disc = {pts[i], 0.0};
    for (std::size_t j = 0; j < i; ++j) {
      if (inside(disc, pts[j])) continue;
      disc = from2(pts[i], pts[j]);
      for (std::size_t k = 0; k < j; ++k) {
        if (!inside(disc, pts[k])) disc = from3(pts[i], pts[j], pts[k]);
      }
    }
  }
  return disc;
}

// ---------------------------------------------------------------------------
// Disjointness

enum class Overlap { Disjoint, Intersecting, Unknown };

inline std::string to_string(Overlap o) {
  switch (o) {
    case Overlap::Disjoint: return "Disjoint";
    case Overlap::Intersecting: return "Intersecting";
    case Overlap::Unknown: return "Unknown";
  }
  return "?";
}

inline Overlap disc_overlap(const ClosedDisc& a, const ClosedDisc& b) {
  return std::abs(a.center - b.center) > a.radius + b.radius ? Overlap::Disjoint
                                                             : Overlap::Intersecting;
}

/// Exact for two discs. Otherwise Disjoint is only returned when the
/// enclosing discs separate, and Intersecting only with a sample witness.
inline Overlap disjointness(const CompactSet& a, const CompactSet& b, int resolution = 16) {
  if (is_empty(a) || is_empty(b)) return Overlap::Disjoint;
  const auto* da = std::get_if<ClosedDisc>(&a);
  const auto* db = std::get_if<ClosedDisc>(&b);
  if (da && db) return disc_overlap(*da, *db);
  if (disc_overlap(enclosing_disc(a), enclosing_disc(b)) == Overlap::Disjoint) {
    return Overlap::Disjoint;
  }
  for (cplx z : sample_grid(a, resolution)) {
    if (contains(b, z)) return Overlap::Intersecting;
  }
  for (cplx z : sample_grid(b, resolution)) {
    if (contains(a, z)) return Overlap::Intersecting;
  }
  return Overlap::Unknown;
}

/// Signed distance from z to the complement of c (positive means interior).
inline double interior_margin(const CompactSet& c, cplx z) {
  struct Visitor {
    cplx z;
    double operator()(const ClosedDisc& d) const { return d.radius - std::abs(z - d.center); }
    double operator()(const AnnularSector& s) const {
      if (s.empty()) return -1.0;
      const double r = std::abs(z);
      const double angular = (s.half_angle - std::abs(std::arg(z))) * std::min(r, 1.0);
      return std::min({r - s.rmin, s.rmax - r, angular});
    }
    double operator()(const SampledCompact& s) const {
      if (!s.contains(z)) return -1.0;
      double best = std::numeric_limits<double>::infinity();
      const auto& p = s.boundary_points;
      for (std::size_t i = 0, j = p.size() - 1; i < p.size(); j = i++) {
        const cplx e = p[i] - p[j];
        const double len2 = std::norm(e);
        double t = len2 > 0 ? ((z - p[j]) * std::conj(e)).real() / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, std::abs(z - (p[j] + t * e)));
      }
      return best;
    }
  };
  return std::visit(Visitor{z}, c);
}

// ---------------------------------------------------------------------------
// Exhaustions

/// Parameters of the slit-plane exhaustion
/// K_nu = {r e^{it} : min(1/R_nu, 1) <= r <= R_nu, |t| <= pi (1 - 1/nu)}
/// with R_nu = (C nu^(beta - alpha))^N.
struct SlitExhaustionParams {
  double alpha = 0.0;
  double beta = 1.0;
  int root_n = 1;
  double c = 0.25;
};

class Exhaustion {
 public:
  Exhaustion() = default;

  /// Closed-form exhaustion for the unit disc, the plane or the half plane.
  static Exhaustion standard(Domain domain) {
    if (domain.kind == DomainKind::SlitPlane) {
      throw std::invalid_argument("slit plane exhaustion needs SlitExhaustionParams");
    }
    return Exhaustion(domain, std::nullopt);
  }

  static Exhaustion slit_plane(const SlitExhaustionParams& params) {
    if (!(params.c > 0.0) || params.root_n < 1) {
      throw std::invalid_argument("slit exhaustion needs C > 0 and N >= 1");
    }
    return Exhaustion(Domain{DomainKind::SlitPlane}, params);
  }

  const Domain& domain() const { return domain_; }
  const std::optional<SlitExhaustionParams>& slit_params() const { return slit_; }

  /// R_nu of the slit-plane rule.
  double slit_radius(int nu) const {
    const auto& p = slit_.value();
    return std::pow(p.c * std::pow(static_cast<double>(nu), p.beta - p.alpha), p.root_n);
  }

  CompactSet operator()(int nu) const {
    if (nu < 1) throw std::invalid_argument("exhaustion index starts at 1");
    const double v = nu;
    switch (domain_.kind) {
      case DomainKind::WholePlane:
        return ClosedDisc{0.0, v};
      case DomainKind::UnitDisc:
        return ClosedDisc{0.0, 1.0 - 1.0 / (v + 1.0)};
      case DomainKind::RightHalfPlane:
        // Left edge at 1/(nu + 1); consecutive discs are strictly nested.
        return ClosedDisc{v, v - 1.0 / (v + 1.0)};
      case DomainKind::SlitPlane: {
        const double r = slit_radius(nu);
        return AnnularSector{std::min(1.0 / r, 1.0), r, kPi * (1.0 - 1.0 / v)};
      }
    }
    return ClosedDisc{};
  }

 private:
  Exhaustion(Domain d, std::optional<SlitExhaustionParams> slit) : domain_(d), slit_(slit) {}

  Domain domain_{DomainKind::WholePlane};
  std::optional<SlitExhaustionParams> slit_;
};

}  // namespace freqdyn
