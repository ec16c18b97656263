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

// Holomorphic self-map families, conformal pairs and image bounds.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "freqdyn/geometry.hpp"

namespace freqdyn {

/// Inputs closer than this to the slit (-inf, 0] are rejected by slit-plane maps.
inline constexpr double kSlitGuard = 1e-9;

inline bool near_slit(cplx z) {
  if (z.real() <= 0.0) return std::abs(z.imag()) <= kSlitGuard;
  return std::abs(z) <= kSlitGuard;
}

/// Principal branch of z^(1/N), arg in (-pi, pi].
inline cplx principal_root(cplx z, int root_n) {
  if (root_n == 1) return z;
  if (root_n == 2) return std::sqrt(z);
  return std::polar(std::pow(std::abs(z), 1.0 / root_n), std::arg(z) / root_n);
}

inline cplx int_power(cplx z, int p) {
  cplx out = 1.0;
  for (int i = 0; i < p; ++i) out *= z;
  return out;
}

// ---------------------------------------------------------------------------
// Conformal pairs

enum class ConformalKind {
  CayleyDiscToHalfPlane,  // f(z) = (1 + z)/(1 - z), f^-1(w) = (w - 1)/(w + 1)
  SlitToDisc,             // f(z) = (z^(1/2) - 1)/(z^(1/2) + 1), f^-1(w) = ((1 + w)/(1 - w))^2
};

struct ConformalPair {
  ConformalKind kind = ConformalKind::CayleyDiscToHalfPlane;
  bool reversed = false;

  ConformalPair inverse() const { return {kind, !reversed}; }

  Domain source() const { return reversed ? natural_target() : natural_source(); }
  Domain target() const { return reversed ? natural_source() : natural_target(); }

  cplx forward(cplx z) const { return reversed ? natural_backward(z) : natural_forward(z); }
  cplx backward(cplx w) const { return reversed ? natural_forward(w) : natural_backward(w); }

  std::string name() const {
    std::string base = kind == ConformalKind::CayleyDiscToHalfPlane ? "CayleyDiscToHalfPlane"
                                                                   : "SlitToDisc";
    return reversed ? base + "^-1" : base;
  }

  bool operator==(const ConformalPair&) const = default;

 private:
  Domain natural_source() const {
    return {kind == ConformalKind::CayleyDiscToHalfPlane ? DomainKind::UnitDisc
                                                         : DomainKind::SlitPlane};
  }
  Domain natural_target() const {
    return {kind == ConformalKind::CayleyDiscToHalfPlane ? DomainKind::RightHalfPlane
                                                         : DomainKind::UnitDisc};
  }
  cplx natural_forward(cplx z) const {
    if (kind == ConformalKind::CayleyDiscToHalfPlane) return (1.0 + z) / (1.0 - z);
    if (near_slit(z)) throw DomainViolation("SlitToDisc: input on or near the slit");
    const cplx s = std::sqrt(z);
    return (s - 1.0) / (s + 1.0);
  }
  cplx natural_backward(cplx w) const {
    if (kind == ConformalKind::CayleyDiscToHalfPlane) return (w - 1.0) / (w + 1.0);
    const cplx q = (1.0 + w) / (1.0 - w);
    return q * q;
  }
};

// ---------------------------------------------------------------------------
// Map variants

struct Similarity {
  cplx a{1.0};
  cplx b{};
};

/// z -> k (z - a)/(1 - conj(a) z)
struct DiscAutomorphism {
  cplx k{1.0};
  cplx a{};
};

/// z -> 1 + 2(z - 1)/(2 - i a n^gamma (z - 1)), parabolic with fixed point 1.
struct ParabolicDisc {
  double a = 1.0;
  double gamma = 1.0;
  std::int64_t n = 1;

  double shift() const { return a * std::pow(static_cast<double>(n), gamma); }
};

/// z -> n^alpha z^(1/N) + n^beta on the slit plane.
struct RootShift {
  double alpha = 0.0;
  double beta = 1.0;
  int root_n = 1;
  std::int64_t n = 1;

  double scale() const { return std::pow(static_cast<double>(n), alpha); }
  double offset() const { return std::pow(static_cast<double>(n), beta); }
};

/// z -> z + i a n^gamma on the right half plane.
struct HalfPlaneShift {
  double a = 1.0;
  double gamma = 1.0;
  std::int64_t n = 1;

  double shift() const { return a * std::pow(static_cast<double>(n), gamma); }
};

class HoloMap;

struct Conjugated {
  ConformalPair pair;
  std::shared_ptr<const HoloMap> inner;
};

struct Iterated {
  std::shared_ptr<const HoloMap> base;
  int power = 1;
};

struct Identity {};

/// Immutable holomorphic self-map. Construction validates the parameters.
class HoloMap {
 public:
  using Variant = std::variant<Similarity, DiscAutomorphism, ParabolicDisc, RootShift,
                               HalfPlaneShift, Conjugated, Iterated, Identity>;

  HoloMap() : v_(Identity{}) {}
  HoloMap(Variant v) : v_(std::move(v)) { validate(); }  // NOLINT(google-explicit-constructor)

  const Variant& variant() const { return v_; }

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }

  /// Declared domain; empty for Identity, which acts on any domain.
  std::optional<Domain> domain() const {
    struct Visitor {
      std::optional<Domain> operator()(const Similarity&) const {
        return Domain{DomainKind::WholePlane};
      }
      std::optional<Domain> operator()(const DiscAutomorphism&) const {
        return Domain{DomainKind::UnitDisc};
      }
      std::optional<Domain> operator()(const ParabolicDisc&) const {
        return Domain{DomainKind::UnitDisc};
      }
      std::optional<Domain> operator()(const RootShift&) const {
        return Domain{DomainKind::SlitPlane};
      }
      std::optional<Domain> operator()(const HalfPlaneShift&) const {
        return Domain{DomainKind::RightHalfPlane};
      }
      std::optional<Domain> operator()(const Conjugated& c) const { return c.pair.target(); }
      std::optional<Domain> operator()(const Iterated& it) const { return it.base->domain(); }
      std::optional<Domain> operator()(const Identity&) const { return std::nullopt; }
    };
    return std::visit(Visitor{}, v_);
  }

  std::string describe() const {
    std::ostringstream os;
    struct Visitor {
      std::ostringstream& os;
      void operator()(const Similarity& s) const { os << "Similarity(a=" << s.a << ",b=" << s.b << ")"; }
      void operator()(const DiscAutomorphism& d) const {
        os << "DiscAutomorphism(k=" << d.k << ",a=" << d.a << ")";
      }
      void operator()(const ParabolicDisc& p) const {
        os << "ParabolicDisc(a=" << p.a << ",gamma=" << p.gamma << ",n=" << p.n << ")";
      }
      void operator()(const RootShift& r) const {
        os << "RootShift(alpha=" << r.alpha << ",beta=" << r.beta << ",N=" << r.root_n
           << ",n=" << r.n << ")";
      }
      void operator()(const HalfPlaneShift& h) const {
        os << "HalfPlaneShift(a=" << h.a << ",gamma=" << h.gamma << ",n=" << h.n << ")";
      }
      void operator()(const Conjugated& c) const {
        os << "Conjugated(" << c.pair.name() << "," << c.inner->describe() << ")";
      }
      void operator()(const Iterated& it) const {
        os << "Iterated(" << it.base->describe() << "^" << it.power << ")";
      }
      void operator()(const Identity&) const { os << "Identity"; }
    };
    std::visit(Visitor{os}, v_);
    return os.str();
  }

 private:
  void validate() const {
    if (const auto* s = std::get_if<Similarity>(&v_)) {
      if (s->a == cplx(0.0)) throw std::invalid_argument("Similarity needs a != 0");
    } else if (const auto* d = std::get_if<DiscAutomorphism>(&v_)) {
      if (std::abs(std::abs(d->k) - 1.0) > 1e-12 || !(std::abs(d->a) < 1.0)) {
        throw std::invalid_argument("DiscAutomorphism needs |k| = 1 and |a| < 1");
      }
    } else if (const auto* p = std::get_if<ParabolicDisc>(&v_)) {
      if (!(p->a > 0.0) || !(p->gamma >= 1.0) || p->n < 1) {
        throw std::invalid_argument("ParabolicDisc needs a > 0, gamma >= 1, n >= 1");
      }
    } else if (const auto* r = std::get_if<RootShift>(&v_)) {
      if (!(r->beta > 0.0) || !(r->beta >= 1.0 + r->alpha) || r->root_n < 1 || r->n < 1) {
        throw std::invalid_argument("RootShift needs beta > 0, beta >= 1 + alpha, N >= 1, n >= 1");
      }
    } else if (const auto* h = std::get_if<HalfPlaneShift>(&v_)) {
      if (!(h->a > 0.0) || !(h->gamma >= 1.0) || h->n < 1) {
        throw std::invalid_argument("HalfPlaneShift needs a > 0, gamma >= 1, n >= 1");
      }
    } else if (const auto* c = std::get_if<Conjugated>(&v_)) {
      if (!c->inner) throw std::invalid_argument("Conjugated needs an inner map");
    } else if (const auto* it = std::get_if<Iterated>(&v_)) {
      if (!it->base || it->power < 1) throw std::invalid_argument("Iterated needs power >= 1");
    }
  }

  Variant v_;
};

using MapFamily = std::function<HoloMap(std::int64_t)>;

inline Similarity similarity_power(const Similarity& s, int p) {
  cplx a = 1.0, b = 0.0;
  for (int i = 0; i < p; ++i) {
    b = s.a * b + s.b;
    a *= s.a;
  }
  return {a, b};
}

/// Evaluates the closed form without any domain check (used at boundary fixed points).
inline cplx apply_unchecked(const HoloMap& m, cplx z) {
  struct Visitor {
    cplx z;
    cplx operator()(const Similarity& s) const { return s.a * z + s.b; }
    cplx operator()(const DiscAutomorphism& d) const {
      return d.k * (z - d.a) / (1.0 - std::conj(d.a) * z);
    }
    cplx operator()(const ParabolicDisc& p) const {
      const cplx u = z - 1.0;
      return 1.0 + 2.0 * u / (2.0 - cplx(0.0, p.shift()) * u);
    }
    cplx operator()(const RootShift& r) const {
      return r.scale() * principal_root(z, r.root_n) + r.offset();
    }
    cplx operator()(const HalfPlaneShift& h) const { return z + cplx(0.0, h.shift()); }
    cplx operator()(const Conjugated& c) const {
      return c.pair.forward(apply_unchecked(*c.inner, c.pair.backward(z)));
    }
    cplx operator()(const Iterated& it) const {
      if (const auto* s = it.base->get_if<Similarity>()) {
        const Similarity sp = similarity_power(*s, it.power);
        return sp.a * z + sp.b;
      }
      cplx w = z;
      for (int i = 0; i < it.power; ++i) w = apply_unchecked(*it.base, w);
      return w;
    }
    cplx operator()(const Identity&) const { return z; }
  };
  return std::visit(Visitor{z}, m.variant());
}

inline void require_in_domain(const HoloMap& m, cplx z) {
  const auto d = m.domain();
  if (!d) return;
  if (!d->contains(z) || (d->kind == DomainKind::SlitPlane && near_slit(z))) {
    throw DomainViolation(m.describe() + ": point outside " + to_string(d->kind));
  }
}

inline cplx apply(const HoloMap& m, cplx z) {
  require_in_domain(m, z);
  if (const auto* c = m.get_if<Conjugated>()) {
    return c->pair.forward(apply(*c->inner, c->pair.backward(z)));
  }
  if (const auto* it = m.get_if<Iterated>()) {
    if (it->base->get_if<Similarity>()) return apply_unchecked(m, z);
    cplx w = z;
    for (int i = 0; i < it->power; ++i) w = apply(*it->base, w);
    return w;
  }
  return apply_unchecked(m, z);
}

namespace detail {

inline cplx raw_inverse(const HoloMap& m, cplx w) {
  struct Visitor {
    cplx w;
    cplx operator()(const Similarity& s) const { return (w - s.b) / s.a; }
    cplx operator()(const DiscAutomorphism& d) const {
      const cplx u = w / d.k;
      return (u + d.a) / (1.0 + std::conj(d.a) * u);
    }
    cplx operator()(const ParabolicDisc& p) const {
      const cplx u = w - 1.0;
      return 1.0 + 2.0 * u / (2.0 + cplx(0.0, p.shift()) * u);
    }
    cplx operator()(const RootShift& r) const {
      const cplx z = int_power((w - r.offset()) / r.scale(), r.root_n);
      if (near_slit(z)) throw DomainViolation("RootShift inverse lands on the slit");
      return z;
    }
    cplx operator()(const HalfPlaneShift& h) const { return w - cplx(0.0, h.shift()); }
    cplx operator()(const Conjugated& c) const {
      return c.pair.forward(raw_inverse(*c.inner, c.pair.backward(w)));
    }
    cplx operator()(const Iterated& it) const {
      if (const auto* s = it.base->get_if<Similarity>()) {
        const Similarity sp = similarity_power(*s, it.power);
        return (w - sp.b) / sp.a;
      }
      cplx z = w;
      for (int i = 0; i < it.power; ++i) z = raw_inverse(*it.base, z);
      return z;
    }
    cplx operator()(const Identity&) const { return w; }
  };
  return std::visit(Visitor{w}, m.variant());
}

}  // namespace detail

/// The unique preimage of w; fails when w is not in the image of the domain.
inline cplx inverse_apply(const HoloMap& m, cplx w, double tolerance = 1e-10) {
  const cplx z = detail::raw_inverse(m, w);
  const cplx back = apply(m, z);
  if (!(std::abs(back - w) <= tolerance * std::max(1.0, std::abs(w)))) {
    throw DomainViolation(m.describe() + ": point not in the image (round-trip residual)");
  }
  return z;
}

inline HoloMap conjugate(const ConformalPair& pair, const HoloMap& m) {
  const auto d = m.domain();
  if (d && *d != pair.source()) {
    throw std::invalid_argument("conjugate: map domain " + to_string(d->kind) +
                                " differs from pair source " + to_string(pair.source().kind));
  }
  return HoloMap(Conjugated{pair, std::make_shared<const HoloMap>(m)});
}

inline HoloMap iterate(const HoloMap& m, int power) {
  if (power < 1) throw std::invalid_argument("iterate: power must be >= 1");
  return HoloMap(Iterated{std::make_shared<const HoloMap>(m), power});
}

struct ImageBoundOptions {
  double margin = 1.05;
  int resolution = 16;
};

/// A closed disc containing the image of c. Analytic for translations,
/// similarities and root shifts; otherwise the minimal disc of the mapped
/// sample grid inflated by the margin factor.
inline ClosedDisc image_enclosing_disc(const HoloMap& m, const CompactSet& c,
                                       const ImageBoundOptions& opt = {}) {
  const ClosedDisc e = enclosing_disc(c);
  const auto grid = sample_grid(c, opt.resolution);
  for (cplx z : grid) require_in_domain(m, z);

  if (m.get_if<Identity>()) return e;
  if (const auto* s = m.get_if<Similarity>()) return {s->a * e.center + s->b, std::abs(s->a) * e.radius};
  if (const auto* h = m.get_if<HalfPlaneShift>()) return {e.center + cplx(0.0, h->shift()), e.radius};
  if (const auto* r = m.get_if<RootShift>()) {
    const double outer = std::abs(e.center) + e.radius;
    return {r->offset(), r->scale() * std::pow(outer, 1.0 / r->root_n)};
  }
  if (const auto* it = m.get_if<Iterated>()) {
    if (const auto* s = it->base->get_if<Similarity>()) {
      const Similarity sp = similarity_power(*s, it->power);
      return {sp.a * e.center + sp.b, std::abs(sp.a) * e.radius};
    }
  }
  if (grid.empty()) throw std::invalid_argument("image_enclosing_disc: empty compact");
  std::vector<cplx> image;
  image.reserve(grid.size());
  for (cplx z : grid) image.push_back(apply(m, z));
  ClosedDisc d = minimal_enclosing_disc(image);
  d.radius *= opt.margin;
  return d;
}

/// True iff every mapped sample point of c lies in d.
inline bool maps_into(const HoloMap& m, const Domain& d, const CompactSet& c, int resolution = 16) {
  for (cplx z : sample_grid(c, resolution)) {
    try {
      if (!d.contains(apply(m, z))) return false;
    } catch (const DomainViolation&) {
      return false;
    }
  }
  return true;
}

}  // namespace freqdyn
