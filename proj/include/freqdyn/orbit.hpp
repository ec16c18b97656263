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

// Orbit scans: hit sets of f o phi_n near P_l on K_nu, span combinations and
// iterate convergence.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "freqdyn/approx.hpp"
#include "freqdyn/density.hpp"
#include "freqdyn/geometry.hpp"
#include "freqdyn/maps.hpp"

namespace freqdyn {

/// A finite linear combination sum_i c_i p_i; each term keeps its own basis.
struct Combination {
  std::vector<std::pair<cplx, Polynomial>> terms;

  cplx operator()(cplx z) const {
    cplx s = 0.0;
    for (const auto& [c, p] : terms) {
      if (c != cplx(0.0)) s += c * p(z);
    }
    return s;
  }
};

/// sup over sample_grid(K) of |f(m(z)) - P(z)|.
template <class F>
double orbit_distance(const F& f, const HoloMap& m, const CompactSet& k, const Polynomial& p,
                      int grid_res) {
  double e = 0.0;
  for (cplx z : sample_grid(k, grid_res)) e = std::max(e, std::abs(f(apply(m, z)) - p(z)));
  return e;
}

struct ScanPair {
  int nu = 1;
  int l = 1;
  IndexSet designed;
  Polynomial target;  // P_l
};

struct ScanOptions {
  double delta = 0.1;
  std::int64_t horizon = 100;
  int grid_res = 8;
  double envelope_constant = 1.0;
  double grid_slack = 1.1;  // a hit needs slack * grid error < delta
  int eps_grid_res = 4;
  BoundarySampling eps_sampling{2000, -8, 8};
};

struct PairScan {
  int nu = 1;
  int l = 1;
  IndexSet designed;
  IndexSet hits;
  std::vector<double> errors;  // errors[n - 1]
  std::int64_t burn_in = 0;
  double max_designed_error = 0.0;
  std::optional<DensityReport> density;
  bool pass = false;
  std::string witness;
};

struct OrbitScanReport {
  std::vector<PairScan> pairs;
  double delta = 0.0;
  std::int64_t horizon = 0;

  bool pass() const {
    return !pairs.empty() && std::all_of(pairs.begin(), pairs.end(), [](const PairScan& p) { return p.pass; });
  }
};

/// Least n0 such that sup_{K} eps(phi_n(z)) < threshold for every n0 < n <= horizon.
inline std::int64_t envelope_burn_in(const MapFamily& maps, const CompactSet& k, const Domain& domain,
                                     double threshold, std::int64_t horizon, const ScanOptions& opt) {
  const auto grid = sample_grid(k, opt.eps_grid_res);
  for (std::int64_t n = horizon; n >= 1; --n) {
    const HoloMap m = maps(n);
    double worst = 0.0;
    for (cplx z : grid) worst = std::max(worst, eps_to_boundary(domain, apply(m, z), opt.eps_sampling));
    if (worst >= threshold) return n;
  }
  return 0;
}

template <class F>
OrbitScanReport scan(const F& f, const MapFamily& maps, const Exhaustion& exhaustion,
                     const Domain& domain, const std::vector<ScanPair>& pairs, const ScanOptions& opt) {
  if (!(opt.delta > 0.0)) throw std::invalid_argument("scan: delta must be positive");
  if (opt.horizon < 2) throw std::invalid_argument("scan: horizon must be at least 2");
  OrbitScanReport report;
  report.delta = opt.delta;
  report.horizon = opt.horizon;

  std::map<int, std::int64_t> burn_in_by_nu;
  for (const auto& pr : pairs) {
    PairScan ps;
    ps.nu = pr.nu;
    ps.l = pr.l;
    ps.designed = pr.designed.truncated(std::min(opt.horizon, pr.designed.horizon()));
    const CompactSet k = exhaustion(pr.nu);
    if (!burn_in_by_nu.count(pr.nu)) {
      burn_in_by_nu[pr.nu] =
          envelope_burn_in(maps, k, domain, opt.delta / opt.envelope_constant, opt.horizon, opt);
    }
    ps.burn_in = burn_in_by_nu[pr.nu];

    std::vector<std::int64_t> hits;
    ps.errors.reserve(static_cast<std::size_t>(opt.horizon));
    for (std::int64_t n = 1; n <= opt.horizon; ++n) {
      const double e = orbit_distance(f, maps(n), k, pr.target, opt.grid_res);
      ps.errors.push_back(e);
      if (opt.grid_slack * e < opt.delta) hits.push_back(n);
    }
    ps.hits = IndexSet(std::move(hits), opt.horizon);

    ps.pass = true;
    std::int64_t first_designed = 0;
    for (auto n : ps.designed.elements()) {
      if (n <= ps.burn_in) continue;
      if (first_designed == 0) first_designed = n;
      ps.max_designed_error = std::max(ps.max_designed_error, ps.errors[static_cast<std::size_t>(n - 1)]);
      if (ps.pass && !ps.hits.contains(n)) {
        ps.pass = false;
        ps.witness = "designed n=" + std::to_string(n) + " missed with error " +
                     std::to_string(ps.errors[static_cast<std::size_t>(n - 1)]);
      }
    }
    if (first_designed == 0) {
      ps.pass = false;
      if (ps.witness.empty()) ps.witness = "no designed index beyond the burn-in";
    } else {
      const std::int64_t start = std::max<std::int64_t>(ps.burn_in, first_designed);
      if (start < opt.horizon) {
        ps.density = density_report(ps.hits, opt.horizon, start);
        if (!(ps.density->lower_estimate > 0.0) && ps.pass) {
          ps.pass = false;
          ps.witness = "hit density estimate is zero";
        }
      } else if (ps.pass) {
        ps.pass = false;
        ps.witness = "burn-in reaches the horizon";
      }
    }
    report.pairs.push_back(std::move(ps));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Span combinations

struct BoundCheck {
  std::int64_t n = 0;
  int nu = 0;
  double measured = 0.0;
  double bound = 0.0;
};

struct CombinationScanReport {
  OrbitScanReport scan;
  std::size_t lead = 0;          // member whose index blocks define the design
  std::vector<cplx> normalized;  // coefficients after dividing by the lead one
  double h_bound = 0.0;
  std::vector<BoundCheck> bounds;
  bool bounds_ok = true;
  std::optional<int> mu0;  // Mixed: the searched block that passed

  bool pass() const { return scan.pass() && bounds_ok; }
};

namespace detail {

inline Combination combine(const SpanBasis& basis, const std::vector<cplx>& alpha, std::size_t from,
                           std::size_t to) {
  Combination c;
  for (std::size_t i = from; i < to && i < alpha.size(); ++i) c.terms.emplace_back(alpha[i], basis.members[i].poly);
  return c;
}

// Designed (nu, l) blocks of one member, read from its island tags.
inline std::vector<ScanPair> design_of(const FhcCandidate& member, const DenseSequence& dense,
                                       std::int64_t horizon) {
  std::map<std::pair<int, int>, std::vector<std::int64_t>> blocks;
  for (const auto& p : member.target.pieces) {
    if (p.tag && p.tag->l > 0 && p.tag->n <= horizon) blocks[{p.tag->nu, p.tag->l}].push_back(p.tag->n);
  }
  std::vector<ScanPair> out;
  for (auto& [key, ns] : blocks) {
    std::sort(ns.begin(), ns.end());
    out.push_back({key.first, key.second, IndexSet(ns, horizon), dense(key.second)});
  }
  return out;
}

}  // namespace detail

/// Scans sum alpha_mu f_mu after normalizing the lead coefficient to 1. The
/// lead is the first nonzero coefficient (last for Dense bases, whose
/// members carry the designs on blocks above their own index). Every designed
/// island is also checked against (1 + sqrt(H)) * max tau of that island.
inline CombinationScanReport combination_scan(const SpanBasis& basis, const std::vector<cplx>& alpha,
                                              const MapFamily& maps, const Exhaustion& exhaustion,
                                              const Domain& domain, const ScanOptions& opt,
                                              const DenseSequence& dense = default_dense_sequence()) {
  if (alpha.size() != basis.members.size()) throw std::invalid_argument("combination_scan: size mismatch");
  std::optional<std::size_t> lead;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] != cplx(0.0)) {
      if (!lead || basis.kind == BasisKind::Dense) lead = i;
      if (basis.kind != BasisKind::Dense) break;
    }
  }
  if (!lead) throw std::invalid_argument("combination_scan: zero coefficient vector");

  CombinationScanReport r;
  r.h_bound = gram_independence(basis).h_bound;
  auto scan_lead = [&](std::size_t li) {
    r.lead = li;
    r.normalized.clear();
    for (cplx a : alpha) r.normalized.push_back(a / alpha[li]);
    const auto design = detail::design_of(basis.members[li], dense, opt.horizon);
    const Combination f = detail::combine(basis, r.normalized, 0, r.normalized.size());
    r.scan = scan(f, maps, exhaustion, domain, design, opt);

    r.bounds.clear();
    r.bounds_ok = true;
    for (const auto& piece : basis.members[li].target.pieces) {
      if (!piece.tag || piece.tag->l == 0 || piece.tag->n > opt.horizon) continue;
      double tau = 0.0;
      for (const auto& m : basis.members) {
        for (const auto& q : m.target.pieces) {
          if (q.tag && q.tag->n == piece.tag->n && q.tag->nu == piece.tag->nu) tau = std::max(tau, q.tau);
        }
      }
      BoundCheck b{piece.tag->n, piece.tag->nu, 0.0, (1.0 + std::sqrt(r.h_bound)) * tau};
      b.measured = orbit_distance(f, maps(b.n), exhaustion(b.nu), dense(piece.tag->l), opt.grid_res);
      r.bounds_ok = r.bounds_ok && b.measured <= b.bound;
      r.bounds.push_back(b);
    }
  };

  if (basis.kind != BasisKind::Mixed) {
    scan_lead(*lead);
    return r;
  }

  // Mixed: f = Phi + H with H from the leading h-members and Phi from the
  // dense members. The scan tries each h-member with a nonzero coefficient
  // as mu0 and additionally asks both components to stay within delta / 2.
  for (std::size_t mu0 = 0; mu0 < basis.spaceable_count; ++mu0) {
    if (alpha[mu0] == cplx(0.0)) continue;
    scan_lead(mu0);
    const Combination h = detail::combine(basis, r.normalized, 0, basis.spaceable_count);
    const Combination phi = detail::combine(basis, r.normalized, basis.spaceable_count, basis.members.size());
    const Polynomial zero;
    bool split_ok = true;
    for (const auto& ps : r.scan.pairs) {
      for (auto n : ps.designed.elements()) {
        if (n <= ps.burn_in) continue;
        const CompactSet k = exhaustion(ps.nu);
        const HoloMap m = maps(n);
        split_ok = split_ok && opt.grid_slack * orbit_distance(phi, m, k, zero, opt.grid_res) < opt.delta / 2 &&
                   opt.grid_slack * orbit_distance(h, m, k, dense(ps.l), opt.grid_res) < opt.delta / 2;
      }
    }
    if (split_ok && r.pass()) {
      r.mu0 = static_cast<int>(mu0) + 1;
      return r;
    }
  }
  if (!r.scan.pairs.empty()) r.scan.pairs.front().pass = false;
  r.bounds_ok = false;
  return r;
}

// ---------------------------------------------------------------------------
// Iterates

struct IterateReport {
  std::vector<double> errors;  // e_1 .. e_N (shorter if escaped)
  bool escaped = false;
  std::string witness;

  /// Index (1-based) after which the errors never increase, or nullopt.
  std::optional<std::size_t> monotone_from(double tolerance = 0.0) const {
    if (errors.empty()) return std::nullopt;
    std::size_t from = errors.size();
    while (from > 1 && errors[from - 1] <= errors[from - 2] + tolerance) --from;
    return from;
  }
};

/// Value of a conformal pair at infinity of its source domain.
inline cplx conformal_at_infinity(const ConformalPair& f) {
  if (f.kind == ConformalKind::CayleyDiscToHalfPlane) return f.reversed ? cplx(1.0) : cplx(-1.0);
  return 1.0;
}

/// e_n = sup_K |Q(phi^n z) - Q(limit)|, with Q replaced by Q o f when a
/// conformal pair f is supplied (then the limit may be the point at infinity).
inline IterateReport iterate_convergence(const HoloMap& m, const Polynomial& q, const CompactSet& k,
                                         const ExtendedPoint& limit, int steps,
                                         const std::optional<ConformalPair>& f = std::nullopt,
                                         int grid_res = 16) {
  if (steps < 1) throw std::invalid_argument("iterate_convergence: steps >= 1");
  if (limit.infinite && !f) throw std::invalid_argument("iterate_convergence: infinite limit needs a pair");
  auto observe = [&](cplx w) { return f ? q(f->forward(w)) : q(w); };
  const cplx target = limit.infinite ? q(conformal_at_infinity(*f)) : observe(limit.z);

  IterateReport r;
  std::vector<cplx> pts = sample_grid(k, grid_res);
  for (int n = 1; n <= steps; ++n) {
    double e = 0.0;
    try {
      for (cplx& w : pts) {
        w = apply(m, w);
        e = std::max(e, std::abs(observe(w) - target));
      }
    } catch (const DomainViolation& ex) {
      r.escaped = true;
      r.witness = "iterate " + std::to_string(n) + " left the domain: " + ex.what();
      break;
    }
    r.errors.push_back(e);
  }
  return r;
}

}  // namespace freqdyn
