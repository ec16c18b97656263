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

// Weak and strong frequently-runaway checks and finite Carleman truncations.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "freqdyn/density.hpp"
#include "freqdyn/geometry.hpp"
#include "freqdyn/maps.hpp"

namespace freqdyn {

struct RunawayConfig {
  Domain domain;
  MapFamily maps;
  Exhaustion exhaustion;
  std::vector<IndexSet> family;  // family[nu - 1] = A(nu)
  std::int64_t n_max = 0;
  int nu_max = 0;
  ImageBoundOptions image_options;
  std::int64_t burn_in = 0;       // density burn-in; 0 selects n_max / 100
  double tail_fraction = 0.5;     // (P3) proxy: offenders must stop before tail_fraction * n_max

  std::int64_t effective_burn_in() const {
    return burn_in > 0 ? burn_in : std::max<std::int64_t>(1, n_max / 100);
  }
};

struct Island {
  std::int64_t n = 0;
  int nu = 0;
  CompactSet source;
  ClosedDisc image_bound;
  HoloMap map;
};

struct Verdict {
  bool pass = true;
  std::string witness;
};

// ---------------------------------------------------------------------------
// Weak runaway

struct WeakRunawayReport {
  IndexSet disjoint_indices;
  DensityReport density;
};

/// Density evidence for {n : K and phi_n(K) disjoint}. Unknown counts as not disjoint.
inline WeakRunawayReport check_weak_runaway(const MapFamily& maps, const CompactSet& k,
                                            std::int64_t horizon, std::int64_t burn_in = 0,
                                            const ImageBoundOptions& opt = {}) {
  std::vector<std::int64_t> hits;
  for (std::int64_t n = 1; n <= horizon; ++n) {
    const ClosedDisc image = image_enclosing_disc(maps(n), k, opt);
    if (disjointness(k, image) == Overlap::Disjoint) hits.push_back(n);
  }
  WeakRunawayReport r;
  r.disjoint_indices = IndexSet(std::move(hits), horizon);
  const std::int64_t burn = burn_in > 0 ? burn_in : std::max<std::int64_t>(1, horizon / 100);
  r.density = density_report(r.disjoint_indices, horizon, burn);
  return r;
}

/// phi_{2^k} = phi^k and the identity elsewhere: hypercyclic, not frequently so.
inline MapFamily counterexample_schedule(const HoloMap& phi) {
  return [phi](std::int64_t n) -> HoloMap {
    if (n >= 2 && std::has_single_bit(static_cast<std::uint64_t>(n))) {
      return iterate(phi, std::countr_zero(static_cast<std::uint64_t>(n)));
    }
    return HoloMap(Identity{});
  };
}

// ---------------------------------------------------------------------------
// Strong runaway

/// Islands phi_n(K_nu) for nu <= nu_max and n in A(nu), n <= n_max, ordered by n.
inline std::vector<Island> collect_islands(const RunawayConfig& cfg) {
  std::vector<Island> out;
  for (int nu = 1; nu <= cfg.nu_max && nu <= static_cast<int>(cfg.family.size()); ++nu) {
    const CompactSet k = cfg.exhaustion(nu);
    for (auto n : cfg.family[static_cast<std::size_t>(nu - 1)].elements()) {
      if (n > cfg.n_max) break;
      HoloMap m = cfg.maps(n);
      out.push_back({n, nu, k, image_enclosing_disc(m, k, cfg.image_options), std::move(m)});
    }
  }
  std::sort(out.begin(), out.end(), [](const Island& a, const Island& b) { return a.n < b.n; });
  return out;
}

/// First pair of discs that are not strictly separated, by a sweep over x-extents.
inline std::optional<std::pair<std::size_t, std::size_t>> first_overlapping_discs(
    const std::vector<ClosedDisc>& discs) {
  std::vector<std::size_t> order(discs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double la = discs[a].center.real() - discs[a].radius;
    const double lb = discs[b].center.real() - discs[b].radius;
    return la < lb || (la == lb && a < b);
  });
  std::vector<std::size_t> active;
  for (std::size_t idx : order) {
    const double left = discs[idx].center.real() - discs[idx].radius;
    std::erase_if(active, [&](std::size_t a) {
      return discs[a].center.real() + discs[a].radius < left;
    });
    for (std::size_t a : active) {
      if (disc_overlap(discs[a], discs[idx]) != Overlap::Disjoint) {
        return std::make_pair(std::min(a, idx), std::max(a, idx));
      }
    }
    active.push_back(idx);
  }
  return std::nullopt;
}

struct ProbeRow {
  int mu = 0;
  std::size_t intersecting = 0;
  std::int64_t largest_n = 0;  // 0 when no island meets the probe
};

struct StrongRunawayReport {
  Verdict p1, p2, p3;
  std::vector<DensityReport> densities;  // per nu
  std::vector<ProbeRow> probes;
  std::vector<Island> islands;

  bool pass() const { return p1.pass && p2.pass && p3.pass; }
};

inline StrongRunawayReport check_strong_runaway(const RunawayConfig& cfg) {
  if (cfg.n_max < 2 || cfg.nu_max < 1) throw std::invalid_argument("strong runaway needs horizons");
  if (static_cast<int>(cfg.family.size()) < cfg.nu_max) {
    throw std::invalid_argument("strong runaway: family shorter than nu_max");
  }
  StrongRunawayReport r;
  const std::int64_t burn = cfg.effective_burn_in();

  for (int nu = 1; nu <= cfg.nu_max; ++nu) {
    const IndexSet a = cfg.family[static_cast<std::size_t>(nu - 1)].truncated(cfg.n_max);
    r.densities.push_back(density_report(a, cfg.n_max, burn));
    if (r.p1.pass && !(r.densities.back().lower_estimate > 0.0)) {
      r.p1 = {false, "A(" + std::to_string(nu) + ") has lower density estimate 0"};
    }
  }

  for (int i = 1; i <= cfg.nu_max && r.p2.pass; ++i) {
    for (int j = i + 1; j <= cfg.nu_max; ++j) {
      if (!disjoint(cfg.family[static_cast<std::size_t>(i - 1)], cfg.family[static_cast<std::size_t>(j - 1)])) {
        r.p2 = {false, "A(" + std::to_string(i) + ") and A(" + std::to_string(j) + ") intersect"};
        break;
      }
    }
  }

  r.islands = collect_islands(cfg);
  if (r.p2.pass) {
    std::vector<ClosedDisc> discs;
    discs.reserve(r.islands.size());
    for (const auto& isl : r.islands) discs.push_back(isl.image_bound);
    if (auto bad = first_overlapping_discs(discs)) {
      const auto& a = r.islands[bad->first];
      const auto& b = r.islands[bad->second];
      std::ostringstream os;
      os << "phi_" << a.n << "(K_" << a.nu << ") meets phi_" << b.n << "(K_" << b.nu << ")";
      r.p2 = {false, os.str()};
    }
  }

  const double cutoff = cfg.tail_fraction * static_cast<double>(cfg.n_max);
  for (int mu = 1; mu <= cfg.nu_max; ++mu) {
    const CompactSet probe = cfg.exhaustion(mu);
    ProbeRow row{mu, 0, 0};
    for (const auto& isl : r.islands) {
      if (disjointness(probe, isl.image_bound) != Overlap::Disjoint) {
        ++row.intersecting;
        row.largest_n = std::max(row.largest_n, isl.n);
      }
    }
    if (r.p3.pass && static_cast<double>(row.largest_n) > cutoff) {
      r.p3 = {false, "K_" + std::to_string(mu) + " still meets island n=" +
                         std::to_string(row.largest_n) + " in the tail"};
    }
    r.probes.push_back(row);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Carleman truncation

class HorizonExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// F = K_1 u ... u K_bases u (islands with nu >= k_base), at finite horizon.
struct CarlemanTruncation {
  std::vector<CompactSet> base;
  std::vector<Island> islands;
  int k_base = 1;
};

inline CarlemanTruncation build_carleman_truncation(const RunawayConfig& cfg, int bases) {
  if (bases < 0) throw std::invalid_argument("build_carleman_truncation: bases >= 0");
  const StrongRunawayReport report = check_strong_runaway(cfg);
  if (!report.pass()) {
    std::string why = !report.p1.pass ? report.p1.witness
                      : !report.p2.pass ? report.p2.witness
                                        : report.p3.witness;
    throw std::invalid_argument("build_carleman_truncation: not strongly runaway: " + why);
  }
  CarlemanTruncation tr;
  for (int mu = 1; mu <= bases; ++mu) tr.base.push_back(cfg.exhaustion(mu));

  auto clears_base = [&](const Island& isl, int resolution) {
    return std::all_of(tr.base.begin(), tr.base.end(), [&](const CompactSet& k) {
      return disjointness(k, isl.image_bound, resolution) == Overlap::Disjoint;
    });
  };
  int k = 1;
  for (; k <= cfg.nu_max; ++k) {
    const bool ok = std::all_of(report.islands.begin(), report.islands.end(), [&](const Island& isl) {
      return isl.nu < k || clears_base(isl, 16);
    });
    if (ok) break;
  }
  if (k > cfg.nu_max) {
    throw HorizonExhausted("no k_base <= nu_max separates the islands from the base compacts");
  }
  tr.k_base = k;
  for (const auto& isl : report.islands) {
    if (isl.nu >= k) tr.islands.push_back(isl);
  }

  std::vector<ClosedDisc> discs;
  for (const auto& isl : tr.islands) {
    if (!clears_base(isl, 64)) throw std::logic_error("truncation island meets the base");
    discs.push_back(isl.image_bound);
  }
  if (first_overlapping_discs(discs)) throw std::logic_error("truncation islands overlap");
  return tr;
}

}  // namespace freqdyn
