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

// Natural densities, the recursive halving split, separated index families
// and the similarity/translation criteria.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "freqdyn/geometry.hpp"

namespace freqdyn {

enum class DescriptorKind { None, ArithmeticProgression, Constructed };

/// Closed-form tag. ArithmeticProgression means {first + j * step : j >= 0}.
struct Descriptor {
  DescriptorKind kind = DescriptorKind::None;
  std::int64_t first = 0;
  std::int64_t step = 0;
};

/// Strictly increasing positive integers, all at most the horizon N_max.
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(std::vector<std::int64_t> elements, std::int64_t horizon, Descriptor d = {})
      : elements_(std::move(elements)), horizon_(horizon), descriptor_(d) {
    for (std::size_t i = 0; i < elements_.size(); ++i) {
      if (elements_[i] < 1 || elements_[i] > horizon_) {
        throw std::invalid_argument("IndexSet: element outside [1, horizon]");
      }
      if (i > 0 && elements_[i] <= elements_[i - 1]) {
        throw std::invalid_argument("IndexSet: elements must be strictly increasing");
      }
    }
  }

  static IndexSet arithmetic(std::int64_t first, std::int64_t step, std::int64_t horizon) {
    if (first < 1 || step < 1) throw std::invalid_argument("arithmetic progression needs first, step >= 1");
    std::vector<std::int64_t> e;
    for (std::int64_t n = first; n <= horizon; n += step) e.push_back(n);
    return IndexSet(std::move(e), horizon, {DescriptorKind::ArithmeticProgression, first, step});
  }

  /// {n : n = residue (mod modulus)}
  static IndexSet residue_class(std::int64_t residue, std::int64_t modulus, std::int64_t horizon) {
    std::int64_t first = ((residue % modulus) + modulus) % modulus;
    if (first == 0) first = modulus;
    return arithmetic(first, modulus, horizon);
  }

  static IndexSet naturals(std::int64_t horizon) { return arithmetic(1, 1, horizon); }

  template <typename Pred>
  static IndexSet from_predicate(Pred pred, std::int64_t horizon) {
    std::vector<std::int64_t> e;
    for (std::int64_t n = 1; n <= horizon; ++n) {
      if (pred(n)) e.push_back(n);
    }
    return IndexSet(std::move(e), horizon);
  }

  const std::vector<std::int64_t>& elements() const { return elements_; }
  std::int64_t horizon() const { return horizon_; }
  const Descriptor& descriptor() const { return descriptor_; }
  std::size_t size() const { return elements_.size(); }
  bool empty() const { return elements_.empty(); }

  bool contains(std::int64_t n) const {
    return std::binary_search(elements_.begin(), elements_.end(), n);
  }

  IndexSet truncated(std::int64_t horizon) const {
    std::vector<std::int64_t> e;
    for (auto n : elements_) {
      if (n <= horizon) e.push_back(n);
    }
    return IndexSet(std::move(e), std::min(horizon, horizon_), descriptor_);
  }

  bool operator==(const IndexSet& o) const { return elements_ == o.elements_; }

 private:
  std::vector<std::int64_t> elements_;
  std::int64_t horizon_ = 0;
  Descriptor descriptor_;
};

inline bool disjoint(const IndexSet& a, const IndexSet& b) {
  auto i = a.elements().begin();
  auto j = b.elements().begin();
  while (i != a.elements().end() && j != b.elements().end()) {
    if (*i == *j) return false;
    if (*i < *j) ++i; else ++j;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Density estimates

/// Finite-horizon density evidence. The estimates are prefix-ratio extrema
/// over [burn_in, horizon], never the true liminf/limsup.
struct DensityReport {
  std::vector<std::pair<std::int64_t, double>> prefix_ratios;  // checkpoints
  double lower_estimate = 0.0;
  double upper_estimate = 0.0;
  std::int64_t burn_in = 0;
  std::int64_t horizon = 0;
  bool empty = false;
  std::optional<double> exact_density;
};

inline DensityReport density_report(const IndexSet& a, std::int64_t horizon, std::int64_t burn_in,
                                    std::size_t checkpoints = 1000) {
  if (burn_in < 1 || burn_in >= horizon || horizon > a.horizon()) {
    throw std::invalid_argument("density estimate needs 1 <= burn_in < horizon <= N_max");
  }
  DensityReport r;
  r.burn_in = burn_in;
  r.horizon = horizon;
  if (a.descriptor().kind == DescriptorKind::ArithmeticProgression) {
    r.exact_density = 1.0 / static_cast<double>(a.descriptor().step);
  }
  if (a.empty()) {
    r.empty = true;
    return r;
  }
  const std::int64_t span = horizon - burn_in + 1;
  const std::int64_t stride = std::max<std::int64_t>(1, span / static_cast<std::int64_t>(checkpoints));
  double lo = 1.0, hi = 0.0;
  std::int64_t count = 0;
  auto it = a.elements().begin();
  for (std::int64_t n = 1; n <= horizon; ++n) {
    while (it != a.elements().end() && *it == n) {
      ++count;
      ++it;
    }
    if (n < burn_in) continue;
    const double ratio = static_cast<double>(count) / static_cast<double>(n);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    if ((n - burn_in) % stride == 0 || n == horizon) r.prefix_ratios.emplace_back(n, ratio);
  }
  r.lower_estimate = lo;
  r.upper_estimate = hi;
  return r;
}

inline DensityReport lower_density_estimate(const IndexSet& a, std::int64_t horizon,
                                            std::int64_t burn_in) {
  return density_report(a, horizon, burn_in);
}

inline double upper_density_estimate(const IndexSet& a, std::int64_t horizon, std::int64_t burn_in) {
  return density_report(a, horizon, burn_in).upper_estimate;
}

// ---------------------------------------------------------------------------
// Splitting

/// Subsequence receiving the k-th element under recursive halving:
/// odd ranks go to part 1, ranks 2 mod 4 to part 2, 4 mod 8 to part 3, ...
inline int split_assignment(std::int64_t k) {
  if (k < 1) throw std::invalid_argument("split_assignment: rank starts at 1");
  return std::countr_zero(static_cast<std::uint64_t>(k)) + 1;
}

/// Part j < parts receives the ranks assigned to j; the last part absorbs the rest.
inline std::vector<IndexSet> split(const IndexSet& a, int parts, std::int64_t horizon) {
  if (parts < 1) throw std::invalid_argument("split: parts must be >= 1");
  const std::int64_t h = std::min(horizon, a.horizon());
  std::vector<std::vector<std::int64_t>> buckets(static_cast<std::size_t>(parts));
  std::int64_t rank = 0;
  for (auto n : a.elements()) {
    ++rank;
    if (n > h) break;
    const int j = std::min(split_assignment(rank), parts);
    buckets[static_cast<std::size_t>(j - 1)].push_back(n);
  }
  std::vector<IndexSet> out;
  out.reserve(buckets.size());
  for (auto& b : buckets) out.emplace_back(std::move(b), h, Descriptor{DescriptorKind::Constructed});
  return out;
}

// ---------------------------------------------------------------------------
// Separated families

struct PairIndex {
  int l = 1;
  int nu = 1;
  bool operator==(const PairIndex&) const = default;
};

/// Cantor diagonal enumeration of (l, nu): (1,1), (1,2), (2,1), (1,3), ...
inline PairIndex diagonal_pair(int p) {
  if (p < 1) throw std::invalid_argument("diagonal_pair: index starts at 1");
  int s = 2;
  int remaining = p;
  while (remaining > s - 1) {
    remaining -= s - 1;
    ++s;
  }
  return {remaining, s - remaining};
}

struct FamilyMember {
  PairIndex index;
  IndexSet set;
};

struct SeparatedFamily {
  std::vector<FamilyMember> pairs;
  std::int64_t multiplier = 1;  // M
  int base = 2;
  std::int64_t horizon = 0;

  int max_nu() const {
    int v = 0;
    for (const auto& p : pairs) v = std::max(v, p.index.nu);
    return v;
  }

  /// A(nu) = union over l of A(l, nu).
  IndexSet union_for_nu(int nu) const {
    std::vector<std::int64_t> e;
    for (const auto& p : pairs) {
      if (p.index.nu == nu) e.insert(e.end(), p.set.elements().begin(), p.set.elements().end());
    }
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return IndexSet(std::move(e), horizon, Descriptor{DescriptorKind::Constructed});
  }
};

struct SeparationReport {
  bool pass = true;
  std::string violated;  // "disjointness", "n >= nu" or "separation"
  std::string witness;
  std::vector<double> lower_estimates;  // per member, same order as pairs
};

/// Brute-force check of disjointness, n >= nu and |n - m| >= nu + mu over all
/// element pairs up to the horizon.
inline SeparationReport verify_separated_family(const SeparatedFamily& f,
                                                std::int64_t burn_in = 0) {
  SeparationReport r;
  struct Tagged {
    std::int64_t n;
    std::size_t member;
  };
  std::vector<Tagged> all;
  for (std::size_t i = 0; i < f.pairs.size(); ++i) {
    for (auto n : f.pairs[i].set.elements()) all.push_back({n, i});
  }
  auto label = [&](std::size_t i) {
    std::ostringstream os;
    os << "A(" << f.pairs[i].index.l << "," << f.pairs[i].index.nu << ")";
    return os.str();
  };
  for (const auto& t : all) {
    if (t.n < f.pairs[t.member].index.nu) {
      r.pass = false;
      r.violated = "n >= nu";
      r.witness = label(t.member) + " contains " + std::to_string(t.n);
      break;
    }
  }
  for (std::size_t i = 0; r.pass && i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      const auto& a = all[i];
      const auto& b = all[j];
      if (a.n == b.n) {
        if (a.member != b.member) {
          r.pass = false;
          r.violated = "disjointness";
          r.witness = label(a.member) + " and " + label(b.member) + " share " + std::to_string(a.n);
          break;
        }
        continue;
      }
      const std::int64_t need = f.pairs[a.member].index.nu + f.pairs[b.member].index.nu;
      if (std::llabs(a.n - b.n) < need) {
        r.pass = false;
        r.violated = "separation";
        r.witness = std::to_string(a.n) + " in " + label(a.member) + " vs " +
                    std::to_string(b.n) + " in " + label(b.member);
        break;
      }
    }
  }
  const std::int64_t burn = burn_in > 0 ? burn_in : std::max<std::int64_t>(1, f.horizon / 4);
  for (const auto& p : f.pairs) {
    r.lower_estimates.push_back(
        burn < f.horizon ? density_report(p.set, f.horizon, burn).lower_estimate : 0.0);
  }
  return r;
}

class FamilyVerificationError : public std::runtime_error {
 public:
  FamilyVerificationError(const std::string& property, const std::string& witness)
      : std::runtime_error("separated family violates " + property + ": " + witness),
        property_(property) {}
  const std::string& property() const { return property_; }

 private:
  std::string property_;
};

/// Residue-class construction: raw set p is {M (b^(p-1) + j b^p)}, then
/// elements of set p too close to a raw element of a later set are dropped,
/// as are elements below nu(p). The result is re-verified before returning.
inline SeparatedFamily build_separated_family(int num_pairs, std::int64_t horizon,
                                              std::int64_t multiplier, int base = 2) {
  if (num_pairs < 1) throw std::invalid_argument("build_separated_family: num_pairs >= 1");
  if (multiplier < 1 || base < 2) throw std::invalid_argument("build_separated_family: M >= 1, base >= 2");

  std::vector<PairIndex> idx;
  std::vector<std::int64_t> spacing;
  std::vector<double> dens;
  for (int p = 1; p <= num_pairs; ++p) {
    idx.push_back(diagonal_pair(p));
    std::int64_t bp = 1;
    for (int i = 0; i < p; ++i) bp *= base;
    spacing.push_back(multiplier * bp);
    dens.push_back(1.0 / static_cast<double>(multiplier * bp));
  }
  for (int p = 0; p < num_pairs; ++p) {
    if (spacing[p] < 2 * idx[p].nu) {
      throw std::invalid_argument("build_separated_family: M too small for in-set separation");
    }
    double removed = 0.0;
    for (int q = p + 1; q < num_pairs; ++q) {
      const std::int64_t window = 2 * (idx[p].nu + idx[q].nu) - 1;
      removed += dens[q] * static_cast<double>((window + spacing[p] - 1) / spacing[p]);
    }
    if (dens[p] - removed <= 0.0) {
      throw std::invalid_argument("build_separated_family: M too small, density bound not positive");
    }
  }

  std::vector<std::vector<std::int64_t>> raw(static_cast<std::size_t>(num_pairs));
  for (int p = 0; p < num_pairs; ++p) {
    const std::int64_t first = spacing[p] / base;
    for (std::int64_t n = first; n <= horizon; n += spacing[p]) raw[p].push_back(n);
  }

  SeparatedFamily fam;
  fam.multiplier = multiplier;
  fam.base = base;
  fam.horizon = horizon;
  for (int p = 0; p < num_pairs; ++p) {
    std::vector<std::int64_t> kept;
    for (auto n : raw[p]) {
      if (n < idx[p].nu) continue;
      bool clash = false;
      for (int q = p + 1; q < num_pairs && !clash; ++q) {
        const std::int64_t need = idx[p].nu + idx[q].nu;
        auto it = std::lower_bound(raw[q].begin(), raw[q].end(), n - need + 1);
        clash = it != raw[q].end() && *it < n + need;
      }
      if (!clash) kept.push_back(n);
    }
    fam.pairs.push_back({idx[p], IndexSet(std::move(kept), horizon, {DescriptorKind::Constructed})});
  }
  const auto report = verify_separated_family(fam);
  if (!report.pass) throw FamilyVerificationError(report.violated, report.witness);
  return fam;
}

// ---------------------------------------------------------------------------
// Criteria for similarity and translation sequences

using ComplexSequence = std::function<cplx(std::int64_t)>;
using RealSequence = std::function<double(std::int64_t)>;

inline constexpr std::array<double, 3> kDivergenceThresholds{1.0, 10.0, 100.0};

struct SimilarityReport {
  bool pass = false;
  bool growth_ok = false;     // |b_n| - w_n |a_n| -> +inf proxy
  bool pairwise_ok = false;   // |b_m - b_n| >= w_{m-n} (|a_m| + |a_n|)
  std::array<std::int64_t, 3> last_crossing{};  // last n with value <= T (0 if none)
  std::optional<std::pair<std::int64_t, std::int64_t>> first_violation;  // (m, n)
};

inline SimilarityReport check_similarity_criterion(const ComplexSequence& a_seq,
                                                   const ComplexSequence& b_seq,
                                                   const RealSequence& omega,
                                                   std::int64_t horizon) {
  std::vector<cplx> a(static_cast<std::size_t>(horizon) + 1), b(a.size());
  std::vector<double> w(a.size());
  for (std::int64_t n = 1; n <= horizon; ++n) {
    a[n] = a_seq(n);
    b[n] = b_seq(n);
    w[n] = omega(n);
    if (a[n] == cplx(0.0)) throw std::invalid_argument("similarity criterion needs a_n != 0");
    if (n > 1 && w[n] < w[n - 1]) throw std::invalid_argument("omega must be nondecreasing");
  }
  SimilarityReport r;
  for (std::size_t t = 0; t < kDivergenceThresholds.size(); ++t) {
    for (std::int64_t n = 1; n <= horizon; ++n) {
      if (std::abs(b[n]) - w[n] * std::abs(a[n]) <= kDivergenceThresholds[t]) r.last_crossing[t] = n;
    }
  }
  r.growth_ok = std::all_of(r.last_crossing.begin(), r.last_crossing.end(),
                            [&](std::int64_t n) { return n < horizon; });
  r.pairwise_ok = true;
  for (std::int64_t n = 1; n <= horizon && r.pairwise_ok; ++n) {
    for (std::int64_t m = n + 1; m <= horizon; ++m) {
      if (std::abs(b[m] - b[n]) < w[m - n] * (std::abs(a[m]) + std::abs(a[n]))) {
        r.pairwise_ok = false;
        r.first_violation = std::make_pair(m, n);
        break;
      }
    }
  }
  r.pass = r.growth_ok && r.pairwise_ok;
  return r;
}

struct TranslationReport {
  bool pass = false;
  bool slow_growth = false;  // threshold 100 reached only at k >= 100
  std::vector<double> infima;  // infima[k-1] = inf_n |b_{n+k} - b_n|
  std::array<std::optional<std::int64_t>, 3> crossing;  // first k reaching each threshold
};

inline TranslationReport check_translation_separation(const ComplexSequence& b_seq,
                                                      std::int64_t horizon,
                                                      std::int64_t k_max = 0) {
  if (k_max <= 0) k_max = horizon / 2;
  std::vector<cplx> b(static_cast<std::size_t>(horizon) + 1);
  for (std::int64_t n = 1; n <= horizon; ++n) b[n] = b_seq(n);
  TranslationReport r;
  for (std::int64_t k = 1; k <= k_max; ++k) {
    double inf = std::numeric_limits<double>::infinity();
    for (std::int64_t n = 1; n + k <= horizon; ++n) inf = std::min(inf, std::abs(b[n + k] - b[n]));
    r.infima.push_back(inf);
    for (std::size_t t = 0; t < kDivergenceThresholds.size(); ++t) {
      if (!r.crossing[t] && inf >= kDivergenceThresholds[t]) r.crossing[t] = k;
    }
  }
  r.pass = std::all_of(r.crossing.begin(), r.crossing.end(), [](const auto& c) { return c.has_value(); });
  r.slow_growth = r.pass && *r.crossing[2] >= 100;
  return r;
}

// ---------------------------------------------------------------------------
// Serialization

inline void write_index_set(std::ostream& os, const IndexSet& a) {
  for (auto n : a.elements()) os << n << '\n';
}

inline IndexSet read_index_set(std::istream& is, std::int64_t horizon) {
  std::vector<std::int64_t> e;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    e.push_back(std::stoll(line));
  }
  return IndexSet(std::move(e), horizon);
}

inline void write_density_csv(std::ostream& os, const DensityReport& r) {
  os << "n,prefix_ratio\n";
  for (const auto& [n, ratio] : r.prefix_ratios) os << n << ',' << ratio << '\n';
  os << "# summary,lower=" << r.lower_estimate << ",upper=" << r.upper_estimate
     << ",burn_in=" << r.burn_in << ",horizon=" << r.horizon << ",empty=" << (r.empty ? 1 : 0)
     << '\n';
}

}  // namespace freqdyn
