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

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "freqdyn/orbit.hpp"

using namespace freqdyn;

namespace {

double golden_value(const std::string& file, const std::string& key) {
  std::ifstream in(std::string(FREQDYN_GOLDEN_DIR) + "/" + file);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + "=", 0) == 0) return std::stod(line.substr(key.size() + 1));
  }
  ADD_FAILURE() << "missing golden " << key;
  return 0.0;
}

const Domain kPlane{DomainKind::WholePlane};

MapFamily translations() {
  return [](std::int64_t n) { return HoloMap(Similarity{1.0, static_cast<double>(n)}); };
}

// f(w) = P(w - n0): the orbit of f lands exactly on P at n0 and nowhere else.
struct ShiftedTarget {
  Polynomial p;
  double n0;
  cplx operator()(cplx w) const { return p(w - n0); }
};

}  // namespace

TEST(OrbitDistance, IdentityAndTriangleInequality) {
  const Polynomial p({1.0, 2.0, cplx(0.0, 1.0)});
  const CompactSet k = ClosedDisc{0.0, 2.0};
  EXPECT_EQ(orbit_distance(p, HoloMap(), k, p, 8), 0.0);
  const Polynomial q({0.0, 0.0, 0.0, 1.0});
  Combination sum;
  sum.terms = {{1.0, p}, {cplx(0.0, 2.0), q}};
  const HoloMap m(Similarity{cplx(0.5, 0.5), 3.0});
  const double whole = orbit_distance(sum, m, k, Polynomial(), 8);
  const double parts = orbit_distance(p, m, k, Polynomial(), 8) + 2.0 * orbit_distance(q, m, k, Polynomial(), 8);
  EXPECT_LE(whole, parts + 1e-12);
  // Scaling is exact.
  Combination twice;
  twice.terms = {{2.0, p}};
  EXPECT_NEAR(orbit_distance(twice, m, k, Polynomial(), 8), 2.0 * orbit_distance(p, m, k, Polynomial(), 8), 1e-12);
}

TEST(Scan, ZeroFunctionHasNoHits) {
  ScanOptions opt;
  opt.horizon = 50;
  opt.delta = 0.1;
  const Polynomial zero;
  const std::vector<ScanPair> pairs = {{1, 1, IndexSet::arithmetic(10, 10, 50), Polynomial::monomial(1)}};
  const auto r = scan(zero, translations(), Exhaustion::standard(kPlane), kPlane, pairs, opt);
  EXPECT_TRUE(r.pairs[0].hits.empty());
  EXPECT_FALSE(r.pass());
  EXPECT_NE(r.pairs[0].witness.find("missed"), std::string::npos);
}

TEST(Scan, HugeDeltaHitsEverything) {
  ScanOptions opt;
  opt.horizon = 50;
  opt.delta = 1e9;
  const Polynomial zero;
  const std::vector<ScanPair> pairs = {{1, 1, IndexSet::arithmetic(10, 10, 50), Polynomial::monomial(1)}};
  const auto r = scan(zero, translations(), Exhaustion::standard(kPlane), kPlane, pairs, opt);
  EXPECT_EQ(r.pairs[0].hits.size(), 50u);
  EXPECT_EQ(r.pairs[0].burn_in, 0);
  EXPECT_TRUE(r.pass());
}

TEST(Scan, HitsGrowWithDelta) {
  const ShiftedTarget f{Polynomial({0.0, 1.0, 0.3}), 20.0};
  const std::vector<ScanPair> pairs = {{1, 1, IndexSet({20}, 60), Polynomial({0.0, 1.0, 0.3})}};
  std::vector<std::int64_t> previous;
  for (double delta : {1e-3, 0.1, 1.0, 10.0, 1e3}) {
    ScanOptions opt;
    opt.horizon = 60;
    opt.delta = delta;
    const auto r = scan(f, translations(), Exhaustion::standard(kPlane), kPlane, pairs, opt);
    const auto& hits = r.pairs[0].hits.elements();
    for (auto n : previous) EXPECT_TRUE(r.pairs[0].hits.contains(n)) << delta;
    EXPECT_TRUE(r.pairs[0].hits.contains(20));
    EXPECT_LT(r.pairs[0].errors[19], 1e-12);
    previous = hits;
  }
}

TEST(Scan, DesignedIndexInsideBurnInIsSkipped) {
  const ShiftedTarget f{Polynomial::monomial(1), 5.0};
  ScanOptions opt;
  opt.horizon = 100;
  opt.delta = 0.05;
  const std::vector<ScanPair> pairs = {{1, 1, IndexSet({5}, 100), Polynomial::monomial(1)}};
  const auto r = scan(f, translations(), Exhaustion::standard(kPlane), kPlane, pairs, opt);
  // eps(phi_n(K_1)) ~ 2/n stays above delta until n ~ 40.
  EXPECT_GT(r.pairs[0].burn_in, 5);
  EXPECT_FALSE(r.pass());
  EXPECT_EQ(r.pairs[0].witness, "no designed index beyond the burn-in");
  EXPECT_THROW(scan(f, translations(), Exhaustion::standard(kPlane), kPlane, pairs, ScanOptions{0.0}),
               std::invalid_argument);
}

TEST(Combination, UnitVectorReproducesTheMemberScan) {
  RunawayConfig rc;
  rc.domain = kPlane;
  rc.maps = translations();
  rc.exhaustion = Exhaustion::standard(kPlane);
  rc.n_max = 40;
  rc.nu_max = 1;
  rc.burn_in = 8;
  rc.family = {build_separated_family(3, 40, 8).union_for_nu(1)};
  const auto tr = build_carleman_truncation(rc, 1);
  const auto plan = SplitPlan::blocks(rc.family, 1, 2, 40);
  std::vector<FhcCandidate> members;
  for (int mu = 1; mu <= 2; ++mu) members.push_back(fit_on_compacts(assemble_spaceable_target(mu, tr, kPlane, plan)));
  const auto basis = make_span_basis(members, BasisKind::Spaceable);

  ScanOptions opt;
  opt.horizon = 40;
  opt.delta = 0.5;
  const auto combo = combination_scan(basis, {1.0, 0.0}, rc.maps, rc.exhaustion, kPlane, opt);
  const auto direct = scan(basis.members[0].poly, rc.maps, rc.exhaustion, kPlane,
                           detail::design_of(basis.members[0], default_dense_sequence(), 40), opt);
  ASSERT_EQ(combo.scan.pairs.size(), direct.pairs.size());
  ASSERT_FALSE(direct.pairs.empty());
  for (std::size_t i = 0; i < direct.pairs.size(); ++i) {
    EXPECT_EQ(combo.scan.pairs[i].errors, direct.pairs[i].errors);
    EXPECT_EQ(combo.scan.pairs[i].designed, direct.pairs[i].designed);
  }
  EXPECT_EQ(combo.lead, 0u);

  const auto second = combination_scan(basis, {0.0, 2.0}, rc.maps, rc.exhaustion, kPlane, opt);
  EXPECT_EQ(second.lead, 1u);
  EXPECT_EQ(second.normalized[1], cplx(1.0));
  EXPECT_THROW(combination_scan(basis, {0.0, 0.0}, rc.maps, rc.exhaustion, kPlane, opt), std::invalid_argument);
  EXPECT_THROW(combination_scan(basis, {1.0}, rc.maps, rc.exhaustion, kPlane, opt), std::invalid_argument);
}

TEST(Iterates, ParabolicMatchesClosedFormAndGolden) {
  const HoloMap phi(ParabolicDisc{1.0, 1.0, 1});
  const CompactSet k = ClosedDisc{0.0, 0.5};
  const auto r = iterate_convergence(phi, Polynomial::monomial(1), k, ExtendedPoint(1.0), 200);
  ASSERT_EQ(r.errors.size(), 200u);
  EXPECT_FALSE(r.escaped);
  const auto grid = sample_grid(k, 16);
  for (int n : {1, 10, 200}) {
    double oracle = 0.0;
    for (cplx z : grid) {
      const cplx d = z - 1.0;
      oracle = std::max(oracle, std::abs(2.0 * d / (2.0 - cplx(0.0, n) * d)));
    }
    EXPECT_NEAR(r.errors[static_cast<std::size_t>(n - 1)], oracle, 1e-10) << n;
  }
  EXPECT_LT(r.errors.back(), 0.1);
  EXPECT_NEAR(r.errors.back(), golden_value("iterates.txt", "parabolic_e200"), 1e-9);
  ASSERT_TRUE(r.monotone_from().has_value());
  EXPECT_EQ(*r.monotone_from(), 1u);
}

TEST(Iterates, IdentityControlStaysFlat) {
  const auto r = iterate_convergence(HoloMap(), Polynomial::monomial(1), ClosedDisc{0.0, 0.5}, ExtendedPoint(0.0), 50);
  for (double e : r.errors) EXPECT_NEAR(e, 0.5, 1e-15);
}

TEST(Iterates, HalfPlaneThroughCayleyHeadsToInfinity) {
  const HoloMap shift(HalfPlaneShift{1.0, 1.0, 1});
  const ConformalPair pair{ConformalKind::CayleyDiscToHalfPlane, true};
  const auto r = iterate_convergence(shift, Polynomial::monomial(1), ClosedDisc{1.0, 0.5}, ExtendedPoint::infinity(),
                                     200, pair);
  EXPECT_FALSE(r.escaped);
  EXPECT_LT(r.errors.back(), r.errors.front());
  EXPECT_LT(r.errors.back(), 0.05);
  EXPECT_THROW(iterate_convergence(shift, Polynomial::monomial(1), ClosedDisc{1.0, 0.5}, ExtendedPoint::infinity(), 5),
               std::invalid_argument);
}

TEST(Iterates, RejectsEmptyRuns) {
  EXPECT_THROW(iterate_convergence(HoloMap(), Polynomial::monomial(1), ClosedDisc{0.0, 0.5}, ExtendedPoint(0.0), 0),
               std::invalid_argument);
  IterateReport empty;
  EXPECT_FALSE(empty.monotone_from().has_value());
  IterateReport bumpy{{3.0, 1.0, 2.0, 1.5, 1.0}, false, ""};
  EXPECT_EQ(*bumpy.monotone_from(), 3u);
}
