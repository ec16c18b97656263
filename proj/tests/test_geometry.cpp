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

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "freqdyn/geometry.hpp"

using namespace freqdyn;

namespace {

// Chordal distance written out with the stereographic lift to the sphere of
// radius 1 centered at the origin: |P(z) - P(w)| equals the factor-2 metric.
std::array<double, 3> lift(const ExtendedPoint& p) {
  if (p.infinite) return {0.0, 0.0, 1.0};
  const double d = 1.0 + std::norm(p.z);
  return {2.0 * p.z.real() / d, 2.0 * p.z.imag() / d, (std::norm(p.z) - 1.0) / d};
}

double sphere_distance(const ExtendedPoint& a, const ExtendedPoint& b) {
  const auto x = lift(a), y = lift(b);
  return std::sqrt((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]) + (x[2] - y[2]) * (x[2] - y[2]));
}

ExtendedPoint random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < 0.05) return ExtendedPoint::infinity();
  const double r = std::pow(10.0, 6.0 * unit(rng) - 3.0);
  return ExtendedPoint(std::polar(r, 2.0 * kPi * unit(rng)));
}

// Brute-force distance to a boundary described by a dense point cloud.
double cloud_distance(cplx z, const std::vector<ExtendedPoint>& cloud) {
  double best = 1e300;
  for (const auto& b : cloud) best = std::min(best, chordal_distance(ExtendedPoint(z), b));
  return best;
}

std::vector<ExtendedPoint> ray_cloud(cplx direction, bool both_ways) {
  std::vector<ExtendedPoint> out{ExtendedPoint::infinity(), ExtendedPoint(0.0)};
  for (int i = 0; i <= 200000; ++i) {
    const double s = std::pow(10.0, -6.0 + 12.0 * i / 200000.0);
    out.emplace_back(direction * s);
    if (both_ways) out.emplace_back(-direction * s);
  }
  return out;
}

}  // namespace

TEST(Chordal, KnownValues) {
  EXPECT_DOUBLE_EQ(chordal_distance(0.0, ExtendedPoint::infinity()), 2.0);
  EXPECT_DOUBLE_EQ(chordal_distance(0.0, 1.0), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(chordal_distance(1.0, -1.0), 2.0);
  EXPECT_DOUBLE_EQ(chordal_distance(ExtendedPoint::infinity(), ExtendedPoint::infinity()), 0.0);
  EXPECT_NEAR(chordal_distance(3.0, ExtendedPoint::infinity()), 2.0 / std::sqrt(10.0), 1e-15);
}

TEST(Chordal, MatchesSphereLift) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_point(rng), b = random_point(rng);
    EXPECT_NEAR(chordal_distance(a, b), sphere_distance(a, b), 1e-12);
  }
}

TEST(Chordal, MetricAxiomsOnRandomTriples) {
  std::mt19937_64 rng(20260);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = random_point(rng), b = random_point(rng), c = random_point(rng);
    const double ab = chordal_distance(a, b), ba = chordal_distance(b, a);
    const double bc = chordal_distance(b, c), ac = chordal_distance(a, c);
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(ab, 2.0 + 1e-15);
    ASSERT_EQ(ab, ba);
    ASSERT_LE(ac, ab + bc + 1e-12);
    ASSERT_EQ(chordal_distance(a, a), 0.0);
    ++checked;
  }
  EXPECT_EQ(checked, 10000);
}

TEST(Domain, MembershipAndNames) {
  EXPECT_TRUE(Domain{DomainKind::SlitPlane}.contains({1.0, 0.0}));
  EXPECT_FALSE(Domain{DomainKind::SlitPlane}.contains({-1.0, 0.0}));
  EXPECT_FALSE(Domain{DomainKind::SlitPlane}.contains(0.0));
  EXPECT_TRUE(Domain{DomainKind::SlitPlane}.contains({-1.0, 1e-3}));
  EXPECT_FALSE(Domain{DomainKind::UnitDisc}.contains(1.0));
  EXPECT_FALSE(Domain{DomainKind::RightHalfPlane}.contains({0.0, 5.0}));
  for (auto k : {DomainKind::WholePlane, DomainKind::UnitDisc, DomainKind::RightHalfPlane, DomainKind::SlitPlane}) {
    EXPECT_EQ(domain_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(domain_kind_from_string("Annulus"), std::invalid_argument);
}

TEST(Eps, WholePlaneClosedForm) {
  const Domain d{DomainKind::WholePlane};
  EXPECT_DOUBLE_EQ(eps_to_boundary(d, 0.0), 2.0);
  EXPECT_NEAR(eps_to_boundary(d, {3.0, 4.0}), 2.0 / std::sqrt(26.0), 1e-15);
}

TEST(Eps, UnitDiscAgainstCircleCloud) {
  const Domain d{DomainKind::UnitDisc};
  std::vector<ExtendedPoint> circle;
  for (int k = 0; k < 200000; ++k) circle.emplace_back(std::polar(1.0, 2.0 * kPi * k / 200000));
  for (cplx z : {cplx(0.0), cplx(0.5, 0.0), cplx(-0.3, 0.6), cplx(0.0, 0.99)}) {
    EXPECT_NEAR(eps_to_boundary(d, z), cloud_distance(z, circle), 1e-9) << z;
  }
  EXPECT_NEAR(eps_to_boundary(d, 0.0), std::sqrt(2.0), 1e-15);
}

TEST(Eps, SlitPlaneAgainstRayCloud) {
  const Domain d{DomainKind::SlitPlane};
  const auto cloud = ray_cloud(-1.0, false);
  for (cplx z : {cplx(1.0), cplx(-2.0, 0.5), cplx(0.0, 3.0), cplx(100.0, -1.0), cplx(1e-3, 1e-3)}) {
    const double e = eps_to_boundary(d, z);
    EXPECT_LE(e, cloud_distance(z, cloud) + 1e-12) << z;
    EXPECT_NEAR(e, cloud_distance(z, cloud), 1e-6) << z;
  }
}

TEST(Eps, RightHalfPlaneAgainstAxisCloud) {
  const Domain d{DomainKind::RightHalfPlane};
  const auto cloud = ray_cloud({0.0, 1.0}, true);
  for (cplx z : {cplx(1.0), cplx(0.1, 5.0), cplx(20.0, -3.0)}) {
    EXPECT_NEAR(eps_to_boundary(d, z), cloud_distance(z, cloud), 1e-6) << z;
  }
}

TEST(Eps, OutsideDomainThrows) {
  EXPECT_THROW(eps_to_boundary(Domain{DomainKind::UnitDisc}, 2.0), DomainViolation);
  EXPECT_THROW(eps_to_boundary(Domain{DomainKind::SlitPlane}, -1.0), DomainViolation);
}

TEST(Compact, FactoriesValidate) {
  EXPECT_THROW(make_disc(0.0, -1.0), std::invalid_argument);
  EXPECT_THROW(make_sector(0.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(make_sector(1.0, 2.0, 4.0), std::invalid_argument);
  EXPECT_THROW(make_sampled({cplx(5.0)}, {0.0, 1.0}), std::invalid_argument);
  EXPECT_TRUE(is_empty(make_sector(2.0, 1.0, 1.0)));
  EXPECT_FALSE(is_empty(make_sector(1.0, 1.0, 1.0)));
}

TEST(Compact, SampledSquareMembership) {
  const auto sq = make_sampled({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}, {0.0, std::sqrt(2.0)});
  EXPECT_TRUE(sq.contains(0.0));
  EXPECT_TRUE(sq.contains({0.9, -0.9}));
  EXPECT_FALSE(sq.contains({1.1, 0.0}));
  EXPECT_TRUE(sq.contains({1.0, 1.0}));
}

TEST(Grid, PointsLieInTheCompact) {
  const std::vector<CompactSet> sets = {
      ClosedDisc{{2.0, -1.0}, 1.5}, make_sector(0.5, 3.0, 2.0),
      make_sampled({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}, {0.0, std::sqrt(2.0)})};
  for (const auto& c : sets) {
    for (int res : {1, 2, 4, 8}) {
      for (cplx z : sample_grid(c, res)) EXPECT_GE(interior_margin(c, z), -1e-12);
    }
  }
}

TEST(Grid, DoublingResolutionGivesSuperset) {
  const std::vector<CompactSet> sets = {
      ClosedDisc{{2.0, -1.0}, 1.5}, make_sector(0.5, 3.0, 2.0),
      make_sampled({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}, {0.0, std::sqrt(2.0)})};
  for (const auto& c : sets) {
    for (int res : {1, 2, 4, 8}) {
      const auto coarse = sample_grid(c, res), fine = sample_grid(c, 2 * res);
      EXPECT_GT(fine.size(), coarse.size());
      for (cplx z : coarse) {
        const bool found = std::any_of(fine.begin(), fine.end(), [&](cplx w) { return std::abs(w - z) < 1e-12; });
        EXPECT_TRUE(found) << z << " res " << res;
      }
    }
  }
}

TEST(Grid, RejectsZeroResolutionAndEmptyIsEmpty) {
  EXPECT_THROW(sample_grid(ClosedDisc{0.0, 1.0}, 0), std::invalid_argument);
  EXPECT_TRUE(sample_grid(make_sector(2.0, 1.0, 1.0), 8).empty());
  EXPECT_EQ(sample_grid(ClosedDisc{0.0, 1.0}, 16).size(), 1u + 4u * 16u * 17u);
}

TEST(EnclosingDisc, MatchesBruteForceOnSmallSets) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<cplx> pts(2 + trial % 9);
    for (auto& p : pts) p = {g(rng), g(rng)};
    const ClosedDisc d = minimal_enclosing_disc(pts);
    for (cplx p : pts) EXPECT_LE(std::abs(p - d.center), d.radius * (1 + 1e-9) + 1e-12);
    // Oracle: the smallest disc through two or three of the points that covers all.
    double best = 1e300;
    auto covers = [&](cplx c, double r) {
      return std::all_of(pts.begin(), pts.end(), [&](cplx p) { return std::abs(p - c) <= r * (1 + 1e-9) + 1e-12; });
    };
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const cplx c = (pts[i] + pts[j]) / 2.0;
        if (covers(c, std::abs(pts[i] - c))) best = std::min(best, std::abs(pts[i] - c));
        for (std::size_t k = j + 1; k < pts.size(); ++k) {
          const cplx a = pts[i], b = pts[j], e = pts[k];
          const double den = 2.0 * (a.real() * (b.imag() - e.imag()) + b.real() * (e.imag() - a.imag()) +
                                    e.real() * (a.imag() - b.imag()));
          if (std::abs(den) < 1e-14) continue;
          const cplx cc((std::norm(a) * (b.imag() - e.imag()) + std::norm(b) * (e.imag() - a.imag()) +
                         std::norm(e) * (a.imag() - b.imag())) / den,
                        (std::norm(a) * (e.real() - b.real()) + std::norm(b) * (a.real() - e.real()) +
                         std::norm(e) * (b.real() - a.real())) / den);
          if (covers(cc, std::abs(a - cc))) best = std::min(best, std::abs(a - cc));
        }
      }
    }
    EXPECT_NEAR(d.radius, best, 1e-9 * std::max(1.0, best));
  }
}

TEST(Disjointness, DiscPairsAreExact) {
  EXPECT_EQ(disjointness(ClosedDisc{0.0, 1.0}, ClosedDisc{3.0, 1.0}), Overlap::Disjoint);
  EXPECT_EQ(disjointness(ClosedDisc{0.0, 1.0}, ClosedDisc{2.0, 1.0}), Overlap::Intersecting);  // tangent
  EXPECT_EQ(disjointness(ClosedDisc{0.0, 1.0}, ClosedDisc{0.5, 0.1}), Overlap::Intersecting);
}

TEST(Disjointness, MixedSetsAndEmpty) {
  EXPECT_EQ(disjointness(make_sector(1.0, 2.0, 1.0), ClosedDisc{10.0, 1.0}), Overlap::Disjoint);
  EXPECT_EQ(disjointness(make_sector(1.0, 2.0, 1.0), ClosedDisc{1.5, 0.2}), Overlap::Intersecting);
  EXPECT_EQ(disjointness(make_sector(2.0, 1.0, 1.0), ClosedDisc{1.5, 5.0}), Overlap::Disjoint);
  // The disc sits in the sector's angular gap: the enclosing discs overlap and
  // no sample lands in the other set, so the answer is honest about it.
  EXPECT_EQ(disjointness(make_sector(1.0, 2.0, 1.0), ClosedDisc{-1.5, 0.2}), Overlap::Unknown);
}

TEST(Exhaustion, StandardRulesAreNested) {
  for (auto kind : {DomainKind::WholePlane, DomainKind::UnitDisc, DomainKind::RightHalfPlane}) {
    const Exhaustion ex = Exhaustion::standard(Domain{kind});
    for (int nu = 1; nu < 6; ++nu) {
      for (cplx z : sample_grid(ex(nu), 8)) {
        EXPECT_TRUE(Domain{kind}.contains(z));
        EXPECT_TRUE(contains(ex(nu + 1), z));
      }
    }
  }
  EXPECT_THROW(Exhaustion::standard(Domain{DomainKind::SlitPlane}), std::invalid_argument);
}

TEST(Exhaustion, SlitSectorsFollowTheRadiusRule) {
  const Exhaustion ex = Exhaustion::slit_plane({0.0, 1.0, 1, 0.25});
  EXPECT_DOUBLE_EQ(ex.slit_radius(4), 1.0);
  EXPECT_TRUE(is_empty(ex(3)));
  const auto k8 = std::get<AnnularSector>(ex(8));
  EXPECT_DOUBLE_EQ(k8.rmax, 2.0);
  EXPECT_DOUBLE_EQ(k8.rmin, 0.5);
  EXPECT_DOUBLE_EQ(k8.half_angle, kPi * (1.0 - 1.0 / 8.0));
  for (int nu = 4; nu < 12; ++nu) {
    for (cplx z : sample_grid(ex(nu), 8)) {
      EXPECT_TRUE(contains(ex(nu + 1), z));
      EXPECT_TRUE(Domain{DomainKind::SlitPlane}.contains(z));
    }
  }
}
