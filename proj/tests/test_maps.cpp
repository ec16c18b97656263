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
#include <complex>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "freqdyn/maps.hpp"

using namespace freqdyn;

namespace {

std::vector<HoloMap> sample_maps() {
  return {HoloMap(Similarity{{2.0, 1.0}, {-3.0, 0.5}}),
          HoloMap(DiscAutomorphism{std::polar(1.0, 0.7), {0.3, -0.2}}),
          HoloMap(ParabolicDisc{1.0, 1.0, 3}),
          HoloMap(RootShift{0.0, 1.0, 1, 5}),
          HoloMap(RootShift{0.5, 2.0, 3, 4}),
          HoloMap(HalfPlaneShift{2.0, 1.5, 2}),
          conjugate(ConformalPair{ConformalKind::CayleyDiscToHalfPlane, true}, HoloMap(HalfPlaneShift{1.0, 1.0, 2})),
          iterate(HoloMap(ParabolicDisc{0.5, 1.0, 1}), 4),
          iterate(HoloMap(Similarity{{0.0, 1.0}, 1.0}), 7),
          HoloMap()};
}

// A compact inside each map's domain.
CompactSet probe_for(const HoloMap& m) {
  const auto d = m.domain();
  if (!d) return ClosedDisc{0.0, 2.0};
  switch (d->kind) {
    case DomainKind::UnitDisc: return ClosedDisc{{0.1, 0.1}, 0.7};
    case DomainKind::RightHalfPlane: return ClosedDisc{{3.0, 1.0}, 2.5};
    case DomainKind::SlitPlane: return make_sector(0.5, 4.0, 2.5);
    default: return ClosedDisc{{1.0, -1.0}, 3.0};
  }
}

}  // namespace

TEST(Maps, ClosedForms) {
  EXPECT_EQ(freqdyn::apply(HoloMap(Similarity{2.0, 1.0}), 3.0), cplx(7.0));
  EXPECT_NEAR(std::abs(freqdyn::apply(HoloMap(RootShift{0.0, 1.0, 1, 6}), {1.0, 2.0}) - cplx(7.0, 2.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(freqdyn::apply(HoloMap(RootShift{0.0, 1.0, 2, 1}), 4.0) - cplx(3.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(freqdyn::apply(HoloMap(RootShift{1.0, 2.0, 1, 3}), 1.0) - cplx(12.0)), 0.0, 1e-12);
  EXPECT_EQ(freqdyn::apply(HoloMap(HalfPlaneShift{2.0, 1.0, 3}), 1.0), cplx(1.0, 6.0));
  EXPECT_EQ(freqdyn::apply(HoloMap(), cplx(-4.0, 1.0)), cplx(-4.0, 1.0));
}

TEST(Maps, ValidationRejectsBadParameters) {
  EXPECT_THROW(HoloMap(DiscAutomorphism{1.5, 0.0}), std::invalid_argument);
  EXPECT_THROW(HoloMap(DiscAutomorphism{1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(HoloMap(RootShift{0.0, 0.5, 1, 1}), std::invalid_argument);   // beta < 1 + alpha
  EXPECT_THROW(HoloMap(RootShift{-2.0, -1.0, 1, 1}), std::invalid_argument); // beta <= 0
  EXPECT_THROW(HoloMap(ParabolicDisc{1.0, 0.5, 1}), std::invalid_argument);
  EXPECT_THROW(HoloMap(HalfPlaneShift{-1.0, 1.0, 1}), std::invalid_argument);
  EXPECT_THROW(iterate(HoloMap(), 0), std::invalid_argument);
}

TEST(Maps, DomainChecks) {
  EXPECT_THROW(freqdyn::apply(HoloMap(RootShift{0.0, 1.0, 2, 1}), -1.0), DomainViolation);
  EXPECT_THROW(freqdyn::apply(HoloMap(RootShift{0.0, 1.0, 2, 1}), cplx(-1.0, 1e-12)), DomainViolation);
  EXPECT_THROW(freqdyn::apply(HoloMap(ParabolicDisc{1.0, 1.0, 1}), 1.0), DomainViolation);
  EXPECT_THROW(freqdyn::apply(HoloMap(HalfPlaneShift{1.0, 1.0, 1}), cplx(-0.1, 0.0)), DomainViolation);
}

TEST(Maps, ParabolicFixesOneOnTheBoundary) {
  for (std::int64_t n = 1; n <= 50; ++n) {
    EXPECT_NEAR(std::abs(apply_unchecked(HoloMap(ParabolicDisc{1.3, 1.0, n}), 1.0) - 1.0), 0.0, 1e-15);
  }
}

TEST(Maps, RoundTripsOnSampleGrids) {
  double worst = 0.0;
  for (const auto& m : sample_maps()) {
    for (cplx z : sample_grid(probe_for(m), 16)) {
      const cplx w = freqdyn::apply(m, z);
      const double err = std::abs(inverse_apply(m, w) - z) / std::max(1.0, std::abs(z));
      worst = std::max(worst, err);
      ASSERT_LT(err, 1e-10) << m.describe() << " at " << z;
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Maps, InverseRejectsPointsOutsideTheImage) {
  // z -> sqrt(z) + 1 covers only Re w > 1.
  EXPECT_THROW(inverse_apply(HoloMap(RootShift{0.0, 1.0, 2, 1}), -4.0), DomainViolation);
}

TEST(Maps, AutomorphismsPreserveTheDisc) {
  const CompactSet k = ClosedDisc{0.0, 0.99};
  EXPECT_TRUE(maps_into(HoloMap(ParabolicDisc{2.0, 1.0, 7}), Domain{DomainKind::UnitDisc}, k));
  EXPECT_TRUE(maps_into(HoloMap(DiscAutomorphism{std::polar(1.0, 2.0), {0.5, 0.3}}), Domain{DomainKind::UnitDisc}, k));
  EXPECT_FALSE(maps_into(HoloMap(Similarity{2.0, 0.0}), Domain{DomainKind::UnitDisc}, k));
}

TEST(Maps, CayleyConjugationIsParabolic) {
  const ConformalPair g{ConformalKind::CayleyDiscToHalfPlane, true};
  for (std::int64_t n = 1; n <= 5; ++n) {
    const HoloMap conj = conjugate(g, HoloMap(HalfPlaneShift{1.5, 1.0, n}));
    for (cplx z : sample_grid(ClosedDisc{0.0, 0.9}, 8)) {
      const cplx u = z - 1.0;
      const cplx closed = 1.0 + 2.0 * u / (2.0 - cplx(0.0, 1.5 * static_cast<double>(n)) * u);
      EXPECT_NEAR(std::abs(freqdyn::apply(conj, z) - closed), 0.0, 1e-12);
    }
  }
}

TEST(Maps, ConformalPairsInvertEachOther) {
  for (auto kind : {ConformalKind::CayleyDiscToHalfPlane, ConformalKind::SlitToDisc}) {
    const ConformalPair f{kind, false};
    EXPECT_EQ(f.inverse().inverse(), f);
    EXPECT_EQ(f.inverse().source(), f.target());
    for (cplx z : sample_grid(kind == ConformalKind::SlitToDisc ? CompactSet(make_sector(0.1, 10.0, 3.0))
                                                                : CompactSet(ClosedDisc{0.0, 0.95}),
                              8)) {
      const cplx w = f.forward(z);
      EXPECT_TRUE(f.target().contains(w));
      EXPECT_NEAR(std::abs(f.backward(w) - z), 0.0, 1e-10 * std::max(1.0, std::abs(z)));
    }
  }
  EXPECT_THROW(ConformalPair{ConformalKind::SlitToDisc}.forward(-2.0), DomainViolation);
}

TEST(Maps, ConjugationChecksTheDomain) {
  const ConformalPair f{ConformalKind::CayleyDiscToHalfPlane, false};
  EXPECT_THROW(conjugate(f, HoloMap(HalfPlaneShift{1.0, 1.0, 1})), std::invalid_argument);
  EXPECT_NO_THROW(conjugate(f, HoloMap()));
  EXPECT_EQ(conjugate(f, HoloMap(ParabolicDisc{})).domain()->kind, DomainKind::RightHalfPlane);
}

TEST(Maps, IteratedSimilarityMatchesRepeatedApplication) {
  const HoloMap s(Similarity{{0.6, 0.8}, {1.0, -2.0}});
  for (int p = 1; p <= 12; ++p) {
    cplx w = cplx(0.3, 0.4);
    for (int i = 0; i < p; ++i) w = freqdyn::apply(s, w);
    EXPECT_NEAR(std::abs(freqdyn::apply(iterate(s, p), cplx(0.3, 0.4)) - w), 0.0, 1e-12);
  }
}

TEST(Maps, ImageDiscsContainDenseImages) {
  for (const auto& m : sample_maps()) {
    const CompactSet k = probe_for(m);
    const ClosedDisc d = image_enclosing_disc(m, k);
    for (cplx z : sample_grid(k, 64)) {
      EXPECT_LE(std::abs(freqdyn::apply(m, z) - d.center), d.radius * (1.0 + 1e-12) + 1e-12) << m.describe();
    }
  }
}

TEST(Maps, RootShiftImageDiscIsTheAnalyticBound) {
  // phi_n(K) lies in the disc about n^beta of radius n^alpha R^(1/N).
  const HoloMap m(RootShift{0.5, 2.0, 2, 9});
  const ClosedDisc d = image_enclosing_disc(m, make_sector(0.25, 4.0, 2.0));
  EXPECT_NEAR(std::abs(d.center - cplx(81.0)), 0.0, 1e-12);
  EXPECT_NEAR(d.radius, 3.0 * 2.0, 1e-12);
}

TEST(Maps, DescribeNamesTheVariant) {
  EXPECT_NE(HoloMap(RootShift{}).describe().find("RootShift"), std::string::npos);
  EXPECT_NE(iterate(HoloMap(ParabolicDisc{}), 3).describe().find("^3"), std::string::npos);
}
