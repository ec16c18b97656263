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
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "freqdyn/freqdyn.hpp"

using namespace freqdyn;

namespace {

// Direct evaluation in t on a log grid, no change of variables.
double sigma_by_grid(double alpha, double beta) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 200000; ++i) {
    const double t = 1.0 + std::pow(10.0, -9.0 + 17.0 * i / 200000.0);
    best = std::min(best, (std::pow(t, beta) - 1.0) / (std::pow(t, alpha) * std::pow(t - 1.0, beta - alpha)));
  }
  return best;
}

Config translation_config() {
  return Config::from_string(R"(
[maps]
variant = translation
[family]
pairs = 3
multiplier = 8
[horizons]
n_max = 2000
nu_max = 1
)");
}

}  // namespace

TEST(Sigma, PlainShiftHasInfimumOne) {
  const auto r = sigma_infimum(0.0, 1.0);
  EXPECT_NEAR(r.sigma, 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.c, 0.25);
  EXPECT_NEAR(r.richardson, 1.0, 1e-9);
}

TEST(Sigma, AgreesWithDirectGrid) {
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{{0.0, 2.0}, {0.0, 1.5}, {1.0, 2.0}, {0.5, 3.0}, {-0.5, 0.5}}) {
    const auto r = sigma_infimum(a, b);
    EXPECT_GT(r.sigma, 0.0);
    EXPECT_NEAR(r.sigma, sigma_by_grid(a, b), 1e-6 * std::max(1.0, r.sigma)) << a << "," << b;
    EXPECT_DOUBLE_EQ(r.c, std::min(0.5, r.sigma / 4.0));
  }
  EXPECT_NEAR(sigma_infimum(0.0, 2.0).sigma, 1.0, 1e-6);
}

TEST(Sigma, RejectsInvalidExponents) {
  EXPECT_THROW(sigma_infimum(0.0, 0.5), ConfigError);
  EXPECT_THROW(sigma_infimum(-2.0, 0.0), ConfigError);
}

TEST(Config, ParseOverridesAndHash) {
  Config c = Config::from_string("[a]\nx = 1\ny = two\n[b]\nz = 2.5\n");
  EXPECT_EQ(c.get("a.x", 0), 1);
  EXPECT_EQ(c.get<std::string>("a.y", ""), "two");
  EXPECT_DOUBLE_EQ(c.require<double>("b.z"), 2.5);
  EXPECT_EQ(c.get("a.missing", 7), 7);
  EXPECT_THROW(c.require<int>("a.missing"), ConfigError);
  EXPECT_THROW(c.get("a.y", 0), ConfigError);

  const std::string before = c.hash();
  EXPECT_EQ(before.size(), 16u);
  Config same = Config::from_string("[b]\nz = 2.5\n[a]\ny = two\nx = 1\n");
  EXPECT_EQ(same.hash(), before);
  c.apply_override("a.x=3");
  EXPECT_EQ(c.get("a.x", 0), 3);
  EXPECT_NE(c.hash(), before);
  EXPECT_THROW(c.apply_override("nokey"), ConfigError);
  EXPECT_THROW(c.apply_override("x=1"), ConfigError);
  EXPECT_THROW(Config::from_string("[a\nx=1"), ConfigError);
  EXPECT_THROW(Config::from_file("/nonexistent/freqdyn.ini"), ConfigError);
}

TEST(Config, FactoriesValidate) {
  Config c = Config::from_string("[maps]\nvariant = root_shift\nalpha = 0\nbeta = 0.5\n");
  EXPECT_THROW(map_family_from(c), ConfigError);
  c.apply_override("maps.variant=nothing");
  EXPECT_THROW(map_family_from(c), ConfigError);
  c.apply_override("maps.variant=similarity");
  c.apply_override("maps.a_re=2");
  const HoloMap m = map_family_from(c)(3);
  EXPECT_NEAR(std::abs(freqdyn::apply(m, 1.0) - cplx(5.0)), 0.0, 1e-15);
}

TEST(CandidateJson, RoundTrip) {
  PiecewiseTarget t{Domain{DomainKind::WholePlane}, {}};
  Piece a;
  a.region = ClosedDisc{0.0, 1.0};
  a.spec = MonomialSpec{2};
  a.tau = 0.1;
  Piece b;
  b.region = ClosedDisc{9.0, 1.0};
  b.spec = ZeroSpec{};
  b.tau = 0.05;
  b.tag = IslandTag{9, 1, 0, 2};
  t.pieces = {a, b};
  const auto cand = fit_on_compacts(t);
  ASSERT_TRUE(cand.passed());
  const auto text = candidate_json(cand).dump();
  const auto back = read_candidate(nlohmann::json::parse(text));
  EXPECT_EQ(back.status, "PASS");
  ASSERT_EQ(back.pieces.size(), 2u);
  EXPECT_EQ(back.pieces[0].spec, "Monomial");
  EXPECT_EQ(back.pieces[1].n, 9);
  EXPECT_DOUBLE_EQ(back.pieces[1].tau, 0.05);
  for (cplx z : {cplx(0.3, 0.1), cplx(9.2, -0.4), cplx(4.0, 0.0)}) {
    EXPECT_NEAR(std::abs(back.poly(z) - cand.poly(z)), 0.0, 1e-12 * std::max(1.0, std::abs(cand.poly(z))));
  }
  EXPECT_THROW(read_candidate_file("/nonexistent.json"), ConfigError);
}

TEST(CandidateJson, ArnoldiRoundTrip) {
  PiecewiseTarget t{Domain{DomainKind::WholePlane}, {}};
  Piece a;
  a.region = ClosedDisc{0.0, 4.0};
  a.spec = FixedPolySpec{Polynomial::monomial(1)};
  a.tau = 0.16;
  Piece b;
  b.region = ClosedDisc{8.0, 1.0};
  b.spec = ZeroSpec{};
  b.tau = 0.07;
  t.pieces = {a, b};
  const auto cand = fit_on_compacts(t);
  ASSERT_TRUE(cand.passed());
  ASSERT_NE(cand.poly.arnoldi(), nullptr);
  const auto back = read_candidate(nlohmann::json::parse(candidate_json(cand).dump()));
  ASSERT_NE(back.poly.arnoldi(), nullptr);
  for (cplx z : {cplx(0.3, 0.1), cplx(8.2, -0.4), cplx(-3.0, 2.0)}) {
    EXPECT_NEAR(std::abs(back.poly(z) - cand.poly(z)), 0.0, 1e-9);
  }
}

TEST(Examples, DiscInequality) {
  const Island lo{4, 1, ClosedDisc{}, ClosedDisc{}, HoloMap()};
  const Island hi{5, 1, ClosedDisc{}, ClosedDisc{}, HoloMap()};
  EXPECT_TRUE(check_disc_inequality({lo, hi}, 0.0, 1.0, 0.25).pass());
  const auto bad = check_disc_inequality({lo, hi}, 0.0, 1.0, 0.5);
  EXPECT_FALSE(bad.pass());
  EXPECT_EQ(bad.pairs, 1u);
  EXPECT_NEAR(bad.min_margin, 0.0, 1e-15);
}

TEST(Examples, ConjugationsMatchClosedForms) {
  EXPECT_TRUE(check_slit_conjugation(2, 10).pass());
  EXPECT_TRUE(check_slit_conjugation(1, 5).pass());
  const auto p = check_parabolic_conjugation(1.0, 1.0, 20);
  EXPECT_TRUE(p.pass()) << p.max_residual;
  EXPECT_EQ(p.fixed_point_error, 0.0);
}

TEST(Pipeline, DeskScaleKeepsTheRequestedIslands) {
  const auto rc = runaway_config_from(translation_config());
  const auto scaled = detail::desk_scale(rc, 3);
  std::size_t kept = 0;
  for (const auto& a : scaled.family) kept += a.size();
  EXPECT_EQ(kept, 3u);
  EXPECT_GE(scaled.burn_in, rc.family[0].elements().front());
  EXPECT_LT(scaled.burn_in, scaled.n_max);
}

TEST(Pipeline, ExistenceRunPasses) {
  const auto run = run_existence_pipeline(runaway_config_from(translation_config()), PipelineSettings{});
  EXPECT_TRUE(run.candidate.passed()) << to_string(run.candidate.status);
  EXPECT_TRUE(run.scan.pass());
  EXPECT_EQ(run.pairs.size(), 2u);
}

TEST(Commands, WriteSummariesUnderTheOutputRoot) {
  Config c = translation_config();
  c.apply_override("run.output_dir=out/test_runaway_cmd");
  const auto r = cmd_runaway(c);
  EXPECT_TRUE(r.pass);
  const char* root = std::getenv("FREQDYN_OUTPUT_ROOT");
  const std::filesystem::path dir = std::filesystem::path(root ? root : ".") / "out/test_runaway_cmd";
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.txt"));
  std::ifstream in(dir / "summary.txt");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_NE(text.find("config_hash=" + c.hash()), std::string::npos);
  EXPECT_NE(text.find("verdict=PASS"), std::string::npos);
}
