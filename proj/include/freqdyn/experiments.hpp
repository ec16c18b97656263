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

// Experiment drivers behind the command-line tool: the worked examples, the
// construction pipelines and thin wrappers over single pipeline stages.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "freqdyn/approx.hpp"
#include "freqdyn/density.hpp"
#include "freqdyn/geometry.hpp"
#include "freqdyn/io.hpp"
#include "freqdyn/maps.hpp"
#include "freqdyn/orbit.hpp"
#include "freqdyn/runaway.hpp"

namespace freqdyn {

// ---------------------------------------------------------------------------
// The constant sigma of the slit-plane example

struct SigmaResult {
  double sigma = 0.0;
  double c = 0.0;             // min(1/2, sigma/4)
  double argmin_t = 0.0;      // +inf when the infimum is the limit at infinity
  std::string attained;       // "interior", "infinity" or "one"
  double richardson = 0.0;    // extrapolated limit at infinity from t = 1e6, 1e7
};

/// (t^beta - 1) / (t^alpha (t - 1)^(beta - alpha)) written in s = t - 1.
inline double sigma_integrand(double alpha, double beta, double s) {
  const double lt = std::log1p(s);
  return std::expm1(beta * lt) / (std::exp(alpha * lt) * std::pow(s, beta - alpha));
}

inline SigmaResult sigma_infimum(double alpha, double beta, double t_max = 1e6) {
  if (!(beta > 0.0) || beta < 1.0 + alpha) throw ConfigError("sigma needs beta > 0 and beta >= 1 + alpha");
  const int points = 4000;
  const double lo = std::log(1e-12), hi = std::log(t_max - 1.0);
  auto g = [&](double u) { return sigma_integrand(alpha, beta, std::exp(u)); };
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double v = g(lo + (hi - lo) * i / (points - 1));
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double step = (hi - lo) / (points - 1);
  const auto [u, v] = boost::math::tools::brent_find_minima(
      g, std::max(lo, lo + (best - 1) * step), std::min(hi, lo + (best + 1) * step), 52);

  SigmaResult r;
  r.sigma = std::min(best_val, v);
  r.argmin_t = 1.0 + std::exp(u);
  r.attained = "interior";
  // The limit at infinity is exactly 1; interior minima that only undercut
  // it by rounding are attributed to the limit.
  if (r.sigma >= 1.0 - 1e-12) {
    r.sigma = 1.0;
    r.argmin_t = std::numeric_limits<double>::infinity();
    r.attained = "infinity";
  }
  if (std::abs(beta - alpha - 1.0) < 1e-12 && beta < r.sigma) {
    r.sigma = beta;
    r.argmin_t = 1.0;
    r.attained = "one";
  }
  const double g6 = sigma_integrand(alpha, beta, 1e6 - 1.0), g7 = sigma_integrand(alpha, beta, 1e7 - 1.0);
  r.richardson = (10.0 * g7 - g6) / 9.0;
  r.c = std::min(0.5, r.sigma / 4.0);
  return r;
}

// ---------------------------------------------------------------------------
// Configuration to model objects

inline MapFamily map_family_from(const Config& cfg) {
  const auto variant = cfg.get<std::string>("maps.variant", "translation");
  if (variant == "translation" || variant == "similarity") {
    const cplx a = variant == "translation" ? cplx(1.0)
                                            : cplx(cfg.get("maps.a_re", 1.0), cfg.get("maps.a_im", 0.0));
    const cplx b(cfg.get("maps.b_re", 1.0), cfg.get("maps.b_im", 0.0));
    const double power = cfg.get("maps.b_power", 1.0);
    return [a, b, power](std::int64_t n) {
      return HoloMap(Similarity{a, b * std::pow(static_cast<double>(n), power)});
    };
  }
  if (variant == "root_shift") {
    const double alpha = cfg.get("maps.alpha", 0.0), beta = cfg.get("maps.beta", 1.0);
    const int root_n = cfg.get("maps.root_n", 1);
    if (!(beta > 0.0) || beta < 1.0 + alpha) throw ConfigError("root_shift needs beta > 0 and beta >= 1 + alpha");
    return [=](std::int64_t n) { return HoloMap(RootShift{alpha, beta, root_n, n}); };
  }
  if (variant == "half_plane_shift") {
    const double a = cfg.get("maps.a", 1.0), gamma = cfg.get("maps.gamma", 1.0);
    return [=](std::int64_t n) { return HoloMap(HalfPlaneShift{a, gamma, n}); };
  }
  if (variant == "parabolic_disc") {
    const double a = cfg.get("maps.a", 1.0), gamma = cfg.get("maps.gamma", 1.0);
    return [=](std::int64_t n) { return HoloMap(ParabolicDisc{a, gamma, n}); };
  }
  throw ConfigError("unknown maps.variant " + variant);
}

inline Domain domain_from(const Config& cfg) {
  if (cfg.has("domain.kind")) {
    try {
      return Domain{domain_kind_from_string(cfg.get<std::string>("domain.kind", ""))};
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  const auto variant = cfg.get<std::string>("maps.variant", "translation");
  if (variant == "root_shift") return Domain{DomainKind::SlitPlane};
  if (variant == "half_plane_shift") return Domain{DomainKind::RightHalfPlane};
  if (variant == "parabolic_disc") return Domain{DomainKind::UnitDisc};
  return Domain{DomainKind::WholePlane};
}

/// Slit-plane C: exhaustion.c when positive, otherwise min(1/2, sigma/4).
inline double slit_constant(const Config& cfg) {
  const double c = cfg.get("exhaustion.c", 0.0);
  if (c > 0.0) return c;
  return sigma_infimum(cfg.get("maps.alpha", 0.0), cfg.get("maps.beta", 1.0)).c;
}

inline Exhaustion exhaustion_from(const Config& cfg) {
  const Domain d = domain_from(cfg);
  if (d.kind != DomainKind::SlitPlane) return Exhaustion::standard(d);
  return Exhaustion::slit_plane({cfg.get("maps.alpha", 0.0), cfg.get("maps.beta", 1.0),
                                 cfg.get("maps.root_n", 1), slit_constant(cfg)});
}

inline SeparatedFamily family_from(const Config& cfg, std::int64_t horizon) {
  try {
    return build_separated_family(cfg.get("family.pairs", 3), horizon, cfg.get<std::int64_t>("family.multiplier", 8),
                                  cfg.get("family.base", 2));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline RunawayConfig runaway_config_from(const Config& cfg) {
  RunawayConfig rc;
  rc.domain = domain_from(cfg);
  rc.maps = map_family_from(cfg);
  rc.exhaustion = exhaustion_from(cfg);
  rc.n_max = cfg.get<std::int64_t>("horizons.n_max", 10000);
  rc.nu_max = cfg.get("horizons.nu_max", 1);
  rc.burn_in = cfg.get<std::int64_t>("horizons.burn_in", 0);
  rc.tail_fraction = cfg.get("horizons.tail_fraction", 0.5);
  const SeparatedFamily fam = family_from(cfg, rc.n_max);
  for (int nu = 1; nu <= rc.nu_max; ++nu) rc.family.push_back(fam.union_for_nu(nu));
  return rc;
}

inline FitOptions fit_options_from(const Config& cfg) {
  FitOptions f;
  f.max_degree = cfg.get("tolerances.max_degree", f.max_degree);
  f.start_degree = cfg.get("tolerances.start_degree", f.start_degree);
  f.grid_res = cfg.get("tolerances.grid_res", f.grid_res);
  return f;
}

inline ScanOptions scan_options_from(const Config& cfg) {
  ScanOptions s;
  s.grid_res = cfg.get("tolerances.grid_res", s.grid_res);
  s.envelope_constant = cfg.get("tolerances.envelope_constant", s.envelope_constant);
  s.grid_slack = cfg.get("tolerances.grid_slack", s.grid_slack);
  return s;
}

// ---------------------------------------------------------------------------
// Construction pipelines

struct PipelineSettings {
  int l_max = 2;
  int max_islands = 4;
  double delta_factor = 2.0;  // delta = factor * largest envelope
  FitOptions fit;
  ScanOptions scan;
};

struct ExistenceRun {
  RunawayConfig cfg;
  CarlemanTruncation truncation;
  SplitPlan plan;
  FhcCandidate candidate;
  OrbitScanReport scan;
  std::vector<ScanPair> pairs;

  bool pass() const { return candidate.passed() && scan.pass(); }
};

namespace detail {

// Shrinks n_max so that at most `max_islands` islands with a nonempty source
// remain, and moves the density burn-in past the first element of each A(nu).
inline RunawayConfig desk_scale(RunawayConfig cfg, int max_islands) {
  std::vector<std::int64_t> ns;
  std::int64_t first_max = 1;
  for (int nu = 1; nu <= cfg.nu_max; ++nu) {
    const auto& a = cfg.family[static_cast<std::size_t>(nu - 1)];
    if (a.empty()) continue;
    first_max = std::max(first_max, a.elements().front());
    if (is_empty(cfg.exhaustion(nu))) continue;
    for (auto n : a.elements()) {
      if (n <= cfg.n_max) ns.push_back(n);
    }
  }
  std::sort(ns.begin(), ns.end());
  if (ns.empty()) throw std::invalid_argument("pipeline: no island with a nonempty compact below n_max");
  if (static_cast<int>(ns.size()) > max_islands) cfg.n_max = ns[static_cast<std::size_t>(max_islands - 1)];
  cfg.n_max = std::max(cfg.n_max, first_max + 1);
  for (auto& a : cfg.family) a = a.truncated(cfg.n_max);
  if (cfg.burn_in <= 0 || cfg.burn_in >= cfg.n_max) cfg.burn_in = std::min(first_max, cfg.n_max - 1);
  return cfg;
}

inline CarlemanTruncation nonempty_truncation(const RunawayConfig& cfg, int bases) {
  CarlemanTruncation tr = build_carleman_truncation(cfg, bases);
  std::erase_if(tr.islands, [](const Island& isl) { return is_empty(isl.source); });
  return tr;
}

inline double max_envelope(const FhcCandidate& c) {
  double m = 0.0;
  for (double e : c.envelope) m = std::max(m, e);
  return m;
}

}  // namespace detail

/// Truncation, split A(nu, l), target g, fit and an independent orbit scan at
/// delta = delta_factor * largest envelope.
inline ExistenceRun run_existence_pipeline(const RunawayConfig& base, const PipelineSettings& s) {
  ExistenceRun run;
  run.cfg = detail::desk_scale(base, s.max_islands);
  run.truncation = detail::nonempty_truncation(run.cfg, 0);
  run.plan = SplitPlan::existence(run.cfg.family, s.l_max, run.cfg.n_max);
  const PiecewiseTarget target = assemble_existence_target(run.truncation, run.cfg.domain, run.plan);
  run.candidate = fit_on_compacts(target, s.fit);

  std::vector<int> nus;
  for (const auto& isl : run.truncation.islands) {
    if (std::find(nus.begin(), nus.end(), isl.nu) == nus.end()) nus.push_back(isl.nu);
  }
  std::sort(nus.begin(), nus.end());
  for (int nu : nus) {
    for (int l = 1; l <= s.l_max; ++l) {
      IndexSet designed = run.plan.designed(nu, l, 1, 0, run.cfg.n_max);
      if (!designed.empty()) run.pairs.push_back({nu, l, designed, enumerate_dense_polynomial(l)});
    }
  }
  ScanOptions so = s.scan;
  so.delta = s.delta_factor * detail::max_envelope(run.candidate);
  so.horizon = run.cfg.n_max;
  run.scan = scan(run.candidate.poly, run.cfg.maps, run.cfg.exhaustion, run.cfg.domain, run.pairs, so);
  return run;
}

struct BasisRun {
  RunawayConfig cfg;
  SplitPlan plan;
  std::vector<FhcCandidate> members;
  std::optional<SpanBasis> basis;  // set when the members satisfy the basis invariants
  std::string rejection;
};

/// Members f_1..f_count of the spaceable construction (targets g_mu).
inline BasisRun run_spaceable_basis(const RunawayConfig& base, int count, int p_max,
                                    const PipelineSettings& s) {
  BasisRun run;
  run.cfg = detail::desk_scale(base, s.max_islands);
  const CarlemanTruncation tr = detail::nonempty_truncation(run.cfg, 1);
  run.plan = SplitPlan::blocks(run.cfg.family, s.l_max, p_max, run.cfg.n_max);
  for (int mu = 1; mu <= count; ++mu) {
    run.members.push_back(fit_on_compacts(assemble_spaceable_target(mu, tr, run.cfg.domain, run.plan), s.fit));
  }
  try {
    run.basis = make_span_basis(run.members, BasisKind::Spaceable);
  } catch (const std::invalid_argument& e) {
    run.rejection = e.what();
  }
  return run;
}

/// Members f_1..f_count of the dense-lineable construction (targets P_mu on K_{mu+1}).
inline BasisRun run_dense_basis(const RunawayConfig& base, int count, const PipelineSettings& s) {
  BasisRun run;
  run.cfg = detail::desk_scale(base, s.max_islands);
  run.plan = SplitPlan::blocks(run.cfg.family, s.l_max, count + 1, run.cfg.n_max);
  for (int mu = 1; mu <= count; ++mu) {
    const CarlemanTruncation tr = detail::nonempty_truncation(run.cfg, mu + 1);
    run.members.push_back(fit_on_compacts(assemble_dense_target(mu, tr, run.cfg.domain, run.plan), s.fit));
  }
  try {
    run.basis = make_span_basis(run.members, BasisKind::Dense);
  } catch (const std::invalid_argument& e) {
    run.rejection = e.what();
  }
  return run;
}

/// sup over the base piece of |f_mu - P_mu| on the verification grid.
inline double dense_base_error(const FhcCandidate& member) {
  for (std::size_t i = 0; i < member.target.pieces.size(); ++i) {
    if (std::holds_alternative<FixedPolySpec>(member.target.pieces[i].spec)) {
      return i < member.certificate.size() ? member.certificate[i] : std::numeric_limits<double>::infinity();
    }
  }
  throw std::invalid_argument("member has no fixed-polynomial base piece");
}

// ---------------------------------------------------------------------------
// Example checks

struct DiscInequalityReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  std::string witness;

  bool pass() const { return violations == 0; }
};

/// m^beta - n^beta > m^alpha C mu^(beta-alpha) + n^alpha C nu^(beta-alpha) for
/// every pair of islands (n, nu), (m, mu) with m > n.
inline DiscInequalityReport check_disc_inequality(const std::vector<Island>& islands, double alpha,
                                                  double beta, double c) {
  DiscInequalityReport r;
  auto radius = [&](const Island& isl) {
    return std::pow(static_cast<double>(isl.n), alpha) * c * std::pow(static_cast<double>(isl.nu), beta - alpha);
  };
  for (std::size_t i = 0; i < islands.size(); ++i) {
    for (std::size_t j = i + 1; j < islands.size(); ++j) {
      const Island& lo = islands[i].n < islands[j].n ? islands[i] : islands[j];
      const Island& hi = islands[i].n < islands[j].n ? islands[j] : islands[i];
      if (lo.n == hi.n) continue;
      ++r.pairs;
      const double gap = std::pow(static_cast<double>(hi.n), beta) - std::pow(static_cast<double>(lo.n), beta);
      const double margin = gap - radius(hi) - radius(lo);
      r.min_margin = std::min(r.min_margin, margin);
      if (!(margin > 0.0)) {
        if (r.violations == 0) {
          r.witness = "n=" + std::to_string(lo.n) + " (nu=" + std::to_string(lo.nu) + "), m=" +
                      std::to_string(hi.n) + " (mu=" + std::to_string(hi.nu) + ")";
        }
        ++r.violations;
      }
    }
  }
  return r;
}

struct ConjugationReport {
  std::size_t points = 0;
  double max_residual = 0.0;
  double max_modulus = 0.0;
  double fixed_point_error = 0.0;  // parabolic case only

  bool pass(double tol = 1e-10) const { return max_residual < tol && max_modulus < 1.0 && fixed_point_error <= 1e-12; }
};

/// Phi_n = f o (n + z^(1/N)) o f^-1 with f the slit-plane-to-disc map,
/// against the closed form.
inline ConjugationReport check_slit_conjugation(int root_n, std::int64_t n_max, double radius = 0.95,
                                                int grid_res = 16) {
  ConjugationReport r;
  const ConformalPair f{ConformalKind::SlitToDisc, false};
  const auto grid = sample_grid(ClosedDisc{0.0, radius}, grid_res);
  for (std::int64_t n = 1; n <= n_max; ++n) {
    const HoloMap phi = conjugate(f, HoloMap(RootShift{0.0, 1.0, root_n, n}));
    for (cplx z : grid) {
      const cplx q = (1.0 + z) / (1.0 - z);
      const cplx s = std::sqrt(static_cast<double>(n) + std::pow(q * q, 1.0 / root_n));
      const cplx closed = (s - 1.0) / (s + 1.0);
      const cplx w = apply(phi, z);
      r.max_residual = std::max(r.max_residual, std::abs(w - closed));
      r.max_modulus = std::max(r.max_modulus, std::abs(w));
      ++r.points;
    }
  }
  return r;
}

/// Phi_n = f^-1 o (z + i a n^gamma) o f with the Cayley map f, against the
/// parabolic closed form; also the fixed point Phi_n(1) = 1.
inline ConjugationReport check_parabolic_conjugation(double a, double gamma, std::int64_t n_max,
                                                     double radius = 0.95, int grid_res = 16) {
  ConjugationReport r;
  const ConformalPair g{ConformalKind::CayleyDiscToHalfPlane, true};
  const auto grid = sample_grid(ClosedDisc{0.0, radius}, grid_res);
  for (std::int64_t n = 1; n <= n_max; ++n) {
    const HoloMap conj = conjugate(g, HoloMap(HalfPlaneShift{a, gamma, n}));
    const HoloMap closed(ParabolicDisc{a, gamma, n});
    for (cplx z : grid) {
      const cplx w = apply(conj, z);
      r.max_residual = std::max(r.max_residual, std::abs(w - apply(closed, z)));
      r.max_modulus = std::max(r.max_modulus, std::abs(w));
      ++r.points;
    }
    r.fixed_point_error = std::max(r.fixed_point_error, std::abs(apply_unchecked(closed, 1.0) - 1.0));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Commands

struct CommandResult {
  bool pass = false;
  std::vector<std::string> summary;  // key=value lines, also written to summary.txt
};

namespace detail {

inline void finish(OutputSink& out, CommandResult& r) {
  std::ostringstream os;
  for (const auto& line : r.summary) os << line << '\n';
  os << "verdict=" << (r.pass ? "PASS" : "FAIL") << '\n';
  out.write("summary.txt", os.str());
}

inline std::string kv(const std::string& k, double v) { return k + "=" + fmt(v); }
inline std::string kv(const std::string& k, std::int64_t v) { return k + "=" + std::to_string(v); }
inline std::string kv(const std::string& k, const std::string& v) { return k + "=" + v; }
inline std::string kv(const std::string& k, bool v) { return k + "=" + (v ? "PASS" : "FAIL"); }

inline PipelineSettings pipeline_settings_from(const Config& cfg) {
  PipelineSettings s;
  s.l_max = cfg.get("horizons.l_max", s.l_max);
  s.max_islands = cfg.get("horizons.max_islands", s.max_islands);
  s.delta_factor = cfg.get("tolerances.delta_factor", s.delta_factor);
  s.fit = fit_options_from(cfg);
  s.scan = scan_options_from(cfg);
  return s;
}

inline std::string strong_runaway_csv(const StrongRunawayReport& r) {
  std::ostringstream os;
  os << "property,verdict,witness\n"
     << "P1," << (r.p1.pass ? "PASS" : "FAIL") << ',' << r.p1.witness << '\n'
     << "P2," << (r.p2.pass ? "PASS" : "FAIL") << ',' << r.p2.witness << '\n'
     << "P3," << (r.p3.pass ? "PASS" : "FAIL") << ',' << r.p3.witness << '\n';
  for (std::size_t i = 0; i < r.densities.size(); ++i) {
    os << "# density,nu=" << i + 1 << ",lower=" << fmt(r.densities[i].lower_estimate) << '\n';
  }
  for (const auto& p : r.probes) {
    os << "# probe,mu=" << p.mu << ",intersecting=" << p.intersecting << ",largest_n=" << p.largest_n << '\n';
  }
  return os.str();
}

}  // namespace detail

inline CommandResult cmd_sigma(const Config& cfg) {
  OutputSink out(cfg, "sigma");
  CommandResult r;
  const double alpha = cfg.get("maps.alpha", 0.0), beta = cfg.get("maps.beta", 1.0);
  const SigmaResult s = sigma_infimum(alpha, beta, cfg.get("sigma.t_max", 1e6));
  r.pass = s.sigma > 0.0 && std::isfinite(s.sigma);
  r.summary = {detail::kv("alpha", alpha), detail::kv("beta", beta), detail::kv("sigma", s.sigma),
               detail::kv("C", s.c), detail::kv("argmin_t", s.argmin_t), detail::kv("attained", s.attained),
               detail::kv("richardson_limit", s.richardson)};
  detail::finish(out, r);
  return r;
}

inline CommandResult cmd_example1(const Config& cfg) {
  OutputSink out(cfg, "example1");
  CommandResult r;
  const double alpha = cfg.get("maps.alpha", 0.0), beta = cfg.get("maps.beta", 1.0);
  if (!(beta > 0.0) || beta < 1.0 + alpha) throw ConfigError("example1 needs beta > 0 and beta >= 1 + alpha");
  if (cfg.get<std::string>("maps.variant", "root_shift") != "root_shift") {
    throw ConfigError("example1 uses maps.variant = root_shift");
  }
  const double c = slit_constant(cfg);
  RunawayConfig rc = runaway_config_from(cfg);

  const StrongRunawayReport sr = check_strong_runaway(rc);
  out.write("runaway.csv", detail::strong_runaway_csv(sr));
  out.write("islands.csv", islands_csv(sr.islands));
  const DiscInequalityReport di = check_disc_inequality(sr.islands, alpha, beta, c);

  r.summary = {detail::kv("C", c), detail::kv("P1", sr.p1.pass), detail::kv("P2", sr.p2.pass),
               detail::kv("P3", sr.p3.pass), detail::kv("disc_pairs", static_cast<std::int64_t>(di.pairs)),
               detail::kv("disc_violations", static_cast<std::int64_t>(di.violations)),
               detail::kv("disc_min_margin", di.min_margin)};
  if (!sr.p2.pass) r.summary.push_back("P2_witness=" + sr.p2.witness);
  if (!di.pass()) r.summary.push_back("disc_witness=" + di.witness);
  r.pass = sr.pass() && di.pass();

  // The pipeline needs an exhaustion index with a nonempty compact; for
  // small C the first few K_nu are empty and the family is widened to reach it.
  if (r.pass) {
    int nu_pipe = 1;
    while (is_empty(rc.exhaustion(nu_pipe))) ++nu_pipe;
    int pairs = cfg.get("family.pairs", 3);
    while (diagonal_pair(pairs).nu < nu_pipe || pairs < 1) ++pairs;
    const SeparatedFamily fam = build_separated_family(std::max(pairs, cfg.get("family.pairs", 3)), rc.n_max,
                                                       cfg.get<std::int64_t>("family.multiplier", 8),
                                                       cfg.get("family.base", 2));
    RunawayConfig pc = rc;
    pc.nu_max = nu_pipe;
    pc.burn_in = 0;
    pc.family.clear();
    for (int nu = 1; nu <= nu_pipe; ++nu) pc.family.push_back(fam.union_for_nu(nu));
    PipelineSettings ps = detail::pipeline_settings_from(cfg);
    ps.scan.eps_grid_res = 2;
    const ExistenceRun run = run_existence_pipeline(pc, ps);
    out.write("candidate.json", candidate_json(run.candidate).dump(2) + "\n", false);
    out.write("certificate.csv", certificate_csv(run.candidate));
    out.write("scan.csv", scan_csv(run.scan));
    r.summary.push_back(detail::kv("pipeline_nu", static_cast<std::int64_t>(nu_pipe)));
    r.summary.push_back(detail::kv("pipeline_islands", static_cast<std::int64_t>(run.truncation.islands.size())));
    r.summary.push_back(detail::kv("fit", run.candidate.passed()));
    r.summary.push_back(detail::kv("degree", static_cast<std::int64_t>(run.candidate.degree)));
    r.summary.push_back(detail::kv("scan", run.scan.pass()));
    r.pass = run.pass();
  }
  detail::finish(out, r);
  return r;
}

inline CommandResult cmd_example2(const Config& cfg) {
  OutputSink out(cfg, "example2");
  CommandResult r;
  const ConjugationReport c = check_slit_conjugation(cfg.get("maps.root_n", 1), cfg.get<std::int64_t>("example.n_max", 10),
                                                     cfg.get("example.radius", 0.95), cfg.get("example.grid_res", 16));
  r.pass = c.pass(cfg.get("example.tolerance", 1e-10));
  r.summary = {detail::kv("points", static_cast<std::int64_t>(c.points)), detail::kv("max_residual", c.max_residual),
               detail::kv("max_modulus", c.max_modulus)};
  detail::finish(out, r);
  return r;
}

inline CommandResult cmd_example3(const Config& cfg) {
  OutputSink out(cfg, "example3");
  CommandResult r;
  const ConjugationReport c =
      check_parabolic_conjugation(cfg.get("maps.a", 1.0), cfg.get("maps.gamma", 1.0),
                                  cfg.get<std::int64_t>("example.n_max", 10), cfg.get("example.radius", 0.95),
                                  cfg.get("example.grid_res", 16));
  r.pass = c.pass(cfg.get("example.tolerance", 1e-10));
  r.summary = {detail::kv("points", static_cast<std::int64_t>(c.points)), detail::kv("max_residual", c.max_residual),
               detail::kv("max_modulus", c.max_modulus), detail::kv("fixed_point_error", c.fixed_point_error)};
  detail::finish(out, r);
  return r;
}

inline CommandResult cmd_example4(const Config& cfg) {
  OutputSink out(cfg, "example4");
  CommandResult r;
  const double a_pow = cfg.get("example.a_power", 0.0), b_pow = cfg.get("example.b_power", 2.0);
  const double w_pow = cfg.get("example.omega_power", 1.0);
  const auto horizon = cfg.get<std::int64_t>("example.horizon", 1000);
  const SimilarityReport s = check_similarity_criterion(
      [=](std::int64_t n) { return cplx(std::pow(static_cast<double>(n), a_pow)); },
      [=](std::int64_t n) { return cplx(std::pow(static_cast<double>(n), b_pow)); },
      [=](std::int64_t k) { return std::pow(static_cast<double>(k), w_pow); }, horizon);
  const TranslationReport t = check_translation_separation(
      [=](std::int64_t n) { return cplx(std::pow(static_cast<double>(n), b_pow)); }, horizon);
  r.pass = s.pass && t.pass;
  r.summary = {detail::kv("similarity", s.pass), detail::kv("growth", s.growth_ok), detail::kv("pairwise", s.pairwise_ok),
               detail::kv("translation", t.pass), detail::kv("slow_growth", t.slow_growth ? std::string("yes") : "no")};
  detail::finish(out, r);
  return r;
}

inline CommandResult cmd_example5(const Config& cfg) {
  OutputSink out(cfg, "example5");
  CommandResult r;
  const int steps = cfg.get("example.steps", 200);
  const double radius = cfg.get("example.radius", 0.5);
  const double tol = cfg.get("example.tolerance", 0.1);
  const CompactSet k = ClosedDisc{0.0, radius};
  const Polynomial q = Polynomial::monomial(1);
  const HoloMap phi(ParabolicDisc{cfg.get("maps.a", 1.0), 1.0, 1});
  const IterateReport par = iterate_convergence(phi, q, k, ExtendedPoint(1.0), steps);
  const IterateReport ident = iterate_convergence(HoloMap(), q, k, ExtendedPoint(0.0), steps);
  // Half-plane translation observed through the Cayley map onto the disc.
  const IterateReport half = iterate_convergence(HoloMap(HalfPlaneShift{cfg.get("maps.a", 1.0), 1.0, 1}), q,
                                                 ClosedDisc{1.0, 0.5}, ExtendedPoint::infinity(), steps,
                                                 ConformalPair{ConformalKind::CayleyDiscToHalfPlane, true});
  std::ostringstream csv;
  csv << "n,parabolic,identity,half_plane\n";
  for (int n = 0; n < steps; ++n) {
    auto at = [n](const IterateReport& x) { return n < static_cast<int>(x.errors.size()) ? fmt(x.errors[n]) : ""; };
    csv << n + 1 << ',' << at(par) << ',' << at(ident) << ',' << at(half) << '\n';
  }
  out.write("iterates.csv", csv.str());
  const bool par_ok = !par.escaped && par.errors.back() < tol && par.monotone_from().value_or(steps + 1) < static_cast<std::size_t>(steps);
  const bool ident_flat = ident.errors.front() == ident.errors.back();
  const bool half_ok = !half.escaped && half.errors.back() < half.errors.front();
  r.pass = par_ok && ident_flat && half_ok;
  r.summary = {detail::kv("parabolic_e_last", par.errors.back()),
               detail::kv("parabolic_monotone_from", static_cast<std::int64_t>(par.monotone_from().value_or(0))),
               detail::kv("identity_e_first", ident.errors.front()), detail::kv("identity_e_last", ident.errors.back()),
               detail::kv("half_plane_e_last", half.errors.back())};
  detail::finish(out, r);
  return r;
}

/// build-fhc: construction.kind = existence | spaceable | dense.
inline CommandResult cmd_build_fhc(const Config& cfg) {
  OutputSink out(cfg, "build-fhc");
  CommandResult r;
  const RunawayConfig rc = runaway_config_from(cfg);
  const PipelineSettings ps = detail::pipeline_settings_from(cfg);
  const auto kind = cfg.get<std::string>("construction.kind", "existence");
  auto emit = [&](const FhcCandidate& c, const std::string& stem, std::int64_t horizon) {
    nlohmann::json j = candidate_json(c);
    j["horizon"] = horizon;
    out.write_json(stem + ".json", j);
    out.write(stem + "_certificate.csv", certificate_csv(c));
  };
  if (kind == "existence") {
    const ExistenceRun run = run_existence_pipeline(rc, ps);
    emit(run.candidate, "candidate", run.cfg.n_max);
    out.write("scan.csv", scan_csv(run.scan));
    r.pass = run.candidate.passed();
    r.summary = {detail::kv("fit", run.candidate.passed()), detail::kv("degree", static_cast<std::int64_t>(run.candidate.degree)),
                 detail::kv("islands", static_cast<std::int64_t>(run.truncation.islands.size())),
                 detail::kv("horizon", run.cfg.n_max), detail::kv("self_scan", run.scan.pass())};
  } else if (kind == "spaceable" || kind == "dense") {
    const int count = cfg.get("horizons.mu_max", 3);
    const BasisRun run = kind == "spaceable" ? run_spaceable_basis(rc, count, cfg.get("horizons.p_max", count), ps)
                                             : run_dense_basis(rc, count, ps);
    for (std::size_t i = 0; i < run.members.size(); ++i) {
      emit(run.members[i], "member_" + std::to_string(i + 1), run.cfg.n_max);
      r.summary.push_back(detail::kv("member_" + std::to_string(i + 1), run.members[i].passed()));
    }
    r.pass = run.basis.has_value();
    if (run.basis) {
      const GramReport g = gram_independence(*run.basis);
      r.summary.push_back(detail::kv("perturbation_sum", run.basis->perturbation_sum));
      r.summary.push_back(detail::kv("lambda_min", g.lambda_min));
    } else {
      r.summary.push_back("rejection=" + run.rejection);
    }
  } else {
    throw ConfigError("unknown construction.kind " + kind);
  }
  detail::finish(out, r);
  return r;
}

/// scan: re-measures a stored candidate against the designs recorded in it.
inline CommandResult cmd_scan(const Config& cfg) {
  OutputSink out(cfg, "scan");
  CommandResult r;
  std::filesystem::path path = cfg.require<std::string>("scan.candidate");
  if (!std::filesystem::exists(path) && std::filesystem::exists(out.dir() / path)) path = out.dir() / path;
  const StoredCandidate cand = read_candidate_file(path);
  std::ifstream in(path);
  const auto horizon = cfg.get<std::int64_t>("scan.horizon", nlohmann::json::parse(in).value("horizon", std::int64_t{0}));
  if (horizon < 2) throw ConfigError("scan.horizon must be at least 2");

  std::map<std::pair<int, int>, std::vector<std::int64_t>> blocks;
  double tau_max = 0.0;
  for (const auto& p : cand.pieces) {
    tau_max = std::max(tau_max, p.tau);
    if (p.l > 0 && p.n <= horizon) blocks[{p.nu, p.l}].push_back(p.n);
  }
  std::vector<ScanPair> pairs;
  for (auto& [key, ns] : blocks) {
    std::sort(ns.begin(), ns.end());
    pairs.push_back({key.first, key.second, IndexSet(ns, horizon), enumerate_dense_polynomial(key.second)});
  }
  ScanOptions so = scan_options_from(cfg);
  so.horizon = horizon;
  so.delta = cfg.get("scan.delta", 0.0);
  if (!(so.delta > 0.0)) so.delta = cfg.get("tolerances.delta_factor", 2.0) * tau_max;
  const OrbitScanReport rep = scan(cand.poly, map_family_from(cfg), exhaustion_from(cfg), domain_from(cfg), pairs, so);
  out.write("scan.csv", scan_csv(rep));
  r.pass = cand.status == "PASS" && rep.pass();
  r.summary = {detail::kv("candidate_status", cand.status), detail::kv("delta", so.delta), detail::kv("horizon", horizon),
               detail::kv("pairs", static_cast<std::int64_t>(pairs.size())), detail::kv("scan", rep.pass())};
  detail::finish(out, r);
  return r;
}

namespace detail {

inline IndexSet index_set_from(const Config& cfg, std::int64_t horizon) {
  const auto kind = cfg.get<std::string>("set.kind", "naturals");
  if (kind == "naturals") return IndexSet::naturals(horizon);
  if (kind == "arithmetic") return IndexSet::arithmetic(cfg.get<std::int64_t>("set.first", 1), cfg.get<std::int64_t>("set.step", 1), horizon);
  if (kind == "residue") return IndexSet::residue_class(cfg.get<std::int64_t>("set.residue", 0), cfg.get<std::int64_t>("set.modulus", 2), horizon);
  throw ConfigError("unknown set.kind " + kind);
}

}  // namespace detail

inline CommandResult cmd_density(const Config& cfg) {
  OutputSink out(cfg, "density");
  CommandResult r;
  const auto horizon = cfg.get<std::int64_t>("set.horizon", 100000);
  const IndexSet a = detail::index_set_from(cfg, horizon);
  const DensityReport d = density_report(a, horizon, cfg.get<std::int64_t>("set.burn_in", std::max<std::int64_t>(1, horizon / 100)),
                                         cfg.get("set.checkpoints", 1000));
  std::ostringstream os;
  write_density_csv(os, d);
  out.write("density.csv", os.str());
  r.pass = d.lower_estimate > 0.0;
  r.summary = {detail::kv("lower", d.lower_estimate), detail::kv("upper", d.upper_estimate), detail::kv("size", static_cast<std::int64_t>(a.size()))};
  detail::finish(out, r);
  return r;
}

inline CommandResult cmd_split(const Config& cfg) {
  OutputSink out(cfg, "split");
  CommandResult r;
  const auto horizon = cfg.get<std::int64_t>("set.horizon", 100000);
  const int parts = cfg.get("split.parts", 4);
  const IndexSet a = detail::index_set_from(cfg, horizon);
  const auto pieces = split(a, parts, horizon);
  std::ostringstream os;
  os << "n,part\n";
  for (auto n : a.elements()) {
    for (int p = 0; p < parts; ++p) {
      if (pieces[static_cast<std::size_t>(p)].contains(n)) {
        os << n << ',' << p + 1 << '\n';
        break;
      }
    }
  }
  const auto burn = cfg.get<std::int64_t>("set.burn_in", std::max<std::int64_t>(1, horizon / 100));
  r.pass = true;
  std::size_t total = 0;
  for (int p = 0; p < parts; ++p) {
    const auto& s = pieces[static_cast<std::size_t>(p)];
    total += s.size();
    const double lower = density_report(s, horizon, burn).lower_estimate;
    os << "# summary,part=" << p + 1 << ",size=" << s.size() << ",lower_density=" << fmt(lower) << '\n';
    r.summary.push_back(detail::kv("part_" + std::to_string(p + 1) + "_lower", lower));
    r.pass = r.pass && lower > 0.0;
  }
  r.pass = r.pass && total == a.size();
  out.write("partition.csv", os.str());
  detail::finish(out, r);
  return r;
}

inline CommandResult cmd_sepfamily(const Config& cfg) {
  OutputSink out(cfg, "sepfamily");
  CommandResult r;
  const auto horizon = cfg.get<std::int64_t>("horizons.n_max", 10000);
  const SeparatedFamily fam = family_from(cfg, horizon);
  const SeparationReport rep = verify_separated_family(fam);
  std::ostringstream os;
  os << "l,nu,n\n";
  for (const auto& m : fam.pairs) {
    for (auto n : m.set.elements()) os << m.index.l << ',' << m.index.nu << ',' << n << '\n';
  }
  for (std::size_t i = 0; i < fam.pairs.size(); ++i) {
    os << "# summary,l=" << fam.pairs[i].index.l << ",nu=" << fam.pairs[i].index.nu
       << ",lower_density=" << fmt(rep.lower_estimates[i]) << '\n';
    r.summary.push_back(detail::kv("A(" + std::to_string(fam.pairs[i].index.l) + "," +
                                       std::to_string(fam.pairs[i].index.nu) + ")_lower",
                                   rep.lower_estimates[i]));
  }
  out.write("family.csv", os.str());
  r.pass = rep.pass;
  if (!rep.pass) r.summary.push_back("violated=" + rep.violated + " " + rep.witness);
  detail::finish(out, r);
  return r;
}

inline CommandResult cmd_runaway(const Config& cfg) {
  OutputSink out(cfg, "runaway");
  CommandResult r;
  const RunawayConfig rc = runaway_config_from(cfg);
  const StrongRunawayReport sr = check_strong_runaway(rc);
  out.write("runaway.csv", detail::strong_runaway_csv(sr));
  out.write("islands.csv", islands_csv(sr.islands));
  r.pass = sr.pass();
  r.summary = {detail::kv("P1", sr.p1.pass), detail::kv("P2", sr.p2.pass), detail::kv("P3", sr.p3.pass),
               detail::kv("islands", static_cast<std::int64_t>(sr.islands.size()))};
  detail::finish(out, r);
  return r;
}

}  // namespace freqdyn
