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

// Experiment configuration, report headers, atomic output and candidate files.

#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "freqdyn/approx.hpp"
#include "freqdyn/density.hpp"
#include "freqdyn/orbit.hpp"
#include "freqdyn/runaway.hpp"

namespace freqdyn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sectioned key = value configuration; keys are addressed as "section.key".
class Config {
 public:
  Config() = default;

  static Config from_string(const std::string& text) {
    Config c;
    std::istringstream is(text);
    try {
      boost::property_tree::ini_parser::read_ini(is, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
  }

  static Config from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
  }

  /// "section.key=value"
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like section.key=value");
    const std::string key = assignment.substr(0, eq);
    if (key.find('.') == std::string::npos) throw ConfigError("override key needs a section: " + key);
    tree_.put(key, assignment.substr(eq + 1));
  }

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

  template <class T>
  T get(const std::string& key, const T& fallback) const {
    if (!has(key)) return fallback;
    try {
      return tree_.get<T>(key);
    } catch (const boost::property_tree::ptree_error& e) {
      throw ConfigError("config key " + key + ": " + e.what());
    }
  }

  template <class T>
  T require(const std::string& key) const {
    if (!has(key)) throw ConfigError("config key " + key + " is required");
    return get<T>(key, T{});
  }

  /// Sorted "section.key=value" lines; the hash is taken over this text.
  std::vector<std::string> canonical() const {
    std::vector<std::string> out;
    for (const auto& [section, body] : tree_) {
      if (body.empty()) {
        out.push_back(section + "=" + body.data());
        continue;
      }
      for (const auto& [key, value] : body) out.push_back(section + "." + key + "=" + value.data());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::string hash() const {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (const auto& line : canonical()) {
      for (unsigned char ch : line + "\n") {
        h ^= ch;
        h *= 1099511628211ULL;
      }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
  }

 private:
  boost::property_tree::ptree tree_;
};

/// Writes report files under <root>/<run.output_dir>, root taken from
/// FREQDYN_OUTPUT_ROOT when set. Files appear atomically via rename.
class OutputSink {
 public:
  OutputSink(const Config& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {
    std::filesystem::path root = ".";
    if (const char* env = std::getenv("FREQDYN_OUTPUT_ROOT"); env && *env) root = env;
    dir_ = root / cfg.get<std::string>("run.output_dir", "out/" + command_);
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::string header(const std::string& prefix = "# ") const {
    std::ostringstream os;
    os << prefix << "freqdyn " << command_ << '\n' << prefix << "config_hash=" << cfg_.hash() << '\n';
    for (const auto& line : cfg_.canonical()) os << prefix << line << '\n';
    return os.str();
  }

  std::filesystem::path write(const std::string& name, const std::string& body, bool with_header = true) {
    std::filesystem::create_directories(dir_);
    const auto target = dir_ / name;
    const auto tmp = dir_ / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
      if (with_header) out << header();
      out << body;
      if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
    written_.push_back(target);
    return target;
  }

  std::filesystem::path write_json(const std::string& name, nlohmann::json j) {
    j["command"] = command_;
    j["config_hash"] = cfg_.hash();
    j["parameters"] = cfg_.canonical();
    return write(name, j.dump(2) + "\n", false);
  }

  const std::vector<std::filesystem::path>& written() const { return written_; }

 private:
  const Config& cfg_;
  std::string command_;
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
};

// ---------------------------------------------------------------------------
// Candidate records

inline nlohmann::json cplx_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

inline cplx json_cplx(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline std::string spec_name(const PieceSpec& s) {
  switch (s.index()) {
    case 0: return "Monomial";
    case 1: return "FixedPoly";
    case 2: return "ComposedInverse";
    default: return "Zero";
  }
}

inline nlohmann::json candidate_json(const FhcCandidate& c) {
  nlohmann::json j;
  j["status"] = to_string(c.status);
  j["degree"] = c.degree;
  j["solver"] = c.solver;
  j["degrees_tried"] = c.degrees_tried;
  j["basis"] = {{"kind", c.poly.arnoldi() ? "arnoldi" : "monomial"},
                {"center", cplx_json(c.poly.center())},
                {"scale", c.poly.scale()}};
  if (const ArnoldiBasis* b = c.poly.arnoldi()) {
    // Hessenberg columns, entries 0..k+1 of column k.
    auto cols = nlohmann::json::array();
    for (Eigen::Index k = 0; k < b->h.cols(); ++k) {
      auto col = nlohmann::json::array();
      for (Eigen::Index i = 0; i <= k + 1; ++i) col.push_back(cplx_json(b->h(i, k)));
      cols.push_back(col);
    }
    j["basis"]["hessenberg"] = cols;
  }
  auto coeffs = nlohmann::json::array();
  for (cplx a : c.poly.coefficients()) coeffs.push_back(cplx_json(a));
  j["coefficients"] = coeffs;
  auto pieces = nlohmann::json::array();
  for (std::size_t i = 0; i < c.target.pieces.size(); ++i) {
    const auto& p = c.target.pieces[i];
    nlohmann::json q;
    q["spec"] = spec_name(p.spec);
    if (const auto* m = std::get_if<MonomialSpec>(&p.spec)) q["mu"] = m->mu;
    q["tau"] = p.tau;
    q["certificate"] = i < c.certificate.size() ? c.certificate[i] : -1.0;
    q["fine_error"] = i < c.fine_errors.size() ? c.fine_errors[i] : -1.0;
    if (p.tag) {
      q["n"] = p.tag->n;
      q["nu"] = p.tag->nu;
      q["l"] = p.tag->l;
      q["block"] = p.tag->block;
    }
    const ClosedDisc d = enclosing_disc(p.region);
    q["region"] = {{"center", cplx_json(d.center)}, {"radius", d.radius}};
    pieces.push_back(q);
  }
  j["pieces"] = pieces;
  return j;
}

struct StoredPiece {
  std::string spec;
  std::int64_t n = 0;
  int nu = 0;
  int l = 0;
  double tau = 0.0;
};

struct StoredCandidate {
  Polynomial poly;
  std::string status;
  std::vector<StoredPiece> pieces;
};

inline StoredCandidate read_candidate(const nlohmann::json& j) {
  StoredCandidate c;
  std::vector<cplx> coeffs;
  for (const auto& a : j.at("coefficients")) coeffs.push_back(json_cplx(a));
  const auto& basis = j.at("basis");
  const cplx center = json_cplx(basis.at("center"));
  const double scale = basis.at("scale").get<double>();
  if (basis.value("kind", std::string("monomial")) == "arnoldi") {
    const auto& cols = basis.at("hessenberg");
    const auto d = static_cast<Eigen::Index>(cols.size());
    auto arn = std::make_shared<ArnoldiBasis>(ArnoldiBasis{center, scale, Eigen::MatrixXcd::Zero(d + 1, d)});
    for (Eigen::Index k = 0; k < d; ++k) {
      const auto& col = cols.at(static_cast<std::size_t>(k));
      for (Eigen::Index i = 0; i <= k + 1 && i < static_cast<Eigen::Index>(col.size()); ++i) {
        arn->h(i, k) = json_cplx(col.at(static_cast<std::size_t>(i)));
      }
    }
    c.poly = Polynomial(std::move(coeffs), std::shared_ptr<const ArnoldiBasis>(std::move(arn)));
  } else {
    c.poly = Polynomial(std::move(coeffs), center, scale);
  }
  c.status = j.at("status").get<std::string>();
  for (const auto& q : j.at("pieces")) {
    StoredPiece p;
    p.spec = q.at("spec").get<std::string>();
    p.tau = q.at("tau").get<double>();
    if (q.contains("n")) {
      p.n = q.at("n").get<std::int64_t>();
      p.nu = q.at("nu").get<int>();
      p.l = q.at("l").get<int>();
    }
    c.pieces.push_back(p);
  }
  return c;
}

inline StoredCandidate read_candidate_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open candidate " + path.string());
  try {
    return read_candidate(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed candidate " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV reports

inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline std::string certificate_csv(const FhcCandidate& c) {
  std::ostringstream os;
  os << "piece,spec,n,nu,l,tau,certificate,fine_error,ok\n";
  for (std::size_t i = 0; i < c.target.pieces.size(); ++i) {
    const auto& p = c.target.pieces[i];
    const double cert = i < c.certificate.size() ? c.certificate[i] : -1.0;
    os << i << ',' << spec_name(p.spec) << ',' << (p.tag ? p.tag->n : 0) << ',' << (p.tag ? p.tag->nu : 0)
       << ',' << (p.tag ? p.tag->l : 0) << ',' << fmt(p.tau) << ',' << fmt(cert) << ','
       << fmt(i < c.fine_errors.size() ? c.fine_errors[i] : -1.0) << ',' << (cert >= 0 && cert < p.tau ? 1 : 0)
       << '\n';
  }
  os << "# summary,status=" << to_string(c.status) << ",degree=" << c.degree << ",solver=" << c.solver << '\n';
  return os.str();
}

/// (nu, l, n, error, hit, prefix_hit_ratio) rows plus one summary line per pair.
inline std::string scan_csv(const OrbitScanReport& r) {
  std::ostringstream os;
  os << "nu,l,n,error,hit,designed,prefix_hit_ratio\n";
  for (const auto& p : r.pairs) {
    std::int64_t count = 0;
    for (std::size_t i = 0; i < p.errors.size(); ++i) {
      const auto n = static_cast<std::int64_t>(i) + 1;
      const bool hit = p.hits.contains(n);
      count += hit ? 1 : 0;
      os << p.nu << ',' << p.l << ',' << n << ',' << fmt(p.errors[i]) << ',' << (hit ? 1 : 0) << ','
         << (p.designed.contains(n) ? 1 : 0) << ',' << fmt(static_cast<double>(count) / n) << '\n';
    }
  }
  for (const auto& p : r.pairs) {
    os << "# summary,nu=" << p.nu << ",l=" << p.l << ",verdict=" << (p.pass ? "PASS" : "FAIL")
       << ",burn_in=" << p.burn_in << ",hits=" << p.hits.size() << ",designed=" << p.designed.size()
       << ",max_designed_error=" << fmt(p.max_designed_error)
       << ",hit_density=" << fmt(p.density ? p.density->lower_estimate : 0.0) << ",witness=" << p.witness
       << '\n';
  }
  os << "# summary,delta=" << fmt(r.delta) << ",horizon=" << r.horizon << ",verdict=" << (r.pass() ? "PASS" : "FAIL")
     << '\n';
  return os.str();
}

inline std::string islands_csv(const std::vector<Island>& islands) {
  std::ostringstream os;
  os << "n,nu,center_re,center_im,radius\n";
  for (const auto& isl : islands) {
    os << isl.n << ',' << isl.nu << ',' << fmt(isl.image_bound.center.real()) << ','
       << fmt(isl.image_bound.center.imag()) << ',' << fmt(isl.image_bound.radius) << '\n';
  }
  return os.str();
}

}  // namespace freqdyn
