// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
//   acceptance [--only N[,N...]]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../oracles/expression_corpus.hpp"
#include "../oracles/radial_oracle.hpp"
#include "mscap/capacity.hpp"
#include "mscap/error.hpp"
#include "mscap/radial.hpp"
#include "mscap/verify.hpp"

#ifndef MSCAP_CLI
#error "MSCAP_CLI must name the command-line binary"
#endif

using namespace mscap;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fails]");
  }
};

CondenserSpec ball_condenser(int n, int m, double r, double R, double c = -1.0, double delta = 0.0) {
  CondenserSpec s;
  s.geometry.n = n;
  s.geometry.domain = Shape::ball({}, R);
  s.geometry.compact = {Shape::ball({}, r)};
  s.m = m;
  s.psi = Expression::constant(c);
  s.delta = delta;
  return s;
}

CapacityOptions at(double h) {
  CapacityOptions o;
  o.solver.h = h;
  return o;
}

double sup_error(const EnvelopeSolution& sol, const oracle::RadialProfile& pr) {
  const GridDomain& g = sol.omega.grid();
  double mx = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeClass k = g.cls(i);
    if (k != NodeClass::kInterior && k != NodeClass::kCompact) continue;
    mx = std::max(mx, std::abs(sol.omega[i] - pr(std::sqrt(squared_norm(g.coords(i), g.dim())))));
  }
  return mx;
}

// Least-squares slope of log r against log h.
double log_slope(const std::vector<double>& hs, const std::vector<double>& r) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double x = std::log(hs[i]), y = std::log(r[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

// Maximality residuals of one condenser across refinement levels.
struct ResidualSeries {
  std::string name;
  int p = 1;
  double jump = 1.0;
  bool radial = false;
  std::vector<double> hs, residuals;
};

// State shared between criteria so that no envelope is solved twice.
struct Shared {
  std::vector<ResidualSeries> series;
  double n1_fine_value = 0.0;
  bool n1_done = false;
};

// Residual treated as zero: far below the update threshold of the solver.
constexpr double kFloor = 1e-9;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// ---------------------------------------------------------------------------

Verdict radial_n1(Shared& sh) {
  Verdict v;
  const auto t0 = Clock::now();
  const CondenserSpec s = ball_condenser(1, 1, 0.5, 1.0);
  const auto pr = oracle::radial_reference(1, 1, 0.5, 1.0, -1.0, 0.0);
  const double exact = pr.capacity;
  std::vector<RefinementRow> rows;
  ResidualSeries rs{"disk n=1", 1, 1.0, true, {}, {}};
  for (double h : {1.0 / 64, 1.0 / 128, 1.0 / 256}) {
    const EnvelopeSolution sol = solve_envelope(s, at(h).solver);
    const double err = sup_error(sol, pr);
    v.require(err <= 3.0 * h, "h=" + num(h) + " sup error " + num(err / h) + "h <= 3h");
    rows.push_back({h, capacity_from_envelope(sol, at(h)).value});
    rs.hs.push_back(h);
    rs.residuals.push_back(sol.maximality_residual);
  }
  const double elapsed = seconds_since(t0);
  const RefinementSummary sm = summarize_refinement(rows);
  const double rel = std::abs(rows.back().value - exact) / exact;
  v.require(rel <= 0.02, "capacity " + num(rows.back().value) + " vs " + num(exact) + " (" + num(100 * rel) +
                             "%) <= 2%");
  v.require(sm.order >= 0.9, "order " + num(sm.order) + " >= 0.9");
  v.require(elapsed < 60.0, "runtime " + num(elapsed) + " s < 60 s");
  sh.series.push_back(rs);
  sh.n1_fine_value = rows.back().value;
  sh.n1_done = true;
  return v;
}

Verdict radial_n2_laplace(Shared& sh) {
  Verdict v;
  const double closed = radial_capacity({2, 1, 0.4, 0.9, -1.0, 0.0});
  const double ref = oracle::radial_reference(2, 1, 0.4, 0.9, -1.0, 0.0).capacity;
  v.require(std::abs(closed - ref) / ref < 1e-6, "closed form " + num(closed) + " = flux oracle " + num(ref));
  const auto pr = oracle::radial_reference(2, 1, 0.4, 0.9, -1.0, 0.0);
  const CondenserSpec s = ball_condenser(2, 2, 0.4, 0.9);
  const auto t0 = Clock::now();
  ResidualSeries rs{"ball n=2 m=2", 1, 1.0, true, {}, {}};
  for (double h : {1.0 / 12, 1.0 / 16, 1.0 / 24}) {
    const EnvelopeSolution sol = solve_envelope(s, at(h).solver);
    rs.hs.push_back(h);
    rs.residuals.push_back(sol.maximality_residual);
    if (h > 1.0 / 14) continue;  // 1/12 only feeds the residual slope
    const double c = capacity_from_envelope(sol, at(h)).value;
    const double rel = std::abs(c - closed) / closed;
    v.require(rel <= 0.07, "h=" + num(h) + " capacity " + num(c) + " (" + num(100 * rel) + "%) <= 7%");
    v.require(sup_error(sol, pr) <= 3.0 * h, "h=" + num(h) + " sup error " + num(sup_error(sol, pr) / h) + "h");
  }
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 600.0, "runtime " + num(elapsed) + " s < 600 s");
  sh.series.push_back(rs);
  return v;
}

Verdict radial_n2_ma(Shared& sh) {
  Verdict v;
  const auto pr = oracle::radial_reference(2, 2, 0.4, 0.9, -1.0, 0.0);
  // Oracle normalization checked on the |z|^2 anchor first.
  const double anchor = oracle::anchor_mass(2, 2, 0.9), vol = 2.0 * oracle::ball_volume(2, 0.9);
  v.require(std::abs(anchor - vol) < 1e-12 * vol, "oracle anchor " + num(anchor) + " = 2 vol(B)");
  const double ref = pr.capacity;
  const CondenserSpec s = ball_condenser(2, 1, 0.4, 0.9);
  ResidualSeries rs{"ball n=2 m=1", 2, 1.0, true, {}, {}};
  double value = 0.0;
  for (double h : {1.0 / 8, 1.0 / 12, 1.0 / 16}) {
    const EnvelopeSolution sol = solve_envelope(s, at(h).solver);
    rs.hs.push_back(h);
    rs.residuals.push_back(sol.maximality_residual);
    value = capacity_from_envelope(sol, at(h)).value;
  }
  const double rel = std::abs(value - ref) / ref;
  v.require(rel <= 0.10, "capacity " + num(value) + " vs oracle " + num(ref) + " (" + num(100 * rel) + "%) <= 10%");
  const bool dec = rs.residuals[1] < rs.residuals[0] && rs.residuals[2] < rs.residuals[1];
  v.require(dec, "maximality residual " + num(rs.residuals[0]) + ", " + num(rs.residuals[1]) + ", " +
                     num(rs.residuals[2]) + " decreasing");
  sh.series.push_back(rs);
  return v;
}

Verdict oracle_identity(Shared&) {
  Verdict v;
  const double h = 1.0 / 128;
  const EnvelopeSolution sol = solve_envelope(ball_condenser(1, 1, 0.5, 1.0), at(h).solver);
  const double value = capacity_from_envelope(sol, at(h)).value;
  const auto family = standard_family(sol, 20);
  v.require(family.size() == 20, std::to_string(family.size()) + " candidates");
  const OracleReport o = capacity_direct_oracle(sol, family, value);
  std::size_t cert = 0;
  double env = -1.0;
  for (const auto& c : o.candidates) {
    cert += c.certified;
    if (c.label == "envelope") env = c.mass;
  }
  v.require(cert == o.candidates.size(), std::to_string(cert) + " certified");
  const double rel = std::abs(o.value - value) / value;
  v.require(rel <= 0.02, "oracle " + num(o.value) + " vs measure " + num(value) + " (" + num(100 * rel) + "%)");
  v.require(env == o.value, "envelope attains the minimum (argmin " + o.argmin + ")");
  return v;
}

Verdict maximality(Shared& sh) {
  Verdict v;
  // Default battery condensers not covered by the radial criteria.
  const SuiteConfig cfg = default_suite(7);
  for (const auto& e : cfg.battery) {
    if (e.kind != EntryKind::kWeighted && e.kind != EntryKind::kComponents) continue;
    const EnvelopeSolution sol = solve_envelope(e.spec, at(e.h).solver);
    const double jump = sol.condenser->delta() - sol.condenser->psi_min();
    sh.series.push_back({e.name, e.spec.p(), jump, false, {e.h}, {sol.maximality_residual}});
  }
  if (!sh.n1_done) v.require(false, "radial series missing (run criteria 1-3 first)");
  for (const auto& s : sh.series) {
    for (std::size_t i = 0; i < s.hs.size(); ++i) {
      const double bound = kTauConstant * s.hs[i] * std::pow(s.jump, s.p);
      v.require(s.residuals[i] <= bound, s.name + " h=" + num(s.hs[i]) + " residual " + num(s.residuals[i]) +
                                             " <= " + num(bound));
    }
    if (!s.radial) continue;
    double top = 0.0;
    for (double r : s.residuals) top = std::max(top, r);
    if (top <= kFloor * std::pow(s.jump, s.p)) {
      v.require(true, s.name + " slope: residual at round-off on every level");
      continue;
    }
    const double sl = log_slope(s.hs, s.residuals);
    v.require(sl >= 0.8, s.name + " slope " + num(sl) + " >= 0.8");
  }
  return v;
}

Verdict monotonicity(Shared&) {
  Verdict v;
  SuiteConfig cfg = default_suite(7);
  std::vector<BatteryEntry> keep;
  for (const auto& e : cfg.battery)
    if (e.kind == EntryKind::kMonotonicity) keep.push_back(e);
  cfg.battery = keep;
  const SuiteReport r = run_suite(cfg);
  for (const char* id : {"capacity.monotone_K", "capacity.monotone_psi", "capacity.monotone_delta"}) {
    bool found = false;
    for (const auto& c : r.checks) {
      if (c.id != id) continue;
      found = true;
      v.require(c.pass && keep.front().samples >= 10, std::string(id) + ": " + num(c.measured) + " violations, " + c.detail);
    }
    if (!found) v.require(false, std::string(id) + " missing");
  }
  return v;
}

Verdict outer_inner(Shared& sh) {
  Verdict v;
  const double h = 1.0 / 256;
  const CondenserSpec s = ball_condenser(1, 1, 0.5, 1.0);
  const double inner = sh.n1_done ? sh.n1_fine_value : capacity_via_measure(s, at(h)).value;
  const OuterReport o = outer_capacity(s, at(h));
  const double rel = std::abs(o.report.value - inner) / inner;
  v.require(rel <= 0.05, "outer " + num(o.report.value) + " vs inner " + num(inner) + " (" + num(100 * rel) + "%)");
  return v;
}

Verdict sandwich(Shared&) {
  Verdict v;
  const double h = 1.0 / 128;
  CondenserSpec s = ball_condenser(1, 1, 0.5, 1.0);
  s.psi = Expression::parse("-1 + 0.2*x1");
  s.delta = 0.1;
  const PolarBoundsReport b = polar_bounds_check(s, at(h));
  v.require(b.lower_ok && b.upper_ok, num(b.lower) + " <= " + num(b.weighted) + " <= " + num(b.upper) +
                                         " within " + num(b.tau));
  v.require(b.weighted > b.lower && b.weighted < b.upper, "strictly inside");
  CondenserSpec t = ball_condenser(1, 1, 0.5, 1.0, -0.5, 0.3);
  const PolarBoundsReport c = polar_bounds_check(t, at(h));
  const double rel = std::abs(c.weighted - c.lower) / c.weighted;
  v.require(c.lower == c.upper && rel <= 0.02, "constant psi: " + num(c.weighted) + " vs " + num(c.lower) + " (" +
                                                   num(100 * rel) + "%)");
  return v;
}

Verdict polar(Shared&) {
  Verdict v;
  const PolarTrendReport r =
      polar_trend(ball_condenser(1, 1, 0.125, 1.0), {}, {1.0 / 8, 1.0 / 16, 1.0 / 32}, at(1.0 / 128));
  std::string vals;
  for (const auto& l : r.levels) vals += (vals.empty() ? "" : ", ") + num(l.value);
  v.require(r.fit_residual <= 0.1, "C(eps) = " + vals + "; a/log(1/eps) residual " + num(r.fit_residual));
  v.require(r.limit_ratio <= 0.1, "limit/C(1/8) " + num(r.limit_ratio));
  return v;
}

Verdict comparison(Shared&) {
  Verdict v;
  const auto pairs = comparison_pairs(7, 10, 1.0 / 64);
  v.require(pairs.size() == 10, std::to_string(pairs.size()) + " pairs");
  int bad = 0;
  double worst = 1e300;
  for (const auto& p : pairs) {
    const ComparisonResult c = comparison_check(p);
    worst = std::min(worst, c.worst_slack);
    if (!c.admissible || c.worst_slack < -tau(p.u.grid().h())) {
      ++bad;
      v.require(false, p.label + (c.admissible ? " slack " + num(c.worst_slack) : " inadmissible"));
    }
  }
  v.require(bad == 0, "min slack " + num(worst));
  return v;
}

Verdict normalization(Shared&) {
  Verdict v;
  for (int n : {1, 2}) {
    const double h = n == 1 ? 1.0 / 64 : 1.0 / 16;
    const auto g = GridDomain::build(ball_condenser(n, 1, 0.3, 1.0).geometry, h);
    const ScalarField u = ScalarField::sample(g, [n](const Point& x) { return squared_norm(x, 2 * n); });
    const double nf = n == 1 ? 1.0 : 2.0;
    for (int p = 1; p <= n; ++p) {
      const MeasureField mu = hessian_density(u, p);
      std::size_t off = 0, tested = 0;
      for (std::size_t i = 0; i < g->size(); ++i) {
        const NodeClass k = g->cls(i);
        if (k != NodeClass::kInterior && k != NodeClass::kCompact) continue;
        ++tested;
        off += mu.density[i] != nf;
      }
      v.require(off == 0, "n=" + std::to_string(n) + " p=" + std::to_string(p) + ": " + std::to_string(off) + " of " +
                              std::to_string(tested) + " nodes differ from " + num(nf));
    }
  }
  return v;
}

Verdict parser_cli(Shared&) {
  Verdict v;
  int ok = 0;
  for (const auto& s : corpus::kRoundTrip) {
    const Expression a = Expression::parse(s);
    ok += Expression::parse(a.print()) == a;
  }
  v.require(corpus::kRoundTrip.size() == 50 && ok == 50, std::to_string(ok) + "/50 round trips");
  const bool prec = Expression::parse("2+3*4").evaluate({}) == 14.0 && Expression::parse("2^3^2").evaluate({}) == 512.0;
  v.require(prec, "2+3*4 = 14, 2^3^2 = 512");

  const auto dir = std::filesystem::temp_directory_path() / ("mscap_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::string out[2], js[2];
  int codes[2];
  for (int k = 0; k < 2; ++k) {
    const auto run = dir / ("run" + std::to_string(k));
    const std::string cmd = std::string("\"") + MSCAP_CLI + "\" verify --seed 7 --out \"" + run.string() + "\" > \"" +
                            (run.string() + ".txt") + "\"";
    codes[k] = std::system(cmd.c_str());
    out[k] = read_file(run.string() + ".txt");
    js[k] = read_file((run / "verify.json").string());
  }
  v.require(codes[0] == 0 && codes[1] == 0, "verify exit status " + std::to_string(codes[0]) + ", " +
                                                std::to_string(codes[1]));
  v.require(!out[0].empty() && out[0] == out[1], "tables identical (" + std::to_string(out[0].size()) + " bytes)");
  v.require(!js[0].empty() && js[0] == js[1], "JSON reports identical (" + std::to_string(js[0].size()) + " bytes)");
  std::filesystem::remove_all(dir);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--only") {
      std::stringstream ss(argv[i + 1]);
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    }

  const std::vector<std::pair<const char*, std::function<Verdict(Shared&)>>> criteria = {
      {"radial benchmark n=1", radial_n1},
      {"radial benchmark n=2 m=2", radial_n2_laplace},
      {"radial benchmark n=2 m=1", radial_n2_ma},
      {"capacity identity vs certified family", oracle_identity},
      {"maximality residual", maximality},
      {"monotonicity", monotonicity},
      {"outer vs inner capacity", outer_inner},
      {"sandwich bounds", sandwich},
      {"polar trend", polar},
      {"comparison principle", comparison},
      {"normalization anchor", normalization},
      {"parser and CLI determinism", parser_cli},
  };
  Shared sh;
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[k].second(sh);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("error: ") + e.what();
    }
    failed += !v.pass;
    std::printf("criterion %2d %s  %s (%.1f s): %s\n", id, v.pass ? "PASS" : "FAIL", criteria[k].first,
                seconds_since(t0), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
