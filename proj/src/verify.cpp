#include "mscap/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "mscap/error.hpp"
#include "mscap/radial.hpp"

namespace mscap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct CheckDef {
  const char* id;
  const char* anchor;
};

// Every check id with the anchor it exercises.
const CheckDef kChecks[] = {
    {"hessian.normalization", "normalization of dd^c"},
    {"hessian.nesting", "nesting of the classes"},
    {"hessian.sum_stability", "pointwise Hessian inequalities"},
    {"hessian.comparison", "comparison principle"},
    {"envelope.membership", "pointwise Hessian inequalities"},
    {"envelope.closed_form", "definition of the weighted measure"},
    {"envelope.domination", "definition of the weighted measure"},
    {"envelope.fixed_point", "definition of the weighted measure"},
    {"envelope.invariants", "weighted measure class and its constraints"},
    {"envelope.unweighted_identity", "unweighted specialization"},
    {"envelope.gluing", "local maximal replacement"},
    {"envelope.maximality", "maximality off K"},
    {"envelope.maximality_slope", "maximality off K"},
    {"envelope.boundary", "boundary limit on regular domains"},
    {"envelope.boundary_slope", "boundary limit on regular domains"},
    {"envelope.regularity", "continuity on regular compacts"},
    {"envelope.monotone_dependence", "monotonicity"},
    {"capacity.identity", "capacity identity"},
    {"capacity.refinement_order", "capacity identity"},
    {"capacity.linearity", "capacity identity"},
    {"capacity.oracle_identity", "infimum definition of capacity"},
    {"capacity.oracle_gap", "infimum definition of capacity"},
    {"capacity.unweighted", "m-capacity"},
    {"capacity.monotone_K", "monotonicity"},
    {"capacity.monotone_psi", "monotonicity"},
    {"capacity.monotone_delta", "monotonicity"},
    {"capacity.outer_monotone", "approximation by regular compacts"},
    {"capacity.outer_inner", "outer equals inner on compacts"},
    {"capacity.sandwich", "sandwich bounds"},
    {"capacity.sandwich_tie", "sandwich bounds"},
    {"capacity.sandwich_strict", "sandwich bounds"},
    {"capacity.polar_fit", "polar sets have zero outer capacity"},
    {"capacity.polar_limit", "polar sets have zero outer capacity"},
    {"capacity.nonpolar", "non-polar compacts have positive capacity"},
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Residual regarded as zero: the solver stops at updates of epsilon h^2, so
// a mass this small is round-off, not a discretization trend.
constexpr double kResidualFloor = 1e-9;

CondenserSpec ball_spec(int n, int m, const Point& kc, double r, double R, Expression psi, double delta) {
  CondenserSpec s;
  s.geometry.n = n;
  s.geometry.domain = Shape::ball({}, R);
  s.geometry.compact = {Shape::ball(kc, r)};
  s.m = m;
  s.psi = std::move(psi);
  s.delta = delta;
  return s;
}

double slope(const std::vector<double>& hs, const std::vector<double>& v) {
  // Least-squares slope of log v against log h.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double x = std::log(hs[i]), y = std::log(v[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

// Jump delta - min psi raised to p: the natural scale of masses.
double mass_scale(const Condenser& c) { return std::pow(c.delta() - c.psi_min(), c.p()); }

// Distance from K to the complement of D along the grid generators (balls only), else a grid estimate.
double separation(const CondenserSpec& s) {
  const auto* d = std::get_if<Ball>(&s.geometry.domain.variant());
  double best = kInf;
  for (const auto& k : s.geometry.compact) {
    const auto* b = std::get_if<Ball>(&k.variant());
    if (!d || !b) return 0.25;
    Point x = b->center;
    for (int a = 0; a < 4; ++a) x[a] -= d->center[a];
    best = std::min(best, d->radius - std::sqrt(squared_norm(x, s.geometry.dim())) - b->radius);
  }
  return best;
}

class Runner {
 public:
  Runner(const SuiteConfig& cfg, SuiteReport& rep) : cfg_(cfg), rep_(rep) {}

  void run(const BatteryEntry& e) {
    switch (e.kind) {
      case EntryKind::kRadial: radial(e); break;
      case EntryKind::kWeighted:
      case EntryKind::kComponents: general(e); break;
      case EntryKind::kMonotonicity: monotonicity(e); break;
      case EntryKind::kPolar: polar(e); break;
      case EntryKind::kComparison: comparison(e); break;
    }
  }

 private:
  using Body = std::function<void(CheckRecord&)>;

  void check(const std::string& id, const std::string& subject, const Body& body) {
    CheckRecord r;
    r.id = id;
    r.anchor = anchor_of(id);
    r.subject = subject;
    r.relation = "<=";
    try {
      body(r);
      r.pass = r.relation == "<=" ? r.measured <= r.threshold : r.measured >= r.threshold;
      if (std::isnan(r.measured)) r.pass = false;
    } catch (const std::exception& ex) {
      r.pass = false;
      r.detail = ex.what();
    }
    rep_.checks.push_back(std::move(r));
  }

  CapacityOptions copts(double h) const {
    CapacityOptions o;
    o.solver.h = h;
    o.density_scale = cfg_.density_scale;
    return o;
  }

  EnvelopeSolution solve(const CondenserSpec& s, double h, const std::string& tag) {
    EnvelopeSolution sol = solve_envelope(s, copts(h).solver);
    const GridDomain& g = sol.omega.grid();
    rep_.fingerprint["solves"].push_back({{"tag", tag},
                                          {"h", h},
                                          {"nodes", g.size()},
                                          {"active", sol.plan->active_count()},
                                          {"sweeps", sol.iterations}});
    return sol;
  }

  double capacity(const EnvelopeSolution& sol) { return capacity_from_envelope(sol, copts(sol.omega.grid().h())).value; }

  // Checks shared by every single-condenser entry, on the finest solve.
  void envelope_checks(const BatteryEntry& e, const EnvelopeSolution& sol) {
    const Condenser& c = *sol.condenser;
    const GridDomain& g = c.grid();
    const double h = g.h();
    const double jump = c.delta() - c.psi_min();
    const std::string& who = e.name;

    check("envelope.invariants", who, [&](CheckRecord& r) {
      double worst = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const NodeClass k = g.cls(i);
        if (k == NodeClass::kExterior) continue;
        worst = std::max(worst, sol.omega[i] - c.delta());
        if (k == NodeClass::kBoundary) worst = std::max(worst, std::abs(sol.omega[i] - c.delta()));
        if (k == NodeClass::kCompact) worst = std::max(worst, sol.omega[i] - c.psi_nodes()[i]);
      }
      r.measured = worst;
      r.threshold = 1e-12 * std::max(1.0, std::abs(c.delta()) + jump);
      r.detail = "max of (omega - delta)+, |omega - delta| on BOUNDARY, (omega - psi)+ on K";
    });
    check("envelope.membership", who, [&](CheckRecord& r) {
      const MembershipReport m = is_m_subharmonic(sol.omega, c.spec().m);
      r.measured = m.worst_violation;
      r.threshold = m.tol;
      r.detail = std::to_string(m.violations) + " of " + std::to_string(m.tested) + " nodes below -tol";
    });
    check("envelope.fixed_point", who, [&](CheckRecord& r) {
      const EnvelopeSolution again = solve_envelope(sol.condenser, copts(h).solver, &sol.omega);
      double mx = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g.cls(i) != NodeClass::kExterior) mx = std::max(mx, std::abs(again.omega[i] - sol.omega[i]));
      r.measured = mx;
      r.threshold = copts(h).solver.epsilon * h * h;
      r.detail = std::to_string(again.iterations) + " sweeps on restart";
    });
    check("envelope.gluing", who, [&](CheckRecord& r) {
      // Widest free core, and a ball inside it around one of its nodes.
      int margin = 1;
      while (margin < 64) {
        const NodeMask core = g.free_core(margin + 1);
        if (std::find(core.begin(), core.end(), 1) == core.end()) break;
        ++margin;
      }
      const NodeMask core = g.free_core(margin);
      const std::size_t at = static_cast<std::size_t>(std::find(core.begin(), core.end(), 1) - core.begin());
      if (at >= g.size()) throw Error(ErrorCode::kInvalidArgument, "no free node for a replacement ball");
      std::size_t replaced = 0;
      const ScalarField w = local_maximal_replacement(sol, g.coords(at), margin * h, &replaced);
      double mx = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g.cls(i) != NodeClass::kExterior) mx = std::max(mx, std::abs(w[i] - sol.omega[i]));
      r.measured = mx;
      r.threshold = 1e-8 * jump;
      r.detail = std::to_string(replaced) + " nodes replaced in a ball of radius " + num(margin * h);
    });
    check("envelope.boundary", who, [&](CheckRecord& r) {
      r.measured = sol.boundary_residual;
      r.threshold = 2.0 * tau(h) * jump / separation(c.spec());
      r.detail = "max |omega - delta| on the ring next to BOUNDARY";
    });
    check("envelope.maximality", who, [&](CheckRecord& r) {
      r.measured = sol.maximality_residual;
      r.threshold = tau(h) * mass_scale(c);
    });
    check("envelope.regularity", who, [&](CheckRecord& r) {
      const RegularityReport reg = regularity_report(sol);
      r.measured = reg.max_gap;
      r.threshold = reg.tol;
      r.relation = "<=";
      r.detail = std::to_string(reg.failing.size()) + " irregular K nodes";
    });
  }

  // Oracle with the standard family; returns the family used.
  void oracle_checks(const BatteryEntry& e, const EnvelopeSolution& sol, double value, bool identity) {
    const double h = sol.omega.grid().h();
    OracleReport orc;
    bool have = false;
    auto get = [&]() -> const OracleReport& {
      if (!have) {
        orc = capacity_direct_oracle(sol, standard_family(sol, 20), value);
        have = true;
      }
      return orc;
    };
    check("capacity.oracle_gap", e.name, [&](CheckRecord& r) {
      const OracleReport& o = get();
      r.measured = o.gap;
      r.threshold = -tau(h);
      r.relation = ">=";
      std::size_t cert = 0;
      for (const auto& c : o.candidates) cert += c.certified;
      r.detail = std::to_string(cert) + "/" + std::to_string(o.candidates.size()) + " certified, argmin " + o.argmin;
    });
    check("envelope.domination", e.name, [&](CheckRecord& r) {
      // Members of the constraint class: m-sh, <= delta in D, <= psi on K.
      const auto fam = standard_family(sol, 20);
      const Condenser& c = *sol.condenser;
      const GridDomain& g = sol.omega.grid();
      const double tol = default_membership_tol(sol.omega);
      const double slack = 1e-12 * std::max(1.0, std::abs(c.delta()));
      double worst = -kInf;
      int members = 0;
      for (const auto& f : fam) {
        bool inside = true;
        for (std::size_t i = 0; i < g.size() && inside; ++i) {
          const NodeClass k = g.cls(i);
          if (k == NodeClass::kInterior || k == NodeClass::kCompact) inside = f.u[i] <= c.delta() + slack;
          if (k == NodeClass::kCompact) inside = inside && f.u[i] <= c.psi_nodes()[i] + slack;
        }
        if (!inside || !is_m_subharmonic(f.u, c.spec().m, tol).member) continue;
        ++members;
        for (std::size_t i = 0; i < g.size(); ++i) {
          const NodeClass k = g.cls(i);
          if (k == NodeClass::kInterior || k == NodeClass::kCompact) worst = std::max(worst, f.u[i] - sol.omega[i]);
        }
      }
      if (members == 0) throw Error(ErrorCode::kEmptyFamily, "no member of the constraint class in the family");
      r.measured = worst;
      r.threshold = tau(h);
      r.detail = "max of (v - omega) over " + std::to_string(members) + " class members";
    });
    if (!identity) return;
    check("capacity.oracle_identity", e.name, [&](CheckRecord& r) {
      const OracleReport& o = get();
      r.measured = std::abs(o.value - value) / value;
      r.threshold = 0.02;
      r.detail = "oracle " + num(o.value) + " (" + o.argmin + ") vs measure " + num(value);
      if (o.argmin != "envelope") {
        // The envelope must attain the family minimum.
        double env = kInf;
        for (const auto& c : o.candidates)
          if (c.label == "envelope") env = c.mass;
        if (env > o.value + 1e-12 * std::abs(o.value)) r.measured = std::max(r.measured, 1.0);
      }
    });
  }

  void radial(const BatteryEntry& e) {
    const CondenserSpec& s = e.spec;
    const auto* kb = std::get_if<Ball>(&s.geometry.compact.at(0).variant());
    const auto* db = std::get_if<Ball>(&s.geometry.domain.variant());
    double cval = 0.0;
    if (!kb || !db || !s.psi.is_constant(&cval))
      throw Error(ErrorCode::kInvalidArgument, e.name + ": radial entries need concentric balls and constant psi");
    const RadialCondenser rc{s.n(), s.p(), kb->radius, db->radius, cval, s.delta};
    const double exact = radial_capacity(rc);
    const double jump = s.delta - cval;

    std::vector<double> hs = e.levels();
    std::vector<EnvelopeSolution> sols;
    std::vector<double> caps, maxres, bres;
    for (double h : hs) {
      sols.push_back(solve(s, h, e.name));
      caps.push_back(capacity(sols.back()));
      maxres.push_back(sols.back().maximality_residual);
      bres.push_back(sols.back().boundary_residual);
    }
    const EnvelopeSolution& fine = sols.back();
    const GridDomain& g = fine.omega.grid();
    const double h = hs.back();
    const double value = caps.back();

    hessian_checks(e, g);
    envelope_checks(e, fine);

    check("envelope.closed_form", e.name, [&](CheckRecord& r) {
      double mx = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const NodeClass k = g.cls(i);
        if (k != NodeClass::kInterior && k != NodeClass::kCompact) continue;
        const double t = std::sqrt(squared_norm(g.coords(i), g.dim()));
        mx = std::max(mx, std::abs(fine.omega[i] - radial_envelope(rc, t)));
      }
      r.measured = mx;
      r.threshold = 3.0 * h * jump;
      r.detail = "sup error " + num(mx / h) + " h";
    });
    check("envelope.maximality_slope", e.name, [&](CheckRecord& r) {
      if (hs.size() < 3) throw Error(ErrorCode::kInvalidArgument, "needs three levels");
      const double top = *std::max_element(maxres.begin(), maxres.end());
      r.relation = ">=";
      r.threshold = 0.8;
      if (top <= kResidualFloor * std::pow(jump, s.p())) {
        r.measured = kInf;
        r.detail = "residual at round-off level on every grid (max " + num(top) + ")";
        return;
      }
      r.measured = slope(hs, maxres);
      r.detail = "residuals " + num(maxres[0]) + ", " + num(maxres[1]) + ", " + num(maxres[2]);
    });
    check("envelope.boundary_slope", e.name, [&](CheckRecord& r) {
      if (hs.size() < 3) throw Error(ErrorCode::kInvalidArgument, "needs three levels");
      r.measured = slope(hs, bres);
      r.threshold = 0.8;
      r.relation = ">=";
      r.detail = "boundary residuals " + num(bres[0]) + ", " + num(bres[1]) + ", " + num(bres[2]);
    });
    check("capacity.identity", e.name, [&](CheckRecord& r) {
      r.measured = std::abs(value - exact) / exact;
      r.threshold = e.closed_form_tol;
      r.detail = "measure " + num(value) + " vs closed form " + num(exact);
    });
    check("capacity.unweighted", e.name, [&](CheckRecord& r) {
      // Same geometry with psi = -1, delta = 0 against its closed form.
      const RadialCondenser ru{rc.n, rc.p, rc.r, rc.R, -1.0, 0.0};
      const double v = (cval == -1.0 && s.delta == 0.0) ? value : capacity(solve(unweighted(s), h, e.name + "/unweighted"));
      r.measured = std::abs(v - radial_capacity(ru)) / radial_capacity(ru);
      r.threshold = e.closed_form_tol;
    });
    check("capacity.refinement_order", e.name, [&](CheckRecord& r) {
      // The two finest levels plus one more halving: the coarsest level is
      // still pre-asymptotic for the capacity.
      const std::size_t k = hs.size();
      std::vector<RefinementRow> rows;
      if (e.outer) {
        if (k < 2) throw Error(ErrorCode::kInvalidArgument, "needs two levels");
        rows = {{hs[k - 2], caps[k - 2]}, {h, value}, {0.5 * h, capacity(solve(s, 0.5 * h, e.name + "/order"))}};
      } else {
        if (k < 3) throw Error(ErrorCode::kInvalidArgument, "needs three levels");
        for (std::size_t i = k - 3; i < k; ++i) rows.push_back({hs[i], caps[i]});
      }
      const RefinementSummary sm = summarize_refinement(rows);
      r.measured = sm.order;
      r.threshold = 0.9;
      r.relation = ">=";
      r.detail = "h = " + num(rows.front().h) + ".." + num(rows.back().h) + ", extrapolated " + num(sm.extrapolated);
    });
    check("capacity.nonpolar", e.name, [&](CheckRecord& r) {
      const double lo = *std::min_element(caps.begin(), caps.end());
      const double hi = *std::max_element(caps.begin(), caps.end());
      r.measured = (hi - lo) / hi;
      r.threshold = 0.05;
      if (!(lo > 0.5 * hi)) r.measured = 1.0;
      r.detail = "capacities " + num(caps.front()) + " .. " + num(caps.back());
    });
    oracle_checks(e, fine, value, true);

    // The weight doubled around delta: envelope and capacity scale exactly.
    CondenserSpec twice = s;
    twice.psi = Expression::constant(s.delta - 2.0 * jump);
    EnvelopeSolution sol2;
    bool have2 = false;
    auto get2 = [&]() -> const EnvelopeSolution& {
      if (!have2) {
        sol2 = solve(twice, h, e.name + "/doubled");
        have2 = true;
      }
      return sol2;
    };
    check("envelope.unweighted_identity", e.name, [&](CheckRecord& r) {
      const EnvelopeSolution& w = get2();
      double mx = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g.cls(i) != NodeClass::kExterior)
          mx = std::max(mx, std::abs((w.omega[i] - s.delta) - 2.0 * (fine.omega[i] - s.delta)));
      r.measured = mx;
      r.threshold = 1e-6 * jump;
      r.detail = "omega(delta - 2j) - delta vs 2 (omega(delta - j) - delta)";
    });
    check("capacity.linearity", e.name, [&](CheckRecord& r) {
      const double v2 = capacity(get2());
      const double want = std::pow(2.0, s.p());
      r.measured = std::abs(v2 / value - want) / want;
      r.threshold = 0.01;
      r.detail = "ratio " + num(v2 / value) + " vs " + num(want);
    });
    check("capacity.sandwich_tie", e.name, [&](CheckRecord& r) {
      CondenserSpec t = s;
      t.psi = Expression::constant(s.delta - 0.8 * jump);
      const PolarBoundsReport pb = polar_bounds_check(t, copts(h));
      r.measured = std::abs(pb.weighted - pb.lower) / pb.weighted;
      r.threshold = 0.02;
      r.detail = "weighted " + num(pb.weighted) + " vs C1 C = " + num(pb.lower);
    });
    if (!e.outer) return;
    OuterReport outer;
    bool have_outer = false;
    check("capacity.outer_monotone", e.name, [&](CheckRecord& r) {
      outer = outer_capacity(s, copts(h));
      have_outer = true;
      r.measured = outer.monotonicity_slack;
      r.threshold = tau(h);
      std::string d = "levels";
      for (const auto& l : outer.levels) d += " " + num(l.value);
      r.detail = d;
    });
    check("capacity.outer_inner", e.name, [&](CheckRecord& r) {
      if (!have_outer) throw Error(ErrorCode::kInvalidArgument, "outer capacity unavailable");
      r.measured = std::abs(outer.report.value - value) / value;
      r.threshold = 0.05;
      r.detail = "outer " + num(outer.report.value) + " vs inner " + num(value);
    });
  }

  void general(const BatteryEntry& e) {
    const std::vector<double> hs = e.levels();
    std::vector<EnvelopeSolution> sols;
    for (double h : hs) sols.push_back(solve(e.spec, h, e.name));
    const EnvelopeSolution& fine = sols.back();
    const double h = hs.back();
    const double value = capacity(fine);
    envelope_checks(e, fine);
    oracle_checks(e, fine, value, false);
    PolarBoundsReport pb;
    bool have = false;
    check("capacity.sandwich", e.name, [&](CheckRecord& r) {
      pb = polar_bounds_check(e.spec, copts(h));
      have = true;
      // Largest violation of either bound, measured against tau.
      r.measured = std::max(pb.lower - pb.weighted, pb.weighted - pb.upper);
      r.threshold = pb.tau;
      r.detail = num(pb.lower) + " <= " + num(pb.weighted) + " <= " + num(pb.upper);
    });
    if (e.kind == EntryKind::kWeighted) {
      check("capacity.sandwich_strict", e.name, [&](CheckRecord& r) {
        if (!have) throw Error(ErrorCode::kInvalidArgument, "sandwich unavailable");
        // Distance to the nearer bound, relative to the bracket width; > 0 means strictly inside.
        r.measured = std::min(pb.weighted - pb.lower, pb.upper - pb.weighted) / (pb.upper - pb.lower);
        r.threshold = 0.0;
        r.relation = ">=";
        if (r.measured == 0.0) r.measured = -1.0;
      });
    }
  }

  void monotonicity(const BatteryEntry& e) {
    std::mt19937_64 rng(cfg_.seed ^ 0x6d6f6e6f746f6e65ULL);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double h = e.h;
    const double t = tau(h);
    const int n = e.spec.n();
    const int dim = 2 * n;

    auto random_center = [&](double spread) {
      Point c{};
      for (int a = 0; a < dim; ++a) c[a] = spread * (2.0 * U(rng) - 1.0);
      return c;
    };
    auto weight = [&](double base, double slope) {
      return Expression::parse(num(base) + " + " + num(slope) + "*x1");
    };
    auto pointwise = [&](const EnvelopeSolution& lo, const EnvelopeSolution& hi) {
      // Largest amount by which lo exceeds hi.
      const GridDomain& g = lo.omega.grid();
      // Same lattice is enough; the masks of the two condensers differ.
      const GridDomain& o = hi.omega.grid();
      if (g.h() != o.h()) return kInf;
      for (int a = 0; a < g.dim(); ++a)
        if (g.kmin(a) != o.kmin(a) || g.extent(a) != o.extent(a)) return kInf;
      double worst = -kInf;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.cls(i) == NodeClass::kExterior || hi.omega.grid().cls(i) == NodeClass::kExterior) continue;
        worst = std::max(worst, lo.omega[i] - hi.omega[i]);
      }
      return worst;
    };

    struct Clause {
      int violations = 0;
      double worst = -kInf;
    };
    Clause ck, cp, cd, om;
    auto note = [](Clause& c, double excess, double slack) {
      c.worst = std::max(c.worst, excess);
      if (excess > slack) ++c.violations;
    };

    for (int k = 0; k < e.samples; ++k) {
      const double r1 = 0.15 + 0.15 * U(rng);
      const Point c1 = random_center(0.1);
      const double grow = 0.05 + 0.1 * U(rng);
      const Point c2 = random_center(0.03);
      double d12 = 0.0;
      for (int a = 0; a < dim; ++a) d12 += (c1[a] - c2[a]) * (c1[a] - c2[a]);
      const double r2 = r1 + std::sqrt(d12) + grow;  // ball(c2, r2) contains ball(c1, r1)
      const double base = -1.0 + 0.4 * U(rng);
      const double lean = 0.3 * (2.0 * U(rng) - 1.0);
      const double delta = 0.1 + 0.5 * U(rng);
      const Expression psi = weight(base, lean);

      CondenserSpec s1 = e.spec;
      s1.geometry.compact = {Shape::ball(c1, r1)};
      s1.psi = psi;
      s1.delta = delta;
      CondenserSpec s2 = s1;
      s2.geometry.compact = {Shape::ball(c2, r2)};
      const EnvelopeSolution a = solve(s1, h, e.name + "/K1"), b = solve(s2, h, e.name + "/K2");
      note(ck, capacity(a) - capacity(b), t);
      note(om, pointwise(b, a), t);  // omega decreases as K grows

      CondenserSpec p2 = s1;
      const double lift = 0.05 + 0.3 * U(rng);
      p2.psi = weight(base + lift, lean);
      if (!(p2.delta > base + lift + std::abs(lean) * (std::sqrt(d12) + 1.0))) p2.delta = base + lift + 1.0;
      CondenserSpec p1 = s1;
      p1.delta = p2.delta;
      const EnvelopeSolution pa = solve(p1, h, e.name + "/psi1"), pb = solve(p2, h, e.name + "/psi2");
      note(cp, capacity(pb) - capacity(pa), t);  // larger psi, smaller capacity
      note(om, pointwise(pa, pb), t);            // larger psi, larger omega

      CondenserSpec d2 = s1;
      d2.delta = delta + 0.05 + 0.4 * U(rng);
      const EnvelopeSolution da = solve(s1, h, e.name + "/delta1"), db = solve(d2, h, e.name + "/delta2");
      note(cd, capacity(da) - capacity(db), t);
      note(om, pointwise(da, db), t);
    }
    auto emit = [&](const char* id, const Clause& c) {
      check(id, e.name, [&](CheckRecord& r) {
        r.measured = c.violations;
        r.threshold = 0;
        r.detail = std::to_string(e.samples) + " pairs, worst excess " + num(c.worst) + " (tau " + num(t) + ")";
      });
    };
    emit("capacity.monotone_K", ck);
    emit("capacity.monotone_psi", cp);
    emit("capacity.monotone_delta", cd);
    emit("envelope.monotone_dependence", om);
  }

  void polar(const BatteryEntry& e) {
    const auto* kb = std::get_if<Ball>(&e.spec.geometry.compact.at(0).variant());
    if (!kb) throw Error(ErrorCode::kInvalidArgument, e.name + ": polar entries need a ball K");
    PolarTrendReport pt;
    bool have = false;
    check("capacity.polar_fit", e.name, [&](CheckRecord& r) {
      pt = polar_trend(e.spec, kb->center, {1.0 / 8, 1.0 / 16, 1.0 / 32}, copts(e.h));
      have = true;
      r.measured = pt.fit_residual;
      r.threshold = 0.1;
      std::string d = "C(eps):";
      for (const auto& l : pt.levels) d += " " + num(l.value);
      r.detail = d + "; a = " + num(pt.a);
    });
    check("capacity.polar_limit", e.name, [&](CheckRecord& r) {
      if (!have) throw Error(ErrorCode::kInvalidArgument, "polar trend unavailable");
      r.measured = pt.limit_ratio;
      r.threshold = 0.1;
      r.detail = "a/log(1/eps) + b fit: b = " + num(pt.b2);
    });
  }

  void comparison(const BatteryEntry& e) {
    check("hessian.comparison", e.name, [&](CheckRecord& r) {
      const auto pairs = comparison_pairs(cfg_.seed, e.samples, e.h);
      int bad = 0;
      double worst = kInf;
      std::string d;
      for (const auto& p : pairs) {
        const ComparisonResult c = comparison_check(p);
        const double t = tau(p.u.grid().h());
        worst = std::min(worst, c.worst_slack);
        if (!c.admissible || c.worst_slack < -t) {
          ++bad;
          d += p.label + (c.admissible ? " slack " + num(c.worst_slack) : " inadmissible") + "; ";
        }
      }
      r.measured = bad;
      r.threshold = 0;
      r.detail = std::to_string(pairs.size()) + " pairs, min slack " + num(worst) + (d.empty() ? "" : "; " + d);
    });
  }

  void hessian_checks(const BatteryEntry& e, const GridDomain& gd) {
    hessian_checks(e.name, GridDomain::build(e.spec.geometry, gd.h(), gd.stencil_radius()));
    // The class inclusions only have content in C^2: add a coarse ball there.
    if (gd.n() == 1) {
      Geometry geo;
      geo.n = 2;
      geo.domain = Shape::ball({}, 1.0);
      geo.compact = {Shape::ball({}, 0.3)};
      hessian_checks(e.name + "/c2", GridDomain::build(geo, 1.0 / 8, 1));
    }
  }

  void hessian_checks(const std::string& who, const GridPtr& g) {
    const int n = g->n();
    check("hessian.normalization", who, [&](CheckRecord& r) {
      const ScalarField u = ScalarField::sample(g, [&](const Point& x) { return squared_norm(x, 2 * n); });
      double nf = 1.0;
      for (int k = 2; k <= n; ++k) nf *= k;
      double mx = 0.0;
      for (int p = 1; p <= n; ++p) {
        const MeasureField mu = hessian_density(u, p);
        for (std::size_t i = 0; i < g->size(); ++i) {
          const NodeClass k = g->cls(i);
          if (k == NodeClass::kInterior || k == NodeClass::kCompact) mx = std::max(mx, std::abs(mu.density[i] - nf));
        }
      }
      r.measured = mx;
      r.threshold = 1e-9 * nf;
      r.detail = "max |density(|z|^2) - n!| over p = 1.." + std::to_string(n);
    });
    std::mt19937_64 rng(cfg_.seed ^ 0x6865737369616eULL);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    // Shifted Gram forms B B^T - t I plus a quartic term in the first
    // coordinate: a mix of members and non-members of each class.
    auto random_field = [&]() {
      std::array<double, 16> B{}, A{};
      for (auto& v : B) v = U(rng);
      const double t = 0.4 * (1.0 + U(rng));
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          for (int c = 0; c < 4; ++c) A[4 * a + b] += B[4 * a + c] * B[4 * b + c];
          A[4 * a + b] -= a == b ? t : 0.0;
        }
      const double q = 0.5 * U(rng);
      return ScalarField::sample(g, [A, q, n](const Point& x) {
        double s = 0.0;
        for (int a = 0; a < 2 * n; ++a)
          for (int b = 0; b < 2 * n; ++b) s += A[4 * a + b] * x[a] * x[b];
        return s + q * x[0] * x[0] * x[0] * x[0];
      });
    };
    check("hessian.nesting", who, [&](CheckRecord& r) {
      int bad = 0, members = 0;
      for (int k = 0; k < 16; ++k) {
        const ScalarField u = random_field();
        for (int m1 = 1; m1 < n; ++m1) {
          if (!is_m_subharmonic(u, m1).member) continue;
          ++members;
          for (int m2 = m1 + 1; m2 <= n; ++m2) bad += !is_m_subharmonic(u, m2).member;
        }
      }
      r.measured = bad;
      r.threshold = 0;
      r.detail = std::to_string(members) + " fields in a smaller class";
    });
    check("hessian.sum_stability", who, [&](CheckRecord& r) {
      // p = 1: the class m = n is a convex cone.
      int bad = 0, pairs = 0;
      std::vector<ScalarField> members;
      for (int k = 0; k < 24 && members.size() < 6; ++k) {
        ScalarField u = random_field();
        if (is_m_subharmonic(u, n).member) members.push_back(std::move(u));
      }
      for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b) {
          ++pairs;
          bad += !is_m_subharmonic(members[a].combine(1.0, members[b], 1.0), n).member;
        }
      r.measured = bad;
      r.threshold = 0;
      r.detail = std::to_string(pairs) + " sums of class-" + std::to_string(n) + " fields";
    });
  }

  const SuiteConfig& cfg_;
  SuiteReport& rep_;
};

}  // namespace

const char* to_string(EntryKind k) {
  switch (k) {
    case EntryKind::kRadial: return "radial";
    case EntryKind::kWeighted: return "weighted";
    case EntryKind::kComponents: return "components";
    case EntryKind::kMonotonicity: return "monotonicity";
    case EntryKind::kPolar: return "polar";
    case EntryKind::kComparison: return "comparison";
  }
  return "unknown";
}

std::vector<double> BatteryEntry::levels() const {
  if (!hs.empty()) return hs;
  return {4.0 * h, 2.0 * h, h};
}

const std::vector<std::string>& anchor_table() {
  static const std::vector<std::string> table = {
      "normalization of dd^c",
      "pointwise Hessian inequalities",
      "nesting of the classes",
      "comparison principle",
      "definition of the weighted measure",
      "weighted measure class and its constraints",
      "unweighted specialization",
      "local maximal replacement",
      "maximality off K",
      "boundary limit on regular domains",
      "continuity on regular compacts",
      "monotonicity",
      "capacity identity",
      "infimum definition of capacity",
      "m-capacity",
      "approximation by regular compacts",
      "outer equals inner on compacts",
      "sandwich bounds",
      "polar sets have zero outer capacity",
      "non-polar compacts have positive capacity",
  };
  return table;
}

const std::string& anchor_of(const std::string& check_id) {
  static const std::map<std::string, std::string> m = [] {
    std::map<std::string, std::string> out;
    for (const auto& c : kChecks) out.emplace(c.id, c.anchor);
    return out;
  }();
  auto it = m.find(check_id);
  if (it == m.end()) throw Error(ErrorCode::kInvalidArgument, "unknown check id '" + check_id + "'");
  return it->second;
}

std::vector<std::string> check_ids() {
  std::vector<std::string> ids;
  for (const auto& c : kChecks) ids.push_back(c.id);
  return ids;
}

namespace {

BatteryEntry entry(std::string name, EntryKind kind, CondenserSpec spec, double h) {
  BatteryEntry e;
  e.name = std::move(name);
  e.kind = kind;
  e.spec = std::move(spec);
  e.h = h;
  return e;
}

}  // namespace

SuiteConfig default_suite(std::uint64_t seed, bool with_n2) {
  SuiteConfig cfg;
  cfg.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const Expression minus_one = Expression::constant(-1.0);

  BatteryEntry radial = entry("radial-n1", EntryKind::kRadial, ball_spec(1, 1, {}, 0.5, 1.0, minus_one, 0.0), 1.0 / 128);
  radial.closed_form_tol = 0.02;
  cfg.battery.push_back(radial);

  const Point jitter{0.08 * U(rng), 0.08 * U(rng), 0.0, 0.0};
  const double rk = 0.35 + 0.1 * U(rng);
  BatteryEntry weighted = entry("weighted-n1", EntryKind::kWeighted,
                                ball_spec(1, 1, jitter, rk, 1.0, Expression::parse("-1 + 0.2*x1"), 0.1), 1.0 / 128);
  weighted.hs = {1.0 / 64, 1.0 / 128};
  cfg.battery.push_back(weighted);

  BatteryEntry comps = entry("two-balls-n1", EntryKind::kComponents,
                             ball_spec(1, 1, {-0.35, 0.0}, 0.2, 1.0, Expression::parse("-1 + 0.1*y1"), 0.0), 1.0 / 128);
  comps.spec.geometry.compact.push_back(Shape::ball({0.35 + 0.05 * U(rng), 0.05 * U(rng)}, 0.15));
  comps.hs = {1.0 / 64, 1.0 / 128};
  cfg.battery.push_back(comps);

  BatteryEntry mono = entry("nested-n1", EntryKind::kMonotonicity, ball_spec(1, 1, {}, 0.3, 1.0, minus_one, 0.0), 1.0 / 64);
  mono.samples = 10;
  cfg.battery.push_back(mono);

  BatteryEntry polar = entry("point-n1", EntryKind::kPolar, ball_spec(1, 1, {}, 0.125, 1.0, minus_one, 0.0), 1.0 / 128);
  cfg.battery.push_back(polar);

  BatteryEntry cmp = entry("comparison", EntryKind::kComparison, ball_spec(1, 1, {}, 0.1, 1.0, minus_one, 0.0), 1.0 / 64);
  cmp.samples = 10;
  cfg.battery.push_back(cmp);

  if (with_n2) {
    BatteryEntry lap = entry("radial-n2-m2", EntryKind::kRadial, ball_spec(2, 2, {}, 0.4, 0.9, minus_one, 0.0), 1.0 / 24);
    lap.hs = {1.0 / 12, 1.0 / 16, 1.0 / 24};
    lap.closed_form_tol = 0.07;
    lap.outer = false;
    cfg.battery.push_back(lap);
    BatteryEntry ma = entry("radial-n2-m1", EntryKind::kRadial, ball_spec(2, 1, {}, 0.4, 0.9, minus_one, 0.0), 1.0 / 16);
    ma.hs = {1.0 / 8, 1.0 / 12, 1.0 / 16};
    ma.closed_form_tol = 0.10;
    ma.outer = false;
    cfg.battery.push_back(ma);
  }
  return cfg;
}

nlohmann::json SuiteReport::to_json() const {
  nlohmann::json c = nlohmann::json::array();
  for (const auto& r : checks)
    c.push_back({{"id", r.id},
                 {"anchor", r.anchor},
                 {"subject", r.subject},
                 {"measured", r.measured},
                 {"relation", r.relation},
                 {"threshold", r.threshold},
                 {"status", r.pass ? "PASS" : "FAIL"},
                 {"detail", r.detail}});
  return {{"checks", c},
          {"summary", {{"total", checks.size()}, {"passed", passed}, {"failed", failed}}},
          {"status", pass() ? "PASS" : "FAIL"},
          {"fingerprint", fingerprint}};
}

std::string SuiteReport::table() const {
  std::ostringstream os;
  char line[512];
  std::snprintf(line, sizeof line, "%-30s %-14s %-6s %14s %2s %-12s\n", "check", "subject", "status", "measured", "",
                "threshold");
  os << line;
  for (const auto& r : checks) {
    std::snprintf(line, sizeof line, "%-30s %-14s %-6s %14.6g %2s %-12.6g %s\n", r.id.c_str(), r.subject.c_str(),
                  r.pass ? "PASS" : "FAIL", r.measured, r.relation.c_str(), r.threshold, r.detail.c_str());
    os << line;
  }
  os << passed << " passed, " << failed << " failed\n";
  return os.str();
}

SuiteReport run_suite(const SuiteConfig& cfg) {
  SuiteReport rep;
  rep.fingerprint = {{"seed", cfg.seed}, {"density_scale", cfg.density_scale}, {"solves", nlohmann::json::array()}};
  Runner runner(cfg, rep);
  for (const auto& e : cfg.battery) {
    try {
      runner.run(e);
    } catch (const std::exception& ex) {
      CheckRecord r;
      r.id = "battery.entry";
      r.anchor = "";
      r.subject = e.name;
      r.detail = ex.what();
      rep.checks.push_back(r);
    }
  }
  // Ordered reduction by check id, then subject.
  std::stable_sort(rep.checks.begin(), rep.checks.end(), [](const CheckRecord& a, const CheckRecord& b) {
    return a.id != b.id ? a.id < b.id : a.subject < b.subject;
  });
  for (const auto& r : rep.checks) (r.pass ? rep.passed : rep.failed)++;
  return rep;
}

// ---------------------------------------------------------------------------

std::vector<ComparisonPair> comparison_pairs(std::uint64_t seed, int count, double h) {
  std::mt19937_64 rng(seed ^ 0x636f6d70617265ULL);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<ComparisonPair> out;
  std::map<int, GridPtr> grids;
  auto grid = [&](int n) {
    auto it = grids.find(n);
    if (it != grids.end()) return it->second;
    Geometry geo;
    geo.n = n;
    geo.domain = Shape::ball({}, 1.6);
    geo.compact = {Shape::ball({}, 0.2)};
    // C^2 grids are kept coarse.
    const double hn = n == 1 ? h : std::max(h, 1.0 / 10);
    return grids[n] = GridDomain::build(geo, hn, 1);
  };
  for (int k = 0; k < count; ++k) {
    const int n = (k % 3 == 0) ? 1 : 2;
    const int m = n == 1 ? 1 : (k % 2 ? 1 : 2);
    const bool annulus = (k / 3) % 2 == 1;
    const double e1 = 0.2 * U(rng);  // psh perturbation of u
    const double a = 0.3 * (2 * U(rng) - 1), b = 0.3 * (2 * U(rng) - 1);  // pluriharmonic part
    ComparisonPair p;
    p.n = n;
    p.m = m;
    const GridPtr g = grid(n);
    const int dim = 2 * n;
    auto ph = [a, b, n](const Point& x) {
      double v = a * (x[0] * x[0] - x[1] * x[1]);
      if (n == 2) v += b * (x[0] * x[2] - x[1] * x[3]);
      return v;
    };
    if (!annulus) {
      // u = |z|^2 - d, v = c |z|^2: F is a ball of radius^2 d / (1 - c).
      const double c = 0.2 + 0.5 * U(rng);
      const double f2 = 0.2 + 0.4 * U(rng);
      const double d = f2 * (1.0 - c);
      p.u = ScalarField::sample(g, [=](const Point& x) { return squared_norm(x, dim) - d + e1 * x[0] * x[0] + ph(x); });
      p.v = ScalarField::sample(g, [=](const Point& x) { return c * squared_norm(x, dim) + ph(x); });
      p.label = "ball n=" + std::to_string(n) + " m=" + std::to_string(m);
    } else {
      // u = |z|^4, v = 2|z|^2 - 1 + s: F is the shell (|z|^2 - 1)^2 < s.
      const double s = 0.3 + 0.3 * U(rng);
      p.u = ScalarField::sample(g, [=](const Point& x) {
        const double t = squared_norm(x, dim);
        return t * t + e1 * x[0] * x[0] + ph(x);
      });
      p.v = ScalarField::sample(g, [=](const Point& x) { return 2.0 * squared_norm(x, dim) - 1.0 + s + ph(x); });
      p.label = "shell n=" + std::to_string(n) + " m=" + std::to_string(m);
    }
    out.push_back(std::move(p));
  }
  return out;
}

ComparisonResult comparison_check(const ComparisonPair& pair) {
  ComparisonResult res;
  const GridDomain& g = pair.u.grid();
  pair.u.require_same_grid(pair.v);
  const NodeMask ring = g.boundary_ring();
  NodeMask F(g.size(), 0);
  bool touches = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeClass k = g.cls(i);
    if (k != NodeClass::kInterior && k != NodeClass::kCompact) continue;
    if (pair.u[i] < pair.v[i]) {
      F[i] = 1;
      ++res.f_nodes;
      touches = touches || ring[i];
    }
  }
  const bool members = is_m_subharmonic(pair.u, pair.m).member && is_m_subharmonic(pair.v, pair.m).member;
  res.admissible = members && !touches && res.f_nodes > 0;
  const int p = pair.n - pair.m + 1;
  res.worst_slack = kInf;
  for (int k = 1; k <= p; ++k) {
    const double mu = integrate(hessian_density(pair.u, k).density, F);
    const double mv = integrate(hessian_density(pair.v, k).density, F);
    res.mass_u.push_back(mu);
    res.mass_v.push_back(mv);
    res.worst_slack = std::min(res.worst_slack, mu - mv);
  }
  return res;
}

}  // namespace mscap
