#include "mscap/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <variant>

#include "mscap/error.hpp"

namespace mscap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json table_json(const std::vector<RefinementRow>& rows) {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& r : rows) t.push_back({{"h", r.h}, {"value", r.value}});
  return t;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double mass_over_domain(const ScalarField& u, int p, DensityForm form) {
  return integrate(hessian_density(u, p, form).density, Region::kDomain);
}

}  // namespace

const char* to_string(CapacityMethod m) {
  switch (m) {
    case CapacityMethod::kMeasureIntegral: return "MEASURE_INTEGRAL";
    case CapacityMethod::kDirectOracle: return "DIRECT_ORACLE";
    case CapacityMethod::kOuter: return "OUTER";
  }
  return "UNKNOWN";
}

RefinementSummary summarize_refinement(std::vector<RefinementRow> rows, double assumed_order) {
  RefinementSummary s;
  s.rows = std::move(rows);
  s.order = kNaN;
  const std::size_t k = s.rows.size();
  if (k == 0) {
    s.extrapolated = kNaN;
    return s;
  }
  s.extrapolated = s.rows.back().value;
  if (k < 2) return s;
  const auto& b = s.rows[k - 2];
  const auto& c = s.rows[k - 1];
  const double ratio = b.h / c.h;
  double q = assumed_order;
  if (k >= 3) {
    const auto& a = s.rows[k - 3];
    const double d1 = a.value - b.value, d2 = b.value - c.value;
    if (d1 != 0.0 && d2 != 0.0) {
      if (std::abs(a.h / b.h - ratio) <= 1e-12 * ratio) {
        s.order = std::log(std::abs(d1 / d2)) / std::log(ratio);
      } else if (d1 / d2 > 0.0) {
        // Unequal ratios: solve (ha^q - hb^q) / (hb^q - hc^q) = d1 / d2 for q.
        const double target = d1 / d2;
        auto f = [&](double t) {
          return (std::pow(a.h, t) - std::pow(b.h, t)) / (std::pow(b.h, t) - std::pow(c.h, t)) - target;
        };
        double lo = 1e-3, hi = 12.0;
        if (f(lo) * f(hi) < 0.0) {
          for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
          }
          s.order = 0.5 * (lo + hi);
        }
      }
      if (s.order > 0.0 && std::isfinite(s.order)) q = s.order;
    }
  }
  const double f = std::pow(ratio, q);
  if (f > 1.0) s.extrapolated = c.value + (c.value - b.value) / (f - 1.0);
  return s;
}

nlohmann::json CapacityReport::to_json(bool with_nodes) const {
  nlohmann::json j = {{"method", to_string(method)},
                      {"value", value},
                      {"h", h},
                      {"mass_on_K", mass_on_k},
                      {"mass_on_collar", mass_on_collar},
                      {"lower_confidence", lower_confidence},
                      {"refinement_table", table_json(refinement.rows)},
                      {"extrapolated", refinement.extrapolated},
                      {"order", refinement.order},
                      {"diagnostics", diagnostics},
                      {"spec", spec.to_json()}};
  if (with_nodes) j["node_mass"] = node_mass;
  return j;
}

CapacityReport capacity_from_envelope(const EnvelopeSolution& sol, const CapacityOptions& opt) {
  const Condenser& c = *sol.condenser;
  const GridDomain& g = c.grid();
  const int width = opt.collar < 0 ? g.stencil_radius() : opt.collar;
  const MeasureField mu = hessian_density(sol.omega, c.p(), opt.form);
  const NodeMask sel = g.compact_with_collar(width);

  CapacityReport rep;
  rep.method = CapacityMethod::kMeasureIntegral;
  rep.h = g.h();
  rep.spec = c.spec();
  rep.node_mass.assign(g.size(), 0.0);
  const double vol = g.cell_volume();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!sel[i]) continue;
    const double w = opt.density_scale * mu.density[i] * vol;
    rep.node_mass[i] = w;
    if (g.cls(i) == NodeClass::kCompact)
      rep.mass_on_k += w;
    else
      rep.mass_on_collar += w;
  }
  rep.value = rep.mass_on_k + rep.mass_on_collar;
  rep.refinement = summarize_refinement({{rep.h, rep.value}});

  const RegularityReport reg = regularity_report(sol);
  rep.lower_confidence = !reg.regular;
  rep.diagnostics = {{"iterations", sol.iterations},
                     {"final_update", sol.final_update},
                     {"relaxation", sol.relaxation},
                     {"seconds", sol.seconds},
                     {"maximality_residual", sol.maximality_residual},
                     {"boundary_residual", sol.boundary_residual},
                     {"regularity_max_gap", reg.max_gap},
                     {"regularity_tol", reg.tol},
                     {"irregular_nodes", reg.failing.size()},
                     {"collar_width", width},
                     {"density_form", opt.form == DensityForm::kConservative ? "conservative" : "pointwise"},
                     {"nodes", g.size()},
                     {"compact_nodes", g.count(NodeClass::kCompact)},
                     {"interior_nodes", g.count(NodeClass::kInterior)},
                     {"boundary_nodes", g.count(NodeClass::kBoundary)},
                     {"fitted_nodes", sol.plan->fitted_node_count()}};
  return rep;
}

CapacityReport capacity_via_measure(const CondenserSpec& spec, const CapacityOptions& opt) {
  return capacity_from_envelope(solve_envelope(spec, opt.solver), opt);
}

CapacityReport refinement_sweep(const CondenserSpec& spec, const CapacityOptions& opt,
                                const std::vector<double>& hs) {
  if (hs.empty()) throw Error(ErrorCode::kInvalidArgument, "refinement sweep needs at least one h");
  std::vector<RefinementRow> rows;
  CapacityReport last;
  nlohmann::json levels = nlohmann::json::array();
  for (double h : hs) {
    CapacityOptions o = opt;
    o.solver.h = h;
    last = capacity_via_measure(spec, o);
    rows.push_back({h, last.value});
    levels.push_back(last.diagnostics);
  }
  last.refinement = summarize_refinement(std::move(rows));
  last.diagnostics["levels"] = std::move(levels);
  return last;
}

// ---------------------------------------------------------------------------

nlohmann::json OracleReport::to_json() const {
  nlohmann::json c = nlohmann::json::array();
  for (const auto& r : candidates)
    c.push_back({{"label", r.label},
                 {"certified", r.certified},
                 {"reason", r.reason},
                 {"mass", r.mass},
                 {"worst_violation", r.worst_violation}});
  return {{"method", to_string(CapacityMethod::kDirectOracle)},
          {"value", value},
          {"argmin", argmin},
          {"measure_value", measure_value},
          {"gap", gap},
          {"candidates", c}};
}

OracleReport capacity_direct_oracle(const EnvelopeSolution& sol, const std::vector<Candidate>& family,
                                    double measure_value, const OracleOptions& opt) {
  const Condenser& c = *sol.condenser;
  const GridDomain& g = c.grid();
  const double delta = c.delta();
  OracleReport rep;
  rep.measure_value = measure_value;
  rep.value = std::numeric_limits<double>::infinity();

  for (const auto& cand : family) {
    CandidateRecord rec;
    rec.label = cand.label;
    cand.u.require_same_grid(sol.omega);
    double on_k = 0.0, on_rim = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const NodeClass k = g.cls(i);
      if (k == NodeClass::kCompact) on_k = std::max(on_k, cand.u[i] - c.psi_nodes()[i]);
      if (k == NodeClass::kBoundary) on_rim = std::max(on_rim, delta - cand.u[i]);
    }
    const double tol = opt.membership_tol > 0.0 ? opt.membership_tol : default_membership_tol(cand.u);
    const MembershipReport mem = is_m_subharmonic(cand.u, c.spec().m, tol);
    rec.worst_violation = mem.worst_violation;
    if (on_k > opt.constraint_tol) {
      rec.reason = "exceeds psi on K by " + num(on_k);
    } else if (on_rim > opt.constraint_tol) {
      rec.reason = "below delta on the boundary layer by " + num(on_rim);
    } else if (!mem.member) {
      rec.reason = "sigma_" + std::to_string(mem.worst_k) + " violation " + num(mem.worst_violation);
    } else {
      rec.certified = true;
    }
    rec.mass = mass_over_domain(cand.u, c.p(), opt.form);
    if (rec.certified && rec.mass < rep.value) {
      rep.value = rec.mass;
      rep.argmin = rec.label;
    }
    rep.candidates.push_back(std::move(rec));
  }
  if (rep.argmin.empty())
    throw Error(ErrorCode::kEmptyFamily, "no candidate passed the membership and constraint checks");
  rep.gap = rep.value - measure_value;
  return rep;
}

namespace {

// Concentric ball condenser with a constant weight, or false.
bool radial_setting(const Condenser& c, Point& center, double& r, double& R, double& value) {
  const CondenserSpec& s = c.spec();
  if (s.geometry.compact.size() != 1 || !s.psi.is_constant()) return false;
  const auto* d = std::get_if<Ball>(&s.geometry.domain.variant());
  const auto* k = std::get_if<Ball>(&s.geometry.compact[0].variant());
  if (!d || !k || d->center != k->center || !(k->radius > 0.0)) return false;
  center = d->center;
  r = k->radius;
  R = d->radius;
  value = s.psi.evaluate(Point{});
  return true;
}

// Smallest eta such that u + eta |z - c|^2 passes the sigma test, found by doubling.
ScalarField certify_with_quadratic(const ScalarField& u, int m, const Point& center, double rim2) {
  const GridDomain& g = u.grid();
  const double tol = default_membership_tol(u);
  ScalarField out = u;
  double eta = 0.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    const MembershipReport rep = is_m_subharmonic(out, m, tol);
    if (rep.member) return out;
    eta = eta == 0.0 ? std::max(rep.worst_violation, 1e-12) : 2.0 * eta;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.cls(i) == NodeClass::kExterior) continue;
      Point x = g.coords(i);
      for (int a = 0; a < g.dim(); ++a) x[a] -= center[a];
      out[i] = u[i] + eta * (squared_norm(x, g.dim()) - rim2);
    }
  }
  return out;
}

}  // namespace

std::vector<Candidate> standard_family(const EnvelopeSolution& sol, int count) {
  const Condenser& c = *sol.condenser;
  const GridDomain& g = c.grid();
  const double delta = c.delta();
  const int dim = g.dim();
  std::vector<Candidate> fam;
  fam.push_back({"envelope", sol.omega});
  if (count <= 1) return fam;

  Point center{};
  double r = 0.0, R = 0.0, cval = 0.0;
  const bool radial = radial_setting(c, center, r, R, cval);
  if (!radial) {
    // Centroid of the K nodes as the bump center.
    std::size_t nk = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.cls(i) != NodeClass::kCompact) continue;
      const Point x = g.coords(i);
      for (int a = 0; a < dim; ++a) center[a] += x[a];
      ++nk;
    }
    for (int a = 0; a < dim; ++a) center[a] /= static_cast<double>(nk);
  }
  // Nearest BOUNDARY node and farthest K node from the center: a bump
  // eta (|z - c|^2 - rim2) is <= 0 on K and >= 0 on the boundary layer.
  double rim2 = std::numeric_limits<double>::infinity(), k2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeClass k = g.cls(i);
    if (k != NodeClass::kBoundary && k != NodeClass::kCompact) continue;
    Point x = g.coords(i);
    for (int a = 0; a < dim; ++a) x[a] -= center[a];
    const double d2 = squared_norm(x, dim);
    if (k == NodeClass::kBoundary)
      rim2 = std::min(rim2, d2);
    else
      k2 = std::max(k2, d2);
  }
  const bool bumps = k2 <= rim2;

  auto field_from = [&](const std::function<double(std::size_t)>& f) {
    ScalarField u(c.grid_ptr(), kNaN);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.cls(i) != NodeClass::kExterior) u[i] = f(i);
    return u;
  };
  auto add = [&](std::string label, ScalarField u) {
    if (static_cast<int>(fam.size()) < count) fam.push_back({std::move(label), std::move(u)});
  };

  // Truncated radial kernels max(c, delta + A (g(t) - g(R))), A >= A0.
  if (radial) {
    const bool log_kernel = g.n() == 1 || c.p() == 2;
    auto kern = [&](double t) { return log_kernel ? std::log(t) : -1.0 / (t * t); };
    const double A0 = (delta - cval) / (kern(R) - kern(r));
    for (double s : {1.0, 1.02, 1.05, 1.1, 1.2, 1.4}) {
      const double A = s * A0;
      ScalarField u = field_from([&](std::size_t i) {
        Point x = g.coords(i);
        for (int a = 0; a < dim; ++a) x[a] -= center[a];
        const double t = std::sqrt(squared_norm(x, dim));
        if (t <= r) return cval;
        return std::max(cval, delta + A * (kern(t) - kern(R)));
      });
      add("kernel A=" + num(s) + "*A0", certify_with_quadratic(u, c.spec().m, center, rim2));
    }
  }

  // delta + s (omega - delta), s >= 1: still below psi on K, equal to delta on the rim.
  for (double s : {1.01, 1.03, 1.06, 1.1, 1.2, 1.35, 1.5}) {
    add("scaled s=" + num(s),
        field_from([&](std::size_t i) { return delta + s * (sol.omega[i] - delta); }));
  }

  // omega + eta (|z - c|^2 - rim2), eta > 0.
  if (bumps) {
    const double span = delta - c.psi_min();
    const double base = span / std::max(rim2, 1e-300);
    for (double f : {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0}) {
      const double eta = f * base;
      add("bump eta=" + num(eta), field_from([&](std::size_t i) {
            Point x = g.coords(i);
            for (int a = 0; a < dim; ++a) x[a] -= center[a];
            return sol.omega[i] + eta * (squared_norm(x, dim) - rim2);
          }));
    }
  }
  return fam;
}

// ---------------------------------------------------------------------------

OuterReport outer_capacity(const CondenserSpec& spec, const CapacityOptions& opt,
                           std::vector<double> eps_factors) {
  if (eps_factors.empty()) throw Error(ErrorCode::kInvalidArgument, "outer capacity needs shrink levels");
  std::sort(eps_factors.begin(), eps_factors.end(), std::greater<>());
  const double h = opt.solver.h;
  OuterReport out;
  nlohmann::json levels = nlohmann::json::array();
  for (double f : eps_factors) {
    if (!(f > 0.0)) throw Error(ErrorCode::kInvalidArgument, "shrink factors must be positive");
    CondenserSpec s = spec;
    for (auto& k : s.geometry.compact) k = k.fattened(f * h);
    CapacityReport r = capacity_via_measure(s, opt);
    out.levels.push_back({f * h, r.value});
    levels.push_back({{"eps", f * h}, {"value", r.value}, {"diagnostics", r.diagnostics}});
  }
  const double t = tau(h);
  for (std::size_t i = 1; i < out.levels.size(); ++i) {
    const double rise = out.levels[i].value - out.levels[i - 1].value;
    out.monotonicity_slack = std::max(out.monotonicity_slack, rise);
    if (rise > t)
      throw Error(ErrorCode::kNonmonotoneSequence,
                  "capacity rises by " + num(rise) + " from eps=" +
                      num(out.levels[i - 1].eps) + " to eps=" + num(out.levels[i].eps));
  }
  out.last_value = out.levels.back().value;
  // Linear extrapolation in eps from the two narrowest neighbourhoods.
  if (out.levels.size() >= 2) {
    const auto& a = out.levels[out.levels.size() - 2];
    const auto& b = out.levels.back();
    out.extrapolated = b.value - b.eps * (a.value - b.value) / (a.eps - b.eps);
  } else {
    out.extrapolated = out.last_value;
  }

  CapacityReport& rep = out.report;
  rep.method = CapacityMethod::kOuter;
  rep.value = std::max(0.0, out.extrapolated);
  rep.h = h;
  rep.spec = spec;
  rep.refinement.rows.clear();
  for (const auto& l : out.levels) rep.refinement.rows.push_back({l.eps, l.value});
  rep.refinement.extrapolated = out.extrapolated;
  rep.refinement.order = 1.0;
  rep.diagnostics = {{"levels", levels},
                     {"last_value", out.last_value},
                     {"monotonicity_slack", out.monotonicity_slack},
                     {"tau", t}};
  return out;
}

CondenserSpec unweighted(const CondenserSpec& spec) {
  CondenserSpec s = spec;
  s.psi = Expression::constant(-1.0);
  s.delta = 0.0;
  return s;
}

UnweightedReport unweighted_capacity(const Geometry& geometry, int m, const CapacityOptions& opt,
                                     bool with_outer) {
  CondenserSpec s;
  s.geometry = geometry;
  s.m = m;
  UnweightedReport rep;
  rep.inner = capacity_via_measure(s, opt);
  if (with_outer) {
    rep.outer = outer_capacity(s, opt);
    rep.relative_difference =
        std::abs(rep.outer.report.value - rep.inner.value) / std::max(rep.inner.value, 1e-300);
    rep.inner.diagnostics["outer_value"] = rep.outer.report.value;
    rep.inner.diagnostics["outer_relative_difference"] = rep.relative_difference;
  }
  return rep;
}

nlohmann::json PolarBoundsReport::to_json() const {
  return {{"weighted", weighted}, {"unweighted", unweighted}, {"C1", c1},        {"C2", c2},
          {"lower", lower},       {"upper", upper},           {"tau", tau},      {"lower_ok", lower_ok},
          {"upper_ok", upper_ok}, {"pass", pass}};
}

PolarBoundsReport polar_bounds_check(const CondenserSpec& spec, const CapacityOptions& opt) {
  PolarBoundsReport rep;
  const auto cond = std::make_shared<const Condenser>(spec, opt.solver.condenser_options());
  const int p = spec.p();
  rep.c1 = std::pow(spec.delta - cond->psi_sup(), p);
  rep.c2 = std::pow(spec.delta - cond->psi_min(), p);
  rep.weighted = capacity_from_envelope(solve_envelope(cond, opt.solver), opt).value;
  rep.unweighted = capacity_via_measure(unweighted(spec), opt).value;
  rep.lower = rep.c1 * rep.unweighted;
  rep.upper = rep.c2 * rep.unweighted;
  rep.tau = tau(opt.solver.h);
  rep.lower_ok = rep.weighted >= rep.lower - rep.tau;
  rep.upper_ok = rep.weighted <= rep.upper + rep.tau;
  rep.pass = rep.lower_ok && rep.upper_ok;
  return rep;
}

PolarTrendReport polar_trend(const CondenserSpec& spec, const Point& center,
                             const std::vector<double>& eps, const CapacityOptions& opt) {
  PolarTrendReport rep;
  if (eps.size() < 2) throw Error(ErrorCode::kInvalidArgument, "polar trend needs two radii or more");
  for (double e : eps) {
    CondenserSpec s = spec;
    s.geometry.compact = {Shape::ball(center, e)};
    rep.levels.push_back({e, capacity_via_measure(s, opt).value});
  }
  std::sort(rep.levels.begin(), rep.levels.end(),
            [](const OuterLevel& a, const OuterLevel& b) { return a.eps > b.eps; });
  // C = a x with x = 1 / log(1/eps), then C = a2 x + b2.
  double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
  const double k = static_cast<double>(rep.levels.size());
  for (const auto& l : rep.levels) {
    const double x = 1.0 / std::log(1.0 / l.eps);
    sxx += x * x;
    sxy += x * l.value;
    sx += x;
    sy += l.value;
  }
  rep.a = sxy / sxx;
  for (const auto& l : rep.levels) {
    const double x = 1.0 / std::log(1.0 / l.eps);
    rep.fit_residual = std::max(rep.fit_residual, std::abs(l.value - rep.a * x) / std::abs(l.value));
  }
  const double det = k * sxx - sx * sx;
  rep.a2 = (k * sxy - sx * sy) / det;
  rep.b2 = (sy - rep.a2 * sx) / k;
  rep.limit_ratio = std::abs(rep.b2) / rep.levels.front().value;
  rep.pass = rep.fit_residual <= 0.1 && rep.limit_ratio <= 0.1;
  return rep;
}

}  // namespace mscap
