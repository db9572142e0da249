#include "mscap/envelope.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include "mscap/error.hpp"

namespace mscap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lattice complex lines through the origin with generators in the max-norm
// box of radius R, one representative (the shortest) per line.
std::vector<MultiIndex> complex_lines(int radius) {
  std::vector<MultiIndex> all;
  for (int a = -radius; a <= radius; ++a)
    for (int b = -radius; b <= radius; ++b)
      for (int c = -radius; c <= radius; ++c)
        for (int d = -radius; d <= radius; ++d)
          if (a || b || c || d) all.push_back({a, b, c, d});
  auto norm2 = [](const MultiIndex& v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]; };
  std::stable_sort(all.begin(), all.end(),
                   [&](const MultiIndex& x, const MultiIndex& y) { return norm2(x) < norm2(y); });
  std::vector<MultiIndex> lines;
  for (const auto& v : all) {
    const std::complex<double> a(v[0], v[1]), b(v[2], v[3]);
    bool dup = false;
    for (const auto& l : lines) {
      const std::complex<double> a2(l[0], l[1]), b2(l[2], l[3]);
      if (std::abs(a * b2 - b * a2) < 1e-9) {
        dup = true;
        break;
      }
    }
    if (!dup) lines.push_back(v);
  }
  return lines;
}

}  // namespace

// ---------------------------------------------------------------------------

StencilPlan::StencilPlan(const Condenser& c, bool fit_compact, bool fit_domain) {
  const GridDomain& g = c.grid();
  const int dim = g.dim();
  const int p = c.p();
  boundary_value_ = c.delta();

  if (p == 1) {
    groups_ = 1;
    per_group_ = 2 * dim;
    for (int a = 0; a < dim; ++a) {
      MultiIndex e{0, 0, 0, 0};
      e[a] = 1;
      dirs_.push_back(e);
      e[a] = -1;
      dirs_.push_back(e);
    }
  } else {
    per_group_ = 4;
    for (const auto& xi : complex_lines(g.stencil_radius())) {
      const MultiIndex ixi{-xi[1], xi[0], -xi[3], xi[2]};
      dirs_.push_back(xi);
      dirs_.push_back({-xi[0], -xi[1], -xi[2], -xi[3]});
      dirs_.push_back(ixi);
      dirs_.push_back({-ixi[0], -ixi[1], -ixi[2], -ixi[3]});
      ++groups_;
    }
  }
  for (const auto& d : dirs_) offs_.push_back(g.offset(d));
  inv_per_group_ = 1.0 / per_group_;

  position_.assign(g.size(), -1);
  fit_begin_.push_back(0);
  const double h = g.h();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeClass cls = g.cls(i);
    if (cls != NodeClass::kInterior && cls != NodeClass::kCompact) continue;
    position_[i] = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(i);
    psi_.push_back(cls == NodeClass::kCompact ? c.psi_nodes()[i] : kInf);
    if (cls == NodeClass::kInterior && (fit_compact || fit_domain)) {
      const Point x = g.coords(i);
      bool any = false;
      std::vector<double> theta(dirs_.size(), 1.0), add(dirs_.size(), 0.0);
      std::vector<char> fixed(dirs_.size(), 0), touched(dirs_.size(), 0);
      for (std::size_t s = 0; s < dirs_.size(); ++s) {
        const std::size_t y = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + offs_[s]);
        const NodeClass cy = g.cls(y);
        Point v{};
        for (int a = 0; a < dim; ++a) v[a] = dirs_[s][a] * h;
        if (cy == NodeClass::kCompact && fit_compact) {
          const double t = g.geometry().compact_entry(x, v);
          if (t >= 1.0 - 1e-12) continue;
          Point q{};
          for (int a = 0; a < dim; ++a) q[a] = x[a] + t * v[a];
          try {
            add[s] = c.psi_at(q) - c.psi_nodes()[y];
          } catch (const Error& e) {
            throw Error(ErrorCode::kConstraintError,
                        std::string("psi cannot be evaluated on the boundary of K (") + e.what() + ")");
          }
          theta[s] = std::max(t, 1e-6);
          touched[s] = 1;
        } else if ((cy == NodeClass::kBoundary || cy == NodeClass::kExterior) && fit_domain) {
          const double t = g.geometry().domain_exit(x, v);
          if (t >= 1.0 - 1e-12) continue;
          theta[s] = std::max(t, 1e-6);
          add[s] = boundary_value_;
          fixed[s] = 1;
          touched[s] = 1;
        }
      }
      for (std::size_t s = 0; s < dirs_.size(); s += 2) {
        if (!touched[s] && !touched[s + 1]) continue;
        // Shortley-Weller weights for the uneven pair; a fixed point enters
        // only through the constant term.
        const double span = theta[s] + theta[s + 1];
        const double w0 = 1.0 / (theta[s] * span), w1 = 1.0 / (theta[s + 1] * span);
        FittedPair fp{static_cast<std::uint16_t>(s / 2), fixed[s] ? 0.0 : w0, fixed[s + 1] ? 0.0 : w1,
                      w0 * add[s] + w1 * add[s + 1], w0 + w1};
        fitted_.push_back(fp);
        any = true;
      }
      if (any) ++fitted_nodes_;
    }
    fit_begin_.push_back(static_cast<std::uint32_t>(fitted_.size()));
  }
}

std::vector<MultiIndex> StencilPlan::group_offsets(int g) const {
  return {dirs_.begin() + g * per_group_, dirs_.begin() + (g + 1) * per_group_};
}

double StencilPlan::candidate_at(const double* u, std::size_t q) const {
  const std::size_t i = nodes_[q];
  const double* ui = u + i;
  const int S = per_group_;
  if (fit_begin_[q] == fit_begin_[q + 1]) {
    if (groups_ == 1) {
      double sum = 0.0;
      for (int k = 0; k < S; ++k) sum += ui[offs_[k]];
      return sum * inv_per_group_;
    }
    double best = kInf;
    const std::ptrdiff_t* o = offs_.data();
    for (int g = 0; g < groups_; ++g, o += 4) best = std::min(best, (ui[o[0]] + ui[o[1]]) + (ui[o[2]] + ui[o[3]]));
    return 0.25 * best;
  }
  // Pairs per group and the first pair index past group g.
  const int P = S / 2;
  const FittedPair* fp = fitted_.data() + fit_begin_[q];
  const FittedPair* const fpe = fitted_.data() + fit_begin_[q + 1];
  double best = kInf;
  for (int g = 0; g < groups_; ++g) {
    const std::ptrdiff_t* o = offs_.data() + g * S;
    const int end = (g + 1) * P;
    if (fp == fpe || fp->pair >= end) {
      double sum = 0.0;
      for (int k = 0; k < S; ++k) sum += ui[o[k]];
      best = std::min(best, sum * inv_per_group_);
      continue;
    }
    double num = 0.0, den = 0.0;
    for (int j = g * P; j < end; ++j) {
      const std::ptrdiff_t* oj = offs_.data() + 2 * j;
      if (fp != fpe && fp->pair == j) {
        num += fp->c0 * ui[oj[0]] + fp->c1 * ui[oj[1]] + fp->add;
        den += fp->den;
        ++fp;
      } else {
        num += 0.5 * (ui[oj[0]] + ui[oj[1]]);
        den += 1.0;
      }
    }
    best = std::min(best, num / den);
  }
  return best;
}

double StencilPlan::candidate(const std::vector<double>& u, std::size_t i) const {
  const std::int32_t q = position_.at(i);
  if (q < 0) throw Error(ErrorCode::kInvalidArgument, "node is not an INTERIOR or COMPACT_K node");
  return candidate_at(u.data(), static_cast<std::size_t>(q));
}

// ---------------------------------------------------------------------------

class EnvelopeSolver {
 public:
  // Symmetric projected SOR over the listed plan positions; returns sweeps used.
  static long run(const StencilPlan& plan, std::vector<double>& u, const std::vector<std::size_t>& order,
                  double w, double tol, long max_sweeps, double& last, long stall = 0, bool armed = false) {
    double* up = u.data();
    double best = kInf;
    long best_it = 0;
    for (long it = 0; it < max_sweeps; ++it) {
      double mx = 0.0;
      auto body = [&](std::size_t q) {
        const std::size_t i = plan.nodes_[q];
        const double c = plan.candidate_at(up, q);
        double nv = up[i] + w * (c - up[i]);
        if (plan.psi_[q] < nv) nv = plan.psi_[q];
        mx = std::max(mx, std::abs(nv - up[i]));
        up[i] = nv;
      };
      if (it % 2 == 0)
        for (std::size_t q : order) body(q);
      else
        for (auto r = order.rbegin(); r != order.rend(); ++r) body(*r);
      last = mx;
      if (mx < tol) return it + 1;
      if (mx < 0.5 * best) {
        best = mx;
        best_it = it;
      } else if (stall > 0 && (armed || mx < 1e4 * tol) && it - best_it > stall) {
        return it + 1;
      }
    }
    return -1;
  }

  // Over-relaxed sweeps down to the round-off floor of the relaxed iteration,
  // then plain Gauss-Seidel sweeps until the update test holds.
  static long solve(const StencilPlan& plan, std::vector<double>& u,
                    const std::vector<std::size_t>& order, double w, double tol, long max_sweeps,
                    double scale, double& last) {
    long used = 0;
    if (w != 1.0) {
      // Stop relaxing once the update has not halved for a while.
      const double floor = std::max(tol, 16.0 * std::numeric_limits<double>::epsilon() *
                                             std::max(1.0, std::abs(scale)));
      const long stall = std::max<long>(50, static_cast<long>(order.size() > 0 ? 8.0 / (1.0 - w / 2.0) : 50));
      const long r = run(plan, u, order, w, floor, max_sweeps, last, stall, plan.groups_ > 1);
      if (r < 0) return -1;
      used = r;
    }
    const long r = run(plan, u, order, 1.0, tol, max_sweeps - used, last);
    return r < 0 ? -1 : used + r;
  }

  static const std::vector<std::size_t>& nodes(const StencilPlan& p) { return p.nodes_; }
  static const std::vector<double>& psi(const StencilPlan& p) { return p.psi_; }
  static std::int32_t position(const StencilPlan& p, std::size_t i) { return p.position_[i]; }
  static double candidate(const StencilPlan& p, const double* u, std::size_t q) {
    return p.candidate_at(u, q);
  }
};

double default_relaxation(const Condenser& c) {
  const GridDomain& g = c.grid();
  Point lo, hi;
  g.geometry().domain.bounds(g.dim(), lo, hi);
  double L = 0.0;
  for (int a = 0; a < g.dim(); ++a) L = std::max(L, hi[a] - lo[a]);
  const double s = std::sin(2.0 * std::numbers::pi * g.h() / L);
  if (c.p() == 1) return 2.0 / (1.0 + s);
  // Over-relaxing the min over lines makes the active line flip between
  // sweeps; plain Gauss-Seidel is faster there.
  return 1.0;
}

EnvelopeSolution solve_envelope(std::shared_ptr<const Condenser> c, const SolverOptions& opt,
                                const ScalarField* initial) {
  const auto t0 = std::chrono::steady_clock::now();
  const GridDomain& g = c->grid();
  const bool fit_domain = opt.fit_domain < 0 ? c->p() >= 2 : opt.fit_domain > 0;
  auto plan = std::make_shared<StencilPlan>(*c, opt.fit_compact, fit_domain);

  EnvelopeSolution sol;
  sol.condenser = c;
  sol.plan = plan;
  const double delta = c->delta();
  if (initial) {
    initial->require_same_grid(ScalarField(c->grid_ptr()));
    sol.omega = *initial;
  } else {
    sol.omega = ScalarField(c->grid_ptr(), delta);
  }
  std::vector<double>& u = sol.omega.mutable_values();
  const auto& nodes = EnvelopeSolver::nodes(*plan);
  const auto& psi = EnvelopeSolver::psi(*plan);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.cls(i) == NodeClass::kBoundary) u[i] = delta;
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    double& v = u[nodes[q]];
    if (!initial) v = std::min(delta, psi[q]);
    v = std::min(v, psi[q]);
  }

  // A warm start is assumed close to the fixed point: relaxing it would only
  // stir the last digits.
  const double w = opt.relaxation > 0.0 ? opt.relaxation : initial ? 1.0 : default_relaxation(*c);
  if (!(w > 0.0 && w < 2.0)) throw Error(ErrorCode::kInvalidArgument, "relaxation must lie in (0, 2)");
  const long max_sweeps = opt.max_sweeps > 0 ? opt.max_sweeps : (g.n() == 1 ? 100000 : 10000);
  const double tol = opt.epsilon * g.h() * g.h();

  std::vector<std::size_t> order(nodes.size());
  for (std::size_t q = 0; q < order.size(); ++q) order[q] = q;
  long used = EnvelopeSolver::solve(*plan, u, order, w, tol, max_sweeps, delta, sol.final_update);
  sol.relaxation = w;
  if (used < 0) {
    std::ostringstream os;
    os.precision(6);
    os << "no fixed point after " << max_sweeps << " sweeps (final update " << sol.final_update
       << ", threshold " << tol << ")";
    throw Error(ErrorCode::kNoConvergence, os.str());
  }
  sol.iterations = used;

  sol.obstacle_active.assign(g.size(), 0);
  const double scale = std::max(1.0, std::abs(delta - c->psi_min()));
  for (std::size_t q = 0; q < nodes.size(); ++q)
    if (psi[q] < kInf && u[nodes[q]] >= psi[q] - 1e-9 * scale) sol.obstacle_active[nodes[q]] = 1;

  sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  sol.maximality_residual = maximality_residual(sol);
  sol.boundary_residual = boundary_residual(sol);
  return sol;
}

EnvelopeSolution solve_envelope(const CondenserSpec& spec, const SolverOptions& opt) {
  return solve_envelope(std::make_shared<const Condenser>(spec, opt.condenser_options()), opt);
}

RegularityReport regularity_report(const EnvelopeSolution& sol, double tol) {
  const Condenser& c = *sol.condenser;
  RegularityReport rep;
  rep.tol = tol > 0.0 ? tol : 0.1 * (c.delta() - c.psi_min());
  rep.gap = ScalarField(c.grid_ptr(), std::numeric_limits<double>::quiet_NaN());
  const double* u = sol.omega.values().data();
  const auto& nodes = EnvelopeSolver::nodes(*sol.plan);
  const auto& psi = EnvelopeSolver::psi(*sol.plan);
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    if (!(psi[q] < kInf)) continue;
    const std::size_t i = nodes[q];
    const double free_value = EnvelopeSolver::candidate(*sol.plan, u, q);
    const double gap = std::max({psi[q] - u[i], free_value - psi[q], 0.0});
    rep.gap[i] = gap;
    rep.max_gap = std::max(rep.max_gap, gap);
    if (gap >= rep.tol) rep.failing.push_back(i);
  }
  rep.regular = rep.failing.empty();
  return rep;
}

double maximality_residual(const EnvelopeSolution& sol, DensityForm form) {
  const GridDomain& g = sol.omega.grid();
  const NodeMask core = g.free_core(2);
  const MeasureField mu = hessian_density(sol.omega, sol.condenser->p(), form);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (core[i]) s += std::abs(mu.density[i]);
  return s * g.cell_volume();
}

double boundary_residual(const EnvelopeSolution& sol) {
  const GridDomain& g = sol.omega.grid();
  const NodeMask ring = g.boundary_ring();
  const double delta = sol.condenser->delta();
  double r = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (ring[i]) r = std::max(r, std::abs(sol.omega[i] - delta));
  return r;
}

FixedPointResidual fixed_point_residual(const EnvelopeSolution& sol) {
  FixedPointResidual r;
  const double* u = sol.omega.values().data();
  const auto& nodes = EnvelopeSolver::nodes(*sol.plan);
  const auto& psi = EnvelopeSolver::psi(*sol.plan);
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const double v = u[nodes[q]];
    const double c = EnvelopeSolver::candidate(*sol.plan, u, q);
    if (psi[q] < kInf) {
      r.obstacle = std::max(r.obstacle, v - psi[q]);
      // At K nodes the value may sit below the candidate only where it equals psi.
      r.free_nodes = std::max(r.free_nodes, std::abs(v - std::min(c, psi[q])));
    } else {
      r.free_nodes = std::max(r.free_nodes, std::abs(v - c));
    }
  }
  return r;
}

ScalarField local_maximal_replacement(const EnvelopeSolution& sol, const Point& center,
                                      double radius, std::size_t* replaced) {
  const GridDomain& g = sol.omega.grid();
  const double delta = sol.condenser->delta();
  ScalarField out = sol.omega;
  std::vector<double>& u = out.mutable_values();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeClass cls = g.cls(i);
    if (cls == NodeClass::kExterior || cls == NodeClass::kBoundary) continue;
    const Point x = g.coords(i);
    double d2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) d2 += (x[a] - center[a]) * (x[a] - center[a]);
    if (!(d2 < radius * radius)) continue;
    if (cls == NodeClass::kCompact)
      throw Error(ErrorCode::kInvalidArgument, "replacement ball meets K");
    const std::int32_t q = EnvelopeSolver::position(*sol.plan, i);
    order.push_back(static_cast<std::size_t>(q));
    u[i] = delta;
  }
  std::sort(order.begin(), order.end());
  if (replaced) *replaced = order.size();
  const SolverOptions opt;
  const double tol = opt.epsilon * g.h() * g.h();
  double last = 0.0;
  const long used =
      EnvelopeSolver::solve(*sol.plan, u, order, sol.relaxation, tol, 1000000, delta, last);
  if (used < 0) throw Error(ErrorCode::kNoConvergence, "local replacement did not converge");
  return out;
}

}  // namespace mscap
