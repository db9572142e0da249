#include "mscap/condenser.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mscap/error.hpp"

namespace mscap {

namespace {

std::string point_text(const Point& x, int dim) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (int a = 0; a < dim; ++a) os << (a ? ", " : "") << x[a];
  os << ')';
  return os.str();
}

nlohmann::json shape_json(const Shape& s, int dim) {
  nlohmann::json j;
  auto pt = [&](const Point& p) { return std::vector<double>(p.begin(), p.begin() + dim); };
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Ball>) {
          j = {{"shape", "ball"}, {"center", pt(v.center)}, {"radius", v.radius}};
        } else if constexpr (std::is_same_v<T, Box>) {
          j = {{"shape", "box"}, {"lo", pt(v.lo)}, {"hi", pt(v.hi)}};
        } else if constexpr (std::is_same_v<T, Annulus>) {
          j = {{"shape", "annulus"}, {"center", pt(v.center)}, {"inner", v.inner}, {"outer", v.outer}};
        } else {
          j = {{"shape", "polydisc"},
               {"center", pt(v.center)},
               {"radii", std::vector<double>(v.radii.begin(), v.radii.begin() + dim / 2)}};
        }
      },
      s.variant());
  return j;
}

}  // namespace

void CondenserSpec::validate() const {
  if (geometry.n < 1 || geometry.n > kMaxComplexDim)
    throw Error(ErrorCode::kConstraintError, "n must be 1 or 2");
  if (m < 1 || m > geometry.n) throw Error(ErrorCode::kConstraintError, "m must satisfy 1 <= m <= n");
  if (!std::isfinite(delta)) throw Error(ErrorCode::kConstraintError, "delta must be finite");
  if (geometry.compact.empty()) throw Error(ErrorCode::kEmptyK, "K has no components");
  if (geometry.n == 1 && psi.uses_second_variable())
    throw Error(ErrorCode::kConstraintError, "psi uses x2, y2 or r2 but n = 1");
}

nlohmann::json CondenserSpec::to_json() const {
  const int dim = geometry.dim();
  nlohmann::json k = nlohmann::json::array();
  for (const auto& s : geometry.compact) k.push_back(shape_json(s, dim));
  return {{"n", geometry.n},
          {"m", m},
          {"p", p()},
          {"domain", shape_json(geometry.domain, dim)},
          {"compact", k},
          {"psi", psi.print()},
          {"delta", delta}};
}

int default_stencil_radius(int n, int p) { return (n == 2 && p == 2) ? 2 : 1; }

Condenser::Condenser(CondenserSpec spec, const Options& opt) : spec_(std::move(spec)) {
  spec_.validate();
  const int rs = opt.stencil_radius > 0 ? opt.stencil_radius : default_stencil_radius(spec_.n(), spec_.p());
  grid_ = GridDomain::build(spec_.geometry, opt.h, rs);
  psi_ = ScalarField(grid_, std::numeric_limits<double>::quiet_NaN());
  psi_sup_ = -std::numeric_limits<double>::infinity();
  psi_min_ = std::numeric_limits<double>::infinity();
  const int dim = grid_->dim();
  for (std::size_t i = 0; i < grid_->size(); ++i) {
    if (grid_->cls(i) != NodeClass::kCompact) continue;
    const Point x = grid_->coords(i);
    double v = 0.0;
    try {
      v = spec_.psi.evaluate(x);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConstraintError,
                  "psi cannot be evaluated at K node " + point_text(x, dim) + " (" + e.what() + ")");
    }
    psi_[i] = v;
    psi_sup_ = std::max(psi_sup_, v);
    psi_min_ = std::min(psi_min_, v);
  }
  const bool ok = opt.allow_degenerate ? spec_.delta >= psi_sup_ : spec_.delta > psi_sup_;
  if (!ok) {
    std::ostringstream os;
    os.precision(17);
    os << "delta = " << spec_.delta << " must exceed sup_K psi = " << psi_sup_;
    throw Error(ErrorCode::kInfeasible, os.str());
  }
}

double Condenser::psi_at(const Point& x) const { return spec_.psi.evaluate(x); }

}  // namespace mscap
