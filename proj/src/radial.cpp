#include "mscap/radial.hpp"

#include <cmath>
#include <numbers>

#include "mscap/error.hpp"

namespace mscap {

namespace {

void check(const RadialCondenser& rc) {
  if (rc.n < 1 || rc.n > 2 || rc.p < 1 || rc.p > rc.n)
    throw Error(ErrorCode::kInvalidArgument, "radial condenser needs n in {1,2} and 1 <= p <= n");
  if (!(rc.r > 0.0 && rc.r < rc.R)) throw Error(ErrorCode::kInvalidArgument, "need 0 < r < R");
}

// Radial profile of the maximal function off K: log for n = 1 and for the
// Monge-Ampere case, the Newtonian kernel -t^{-2} of R^4 for n = 2, p = 1.
bool logarithmic(const RadialCondenser& rc) { return rc.n == 1 || rc.p == 2; }

double kernel(const RadialCondenser& rc, double t) {
  return logarithmic(rc) ? std::log(t) : -1.0 / (t * t);
}

}  // namespace

double radial_envelope(const RadialCondenser& rc, double t) {
  check(rc);
  if (t <= rc.r) return rc.c;
  if (t >= rc.R) return rc.delta;
  const double gR = kernel(rc, rc.R), gr = kernel(rc, rc.r);
  return rc.delta + (rc.delta - rc.c) * (kernel(rc, t) - gR) / (gR - gr);
}

double radial_capacity(const RadialCondenser& rc) {
  check(rc);
  constexpr double pi = std::numbers::pi;
  const double jump = rc.delta - rc.c;
  if (rc.n == 1) return jump * (pi / 2.0) / std::log(rc.R / rc.r);
  if (rc.p == 1) return jump * pi * pi / (1.0 / (rc.r * rc.r) - 1.0 / (rc.R * rc.R));
  const double L = std::log(rc.R / rc.r);
  return pi * pi * jump * jump / (4.0 * L * L);
}

}  // namespace mscap
