#pragma once

namespace mscap {

/// Concentric ball condenser K = B(r), D = B(R) with constant weight c < delta.
struct RadialCondenser {
  int n = 1;
  int p = 1;
  double r = 0.5;
  double R = 1.0;
  double c = -1.0;
  double delta = 0.0;
};

/// Closed-form envelope at |z| = t (equal to c on K, delta on the sphere |z| = R).
double radial_envelope(const RadialCondenser& rc, double t);

/// Closed-form capacity in the normalization (dd^c |z|^2)^n = n! dV.
double radial_capacity(const RadialCondenser& rc);

}  // namespace mscap
