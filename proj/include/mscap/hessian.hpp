#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include "mscap/field.hpp"

namespace mscap {

/// Complex Hessian [d^2 u / dz_j dzbar_k] at one node; for n = 1 only a11 is used.
struct Hermitian2 {
  double a11 = 0.0;
  double a22 = 0.0;
  std::complex<double> a12{};  ///< a21 is its conjugate
};

/// Central-difference complex Hessian. Throws STENCIL_OFF_GRID when the node or
/// one of its (max-norm 1) neighbours is EXTERIOR or off the grid.
Hermitian2 complex_hessian(const ScalarField& u, std::size_t node);

/// Ascending eigenvalues of H (n entries, the rest zero).
std::array<double, 2> eigenvalues(const Hermitian2& H, int n);

/// sigma[k-1] = k-th elementary symmetric polynomial of lambda.
std::array<double, 2> elementary_symmetric(const std::array<double, 2>& lambda, int n);

struct HessianSpectrum {
  GridPtr grid;
  int n = 1;
  /// Nodes at which the spectrum was evaluated (INTERIOR and COMPACT_K).
  NodeMask evaluated;
  std::vector<std::array<double, 2>> lambda;
  std::vector<std::array<double, 2>> sigma;
};

HessianSpectrum spectrum(const ScalarField& u);

enum class DensityForm {
  kPointwise,     ///< p!(n-p)! sigma_p of the central Hessian
  kConservative,  ///< divergence form of det for n = p = 2; equals kPointwise otherwise
};

/// Density of (dd^c u)^p ^ beta^{n-p} with respect to Lebesgue measure.
/// Zero on BOUNDARY nodes, NaN on EXTERIOR nodes.
struct MeasureField {
  ScalarField density;
  int p = 1;
  DensityForm form = DensityForm::kPointwise;
};

MeasureField hessian_density(const ScalarField& u, int p,
                             DensityForm form = DensityForm::kPointwise);

/// p!(n-p)!, the factor between sigma_p and the density.
double density_normalization(int n, int p);

/// Divergence-form Monge-Ampere density at one node of a field on a grid with n = 2.
/// Needs an axis reach of two nodes.
double conservative_ma_density(const ScalarField& u, std::size_t node);

struct MembershipReport {
  bool member = true;
  int m = 1;
  int p = 1;
  double tol = 0.0;
  /// Largest value of -sigma_k over tested nodes and k <= p (0 if none negative).
  double worst_violation = 0.0;
  std::size_t worst_node = 0;
  int worst_k = 0;
  std::size_t violations = 0;
  std::size_t tested = 0;
};

/// Default tolerance 1e-8 * max|u| / h^2.
double default_membership_tol(const ScalarField& u);

/// Pointwise sigma_k >= -tol test for k = 1..n-m+1 on the selected nodes
/// (INTERIOR and COMPACT_K when no selection is given).
MembershipReport is_m_subharmonic(const ScalarField& u, int m, double tol,
                                  const NodeMask* selection = nullptr);
MembershipReport is_m_subharmonic(const ScalarField& u, int m);

}  // namespace mscap
