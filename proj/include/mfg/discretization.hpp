#pragma once

// Finite-difference operators on a uniform 1-D grid.
//
// The gradient is a second-order summation-by-parts operator: central in the
// interior, one-sided first order at the two endpoints, paired with trapezoid
// quadrature. With that pairing the divergence defined as the negative
// quadrature adjoint of the gradient is itself a consistent central difference
// at every interior node, and discrete integration by parts holds exactly.
//
// Three order-2k difference operators are kept:
//   natural  rows only where the centered stencil fits (used for m; the
//            boundary conditions of m then arise variationally),
//   clamped  centered stencil at every node with zero ghost values outside the
//            grid (used for the homogeneous value function),
//   data     stencil shifted inward near the ends so every row annihilates
//            polynomials of degree < 2k (used for given data such as xi).

#include "mfg/banded.hpp"
#include "mfg/precision.hpp"

#include <Eigen/Dense>

namespace mfg {

using Field = Eigen::VectorXd;

struct GridInterval {
  double x_min = 0.0;
  double x_max = 1.0;
  int n = 0;  ///< number of cells; the grid has n + 1 nodes

  int nodes() const { return n + 1; }
  double dx() const { return (x_max - x_min) / n; }
  double node(int i) const { return x_min + i * dx(); }
  Field coordinates() const;

  hreal dx_h() const { return (hreal(x_max) - hreal(x_min)) / hreal(n); }
  hreal node_h(int i) const { return hreal(x_min) + hreal(i) * dx_h(); }

  /// Throws InputError unless x_max > x_min and n >= 4k + 4.
  void validate(int k) const;
};

/// Smallest admissible cell count for regularization order k.
inline int min_cells(int k) { return 4 * k + 4; }

struct DiscreteOperators {
  GridInterval grid;
  int k = 2;

  Field quad;                 ///< trapezoid weights
  HVec quad_h;                ///< same, extended precision
  HVec natural_row_weights;   ///< quadrature weight of each natural-stencil row

  BandMatrix<hreal> gradient;
  RowOperator<hreal> d2k_natural;
  RowOperator<hreal> d2k_clamped;
  RowOperator<hreal> d2k_data;

  BandMatrix<hreal> stiffness_m;  ///< D_nat^T Q_row D_nat
  BandMatrix<hreal> stiffness_u;  ///< D_cl^T Q D_cl

  int nodes() const { return grid.nodes(); }
  int half_band() const { return 2 * k; }

  // Extended-precision kernels used by the solvers.
  HVec grad(std::span<const hreal> u) const { return gradient.multiply(u); }
  HVec div(std::span<const hreal> flux) const;
  hreal integrate(std::span<const hreal> f) const;
  hreal inner(std::span<const hreal> a, std::span<const hreal> b) const;
  hreal natural_energy(std::span<const hreal> w) const;   ///< ||D_nat w||^2_Qrow
  hreal clamped_energy(std::span<const hreal> w) const;   ///< ||D_cl w||^2_Q
  HVec mass_times(std::span<const hreal> w) const;
};

/// Builds all operators. Throws InputError if the grid is too small for k.
DiscreteOperators build_operators(const GridInterval& grid, int k);

/// Centered order-2k difference weights (unscaled integers, length 2k + 1).
std::vector<long long> centered_stencil(int k);

Field apply_gradient(const DiscreteOperators& ops, const Field& u);

/// Negative quadrature adjoint of the gradient on interior nodes, one-sided
/// difference at the endpoints. For every v vanishing at both endpoints,
/// <div F, v>_Q = -<F, G v>_Q.
Field apply_divergence(const DiscreteOperators& ops, const Field& flux);

double integrate(const DiscreteOperators& ops, const Field& f);

Field apply_d2k_natural(const DiscreteOperators& ops, const Field& w);
Field apply_d2k_clamped(const DiscreteOperators& ops, const Field& w);
Field apply_d2k_data(const DiscreteOperators& ops, const Field& w);

/// Dense copies for inspection and tests.
Eigen::MatrixXd to_dense(const BandMatrix<hreal>& m);
Eigen::MatrixXd to_dense(const RowOperator<hreal>& op);

void check_length(const DiscreteOperators& ops, const Field& f, const char* name);

}  // namespace mfg
