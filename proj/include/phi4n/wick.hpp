#pragma once

#include "phi4n/lattice.hpp"

#include <string>

namespace phi4n {

/** Renormalization context: component count and the on-site free variance a_eps. */
struct WickContext {
    int N = 1;
    double a_eps = 0.0;
};

/** A named observable field produced from one ensemble snapshot. */
struct ObservableSnapshot {
    std::string tag;
    ScalarLattice values;
};

/**
 * Wick power of the radial field, :S^n: = (-2a)^n n! L_n^{(N/2-1)}(S/(2a))
 * evaluated pointwise on a lattice of S = sum_i Phi_i^2 values.
 */
ScalarLattice radial_wick_power(const ScalarLattice& S, int n, const WickContext& ctx);

/** Scalar version of radial_wick_power for a single S value. */
double radial_wick_power_value(double S, int n, const WickContext& ctx);

/** N^{-n/2} :S^n:, the observable with an order-one large-N limit. */
ScalarLattice scaled_observable(const ScalarLattice& S, int n, const WickContext& ctx);

/** (1/sqrt N)(Phi_i S - (N+2) a Phi_i) = (1/sqrt N) :Phi_i Phi^2:. */
ScalarLattice mixed_observable(const ScalarLattice& phi_i, const ScalarLattice& S, const WickContext& ctx);

/** sqrt(N) (Phi_i - Z_i), the coordinate fluctuation field. */
ScalarLattice fluctuation_field(const ScalarLattice& phi_i, const ScalarLattice& z_i, int N);

} // namespace phi4n
