#pragma once

#include "phi4n/lattice.hpp"

namespace phi4n {

/**
 * Deterministic kernel package for one (M, m) grid: the massive Green's
 * function C, its pointwise square C2 = C^2, the limiting two-point kernel G
 * solving C2*G + G = 2 C2, and the resolvent correction L with
 * K = (I + C2 * .)^{-1} = delta + L.
 */
struct KernelSet {
    LatticeSpec spec;
    ScalarLattice C;
    ScalarLattice C2;
    ScalarLattice G;
    ScalarLattice L;
    double a_eps = 0.0;
    double c1 = 0.0;
};

/** G from its spectral formula Ghat = 2 C2hat / (1 + C2hat). */
ScalarLattice build_G(const LatticeSpec& spec, const ScalarLattice& C2);

/** L from Lhat = -C2hat / (1 + C2hat); applying delta + L inverts f -> f + C2*f. */
ScalarLattice build_K(const LatticeSpec& spec, const ScalarLattice& C2);

/** Variance shift c1 = (C2*G)(0) = sum_k C2hat(k) Ghat(k); equals 2 C2(0) - G(0). */
double shift_constant(const ScalarLattice& C2, const ScalarLattice& G);

KernelSet build_kernels(const LatticeSpec& spec);

} // namespace phi4n
