#pragma once

#include "phi4n/kernels.hpp"

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace phi4n {

/** One perfect matching of {0, .., k-1}, as index pairs (a, b) with a < b. */
using Matching = std::vector<std::pair<int, int>>;

/** Tuple powers (n_1, .., n_k) attached to the evaluation points. */
using MultiIndex = std::vector<int>;

/** Evaluation points given as integer lattice sites (wrapped periodically). */
using PointTuple = std::vector<std::array<int, 2>>;

/**
 * All perfect matchings of {0, .., k-1} in canonical order: the smallest
 * unmatched index is paired with each larger one in turn. Odd k gives an
 * empty list; even k gives (k-1)!! matchings.
 */
std::vector<Matching> perfect_matchings(int k);

/** Gaussian k-point function of the kernel table: sum over pairings of prod kernel(y_a - y_b). */
double f_k_oracle(const PointTuple& points, const ScalarLattice& kernel);

/**
 * Restricted pairing sum for tuple powers n: each point y_i is replicated
 * n_i times and only pairs joining copies from different tuple slots are
 * kept. Vanishes for odd total degree.
 */
double F_nk_oracle(const MultiIndex& n, const PointTuple& points, const ScalarLattice& kernel);

/**
 * Limiting correlation function of the normalized radial Wick powers:
 * f_{n,k} = sum_l (-c1)^{sum l_i} prod_i n_i!/((n_i-2l_i)! l_i! 2^{l_i})
 *           F_{n-2l,k}. Total degree is capped at 12.
 */
double f_nk_oracle(const MultiIndex& n, const PointTuple& points, const KernelSet& ks);

/** Limiting k-point function of the normalized mixed observable: C-pairing sum times f_k. */
double g_k_oracle(const PointTuple& points, const KernelSet& ks);

/** Probabilists' Hermite polynomial He_n(x). */
double hermite(int n, double x);

inline double eval_displacement(const ScalarLattice& kernel, const std::array<int, 2>& a,
                                const std::array<int, 2>& b) {
    return kernel.at_wrapped(a[0] - b[0], a[1] - b[1]);
}

} // namespace phi4n
