#pragma once

#include "phi4n/lattice.hpp"

#include <vector>

namespace phi4n {

/** Scalar time series of one observable statistic along a chain. */
struct SampleSeries {
    std::vector<double> values;
    long stride = 1;
    double dt = 0.0;
};

struct EstimateResult {
    double mean = 0.0;
    double std_error = 0.0;
    long n_samples = 0;
    double tau_int = 0.5;
};

struct RateFit {
    double exponent = 0.0;
    double amplitude = 0.0;
    double residual = 0.0;
};

/**
 * c(r) = (1/n^2) sum_x a(x) b(x+r) for every displacement r at once,
 * computed as the inverse transform of conj(ahat) bhat.
 */
ScalarLattice translation_correlator(const ScalarLattice& a, const ScalarLattice& b);

/**
 * Mean with a batch-means standard error (n_batches batches of equal length;
 * needs at least two samples per batch) and a windowed integrated
 * autocorrelation time (smallest W with W >= 5 tau(W)).
 */
EstimateResult batch_estimate(const std::vector<double>& values, int n_batches);

/** Least-squares fit of |values| ~ amplitude * N^-exponent on log-log scale. */
RateFit rate_fit(const std::vector<double>& Ns, const std::vector<double>& values);

/** Standardized deviation (estimate - prediction)/std_error. */
double sigma_test(double estimate, double std_error, double prediction);

} // namespace phi4n
