#pragma once

#include "phi4n/config.hpp"
#include "phi4n/ibp.hpp"
#include "phi4n/kernels.hpp"
#include "phi4n/oracle.hpp"
#include "phi4n/stats.hpp"
#include "phi4n/wick.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace phi4n {

inline constexpr const char* kToolVersion = "1.0.0";

/** Per-snapshot statistics of every requested observable along one chain. */
struct ObservableSeries {
    int N = 0;
    std::vector<std::string> observables;
    std::vector<std::string> stats; // "mean", then one "corr_<dx>_<dy>" per displacement
    std::vector<std::vector<std::vector<double>>> series; // [observable][stat] -> time series
    ChainStats chain;
    double a_eps = 0.0;
};

std::string corr_stat_name(int dx, int dy);

/** Decorrelated per-chain seed derived from the base seed and the chain index. */
std::uint64_t chain_seed(std::uint64_t base, int chain_index);

/** Default batch count for batch-means errors, clamped for short series. */
int default_batches(long n);

/**
 * Runs one chain at the given N and accumulates, for every observable,
 * the spatial mean and the translation-averaged two-point function at the
 * configured displacements, one entry per retained snapshot.
 */
ObservableSeries run_chain_observables(const RunConfig& cfg, int N, std::uint64_t seed);

/** Limit prediction of the spatial mean; throws std::invalid_argument for fluct_1. */
double oracle_mean(const std::string& id, const KernelSet& ks);

/** Limit prediction of the two-point function at (dx, dy); throws std::invalid_argument for fluct_1. */
double oracle_two_point(const std::string& id, const KernelSet& ks, int dx, int dy);

int run_kernels(const RunConfig& cfg);
int run_simulate(const RunConfig& cfg);
int run_estimate(const RunConfig& cfg);
int run_oracle(const RunConfig& cfg);
int run_expand(const RunConfig& cfg, int k, int order);
int run_verify(const RunConfig& cfg);
int run_compare(const RunConfig& cfg);

} // namespace phi4n
