#pragma once

#include "phi4n/lattice.hpp"

#include <functional>
#include <random>
#include <string>

namespace phi4n {

struct NonFiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** N real component fields on a shared grid. */
struct MultiField {
    LatticeSpec spec;
    int N = 0;
    std::vector<ScalarLattice> comp;

    MultiField() = default;
    MultiField(const LatticeSpec& s, int n_comp) : spec(s), N(n_comp), comp(n_comp, ScalarLattice(s)) {}
};

/**
 * Joint state of the interacting field Phi and the coupled free field Z,
 * driven by a shared noise stream.
 */
struct EnsembleState {
    LatticeSpec spec;
    int N = 0;
    MultiField phi;
    MultiField z;
    double time = 0.0;
    double a_eps = 0.0;
    std::mt19937_64 rng;
};

enum class Scheme { SemiImplicit, ExponentialLinear };

struct IntegratorConfig {
    double dt = 0.01;
    Scheme scheme = Scheme::SemiImplicit;
    bool mala_adjust = false;
    long burn_in_steps = 10000;
    long thin_stride = 1;
};

Scheme scheme_from_string(const std::string& s);
std::string scheme_to_string(Scheme s);

/** Draws one free-field sample with covariance C = (m - Laplacian)^{-1}. */
ScalarLattice sample_gff(const LatticeSpec& spec, std::mt19937_64& rng);

/** Fresh ensemble with Phi = Z initialized from independent free-field components. */
EnsembleState make_ensemble(const LatticeSpec& spec, int N, std::uint64_t seed);

/** Nonlinear drift b_i = -(1/N) Phi_i (S - (N+2) a_eps), S = sum_j Phi_j^2. */
MultiField drift(const MultiField& phi, double a_eps);

/** Lattice action whose density exp(-action) is invariant for the dynamics. */
double action(const MultiField& phi, double a_eps);

/**
 * One unadjusted step of the coupled (Phi, Z) update. Noise is drawn per
 * component in index order, sites row-major, and is shared between Phi and Z.
 */
void step(EnsembleState& state, const IntegratorConfig& cfg);

/**
 * One Metropolis-adjusted step targeting exp(-action) for Phi. The proposal
 * is the scheme's one-step Gaussian kernel; the Z update is applied with the
 * shared noise whether or not the Phi proposal is accepted. Returns the
 * accept decision. One extra uniform variate is consumed after the normals.
 */
bool mala_step(EnsembleState& state, const IntegratorConfig& cfg);

struct ChainStats {
    long steps = 0;
    long proposals = 0;
    long accepted = 0;
    double accept_rate() const { return proposals > 0 ? static_cast<double>(accepted) / proposals : 1.0; }
};

using Observer = std::function<void(const EnsembleState&)>;

/**
 * Burn-in, then advance until n_samples retained snapshots have been handed
 * to the observer (one every thin_stride steps). The observer must not
 * mutate the state.
 */
ChainStats run_chain(EnsembleState& state, const IntegratorConfig& cfg, long n_samples, const Observer& observe);

/** S(x) = sum_i Phi_i(x)^2. */
ScalarLattice radial_square(const MultiField& phi);

} // namespace phi4n
