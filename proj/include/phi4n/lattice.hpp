#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace phi4n {

/** Dyadic square grid on the unit torus: n = 2^M sites per axis, spacing eps = 2^-M. */
struct LatticeSpec {
    int M = 0;
    int n = 1;
    double eps = 1.0;
    double m = 1.0;
};

LatticeSpec make_spec(int M, double mass);

inline bool same_spec(const LatticeSpec& a, const LatticeSpec& b) {
    return a.M == b.M && a.m == b.m;
}

/** Real scalar field sampled on the grid, row-major, v[x1*n + x2]. */
struct ScalarLattice {
    LatticeSpec spec;
    std::vector<double> v;

    ScalarLattice() = default;
    explicit ScalarLattice(const LatticeSpec& s) : spec(s), v(static_cast<size_t>(s.n) * s.n, 0.0) {}

    double& at(int x1, int x2) {
        return v[static_cast<size_t>(x1) * spec.n + x2];
    }
    double at(int x1, int x2) const {
        return v[static_cast<size_t>(x1) * spec.n + x2];
    }
    /** Accessor with periodic wrapping of the site indices. */
    double at_wrapped(int x1, int x2) const {
        const int n = spec.n;
        x1 = ((x1 % n) + n) % n;
        x2 = ((x2 % n) + n) % n;
        return v[static_cast<size_t>(x1) * n + x2];
    }
};

/**
 * Complex Fourier coefficients in wrapped (FFTW) order, c[k1*n + k2] with
 * k1, k2 in 0..n-1. Frequencies are n-periodic, so the wrapped table carries
 * the same information as one indexed over [-n/2, n/2)^2.
 */
struct SpectralTable {
    LatticeSpec spec;
    std::vector<std::complex<double>> c;

    SpectralTable() = default;
    explicit SpectralTable(const LatticeSpec& s) : spec(s), c(static_cast<size_t>(s.n) * s.n, 0.0) {}

    std::complex<double>& at(int k1, int k2) {
        return c[static_cast<size_t>(k1) * spec.n + k2];
    }
    std::complex<double> at(int k1, int k2) const {
        return c[static_cast<size_t>(k1) * spec.n + k2];
    }
    /** Coefficient for a centered frequency pair, each component in [-n/2, n/2). */
    std::complex<double> at_centered(int k1, int k2) const {
        const int n = spec.n;
        k1 = ((k1 % n) + n) % n;
        k2 = ((k2 % n) + n) % n;
        return c[static_cast<size_t>(k1) * n + k2];
    }
};

/** In-place unnormalized 2d FFT on an n*n row-major complex buffer; sign -1 forward, +1 backward. */
void dft2_raw(std::vector<std::complex<double>>& buf, int n, int sign);

/** Forward transform with the eps^2 site weight: (Ff)(k) = eps^2 sum_x f(x) e^{-2 pi i k.x}. */
SpectralTable dft_forward(const ScalarLattice& f);

/** Inverse of dft_forward (unit-weight mode sum); exact round trip since eps^2 n^2 = 1. */
ScalarLattice dft_inverse(const SpectralTable& t);

/** Symbol of -Laplacian at centered frequency k: (4/eps^2)(sin^2(pi k1/n) + sin^2(pi k2/n)). */
double laplace_symbol(const LatticeSpec& spec, int k1, int k2);

/** Five-point lattice Laplacian, eps^-2 sum of neighbor differences. */
ScalarLattice laplacian_5pt(const ScalarLattice& f);

/** Green's function of (m - Laplacian): even, real, with DFT 1/(m + laplace_symbol). */
ScalarLattice greens_function(const LatticeSpec& spec);

/** Wick constant a_eps = C(0), the on-site variance of the free field. */
double wick_constant(const LatticeSpec& spec);

/** Torus convolution (f*g)(x) = eps^2 sum_y f(x-y) g(y), computed spectrally. */
ScalarLattice convolve(const ScalarLattice& f, const ScalarLattice& g);

ScalarLattice pointwise_square(const ScalarLattice& f);

/** Projects onto the even subspace, t(x) <- (t(x) + t(-x))/2; used to make evenness exact. */
void symmetrize_even(ScalarLattice& f);

} // namespace phi4n
