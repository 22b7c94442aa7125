#include "phi4n/kernels.hpp"

#include <cmath>

namespace phi4n {

ScalarLattice build_G(const LatticeSpec& spec, const ScalarLattice& C2) {
    SpectralTable c2h = dft_forward(C2);
    SpectralTable gh(spec);
    for (size_t i = 0; i < c2h.c.size(); ++i) {
        const double s = c2h.c[i].real();
        if (!(s > 0.0))
            throw std::runtime_error("build_G: C^2 spectrum must be strictly positive");
        gh.c[i] = 2.0 * s / (1.0 + s);
    }
    ScalarLattice G = dft_inverse(gh);
    symmetrize_even(G);
    return G;
}

ScalarLattice build_K(const LatticeSpec& spec, const ScalarLattice& C2) {
    SpectralTable c2h = dft_forward(C2);
    SpectralTable lh(spec);
    for (size_t i = 0; i < c2h.c.size(); ++i) {
        const double s = c2h.c[i].real();
        if (!(s > 0.0))
            throw std::runtime_error("build_K: C^2 spectrum must be strictly positive");
        lh.c[i] = -s / (1.0 + s);
    }
    ScalarLattice L = dft_inverse(lh);
    symmetrize_even(L);
    return L;
}

double shift_constant(const ScalarLattice& C2, const ScalarLattice& G) {
    SpectralTable c2h = dft_forward(C2);
    SpectralTable gh = dft_forward(G);
    double sum = 0.0;
    for (size_t i = 0; i < c2h.c.size(); ++i)
        sum += c2h.c[i].real() * gh.c[i].real();
    return sum;
}

KernelSet build_kernels(const LatticeSpec& spec) {
    KernelSet ks;
    ks.spec = spec;
    ks.C = greens_function(spec);
    ks.C2 = pointwise_square(ks.C);
    ks.G = build_G(spec, ks.C2);
    ks.L = build_K(spec, ks.C2);
    ks.a_eps = wick_constant(spec);
    ks.c1 = shift_constant(ks.C2, ks.G);
    return ks;
}

} // namespace phi4n
