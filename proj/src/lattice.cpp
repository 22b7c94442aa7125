#include "phi4n/lattice.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace phi4n {

LatticeSpec make_spec(int M, double mass) {
    if (M < 0 || M > 12)
        throw std::invalid_argument("make_spec: M must be in [0, 12]");
    if (!(mass > 0.0))
        throw std::invalid_argument("make_spec: mass must be positive");
    LatticeSpec s;
    s.M = M;
    s.n = 1 << M;
    s.eps = 1.0 / s.n;
    s.m = mass;
    return s;
}

namespace {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

// Plans are created once per grid size with FFTW_ESTIMATE so that the chosen
// algorithm, and with it the floating-point summation order, is reproducible
// across runs. FFTW_UNALIGNED lets the same plan run on any caller buffer.
PlanPair& plans_for(int n) {
    static std::map<int, PlanPair> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end())
        return it->second;
    std::vector<std::complex<double>> scratch(static_cast<size_t>(n) * n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    PlanPair p;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p.fwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, flags);
    p.bwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, flags);
    if (!p.fwd || !p.bwd)
        throw std::runtime_error("fftw plan creation failed");
    return cache.emplace(n, p).first->second;
}

} // namespace

void dft2_raw(std::vector<std::complex<double>>& buf, int n, int sign) {
    if (buf.size() != static_cast<size_t>(n) * n)
        throw std::invalid_argument("dft2_raw: buffer size mismatch");
    PlanPair& p = plans_for(n);
    auto* b = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_execute_dft(sign < 0 ? p.fwd : p.bwd, b, b);
}

SpectralTable dft_forward(const ScalarLattice& f) {
    const int n = f.spec.n;
    SpectralTable out(f.spec);
    std::vector<std::complex<double>> buf(f.v.begin(), f.v.end());
    dft2_raw(buf, n, -1);
    const double w = f.spec.eps * f.spec.eps;
    for (size_t i = 0; i < buf.size(); ++i)
        out.c[i] = w * buf[i];
    return out;
}

ScalarLattice dft_inverse(const SpectralTable& t) {
    const int n = t.spec.n;
    ScalarLattice out(t.spec);
    std::vector<std::complex<double>> buf = t.c;
    dft2_raw(buf, n, +1);
    for (size_t i = 0; i < buf.size(); ++i)
        out.v[i] = buf[i].real();
    return out;
}

double laplace_symbol(const LatticeSpec& spec, int k1, int k2) {
    const int n = spec.n;
    const double s1 = std::sin(M_PI * k1 / n);
    const double s2 = std::sin(M_PI * k2 / n);
    return 4.0 * n * static_cast<double>(n) * (s1 * s1 + s2 * s2);
}

ScalarLattice laplacian_5pt(const ScalarLattice& f) {
    const int n = f.spec.n;
    const double inv_eps2 = static_cast<double>(n) * n;
    ScalarLattice out(f.spec);
    for (int x = 0; x < n; ++x) {
        const int xp = (x + 1) % n, xm = (x + n - 1) % n;
        for (int y = 0; y < n; ++y) {
            const int yp = (y + 1) % n, ym = (y + n - 1) % n;
            out.at(x, y) = inv_eps2 * (f.at(xp, y) + f.at(xm, y) + f.at(x, yp) + f.at(x, ym) - 4.0 * f.at(x, y));
        }
    }
    return out;
}

void symmetrize_even(ScalarLattice& f) {
    const int n = f.spec.n;
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            const int rx = (n - x) % n, ry = (n - y) % n;
            if (x * n + y < rx * n + ry) {
                const double avg = 0.5 * (f.at(x, y) + f.at(rx, ry));
                f.at(x, y) = avg;
                f.at(rx, ry) = avg;
            }
        }
    }
}

ScalarLattice greens_function(const LatticeSpec& spec) {
    const int n = spec.n;
    SpectralTable t(spec);
    for (int k1 = 0; k1 < n; ++k1) {
        // evaluate the symbol at the centered representative so that the
        // table is exactly even under k -> -k
        const int c1 = k1 <= n / 2 ? k1 : k1 - n;
        for (int k2 = 0; k2 < n; ++k2) {
            const int c2 = k2 <= n / 2 ? k2 : k2 - n;
            t.at(k1, k2) = 1.0 / (spec.m + laplace_symbol(spec, c1, c2));
        }
    }
    ScalarLattice C = dft_inverse(t);
    symmetrize_even(C);
    return C;
}

double wick_constant(const LatticeSpec& spec) {
    const int n = spec.n;
    double sum = 0.0;
    for (int k1 = 0; k1 < n; ++k1) {
        const int c1 = k1 <= n / 2 ? k1 : k1 - n;
        for (int k2 = 0; k2 < n; ++k2) {
            const int c2 = k2 <= n / 2 ? k2 : k2 - n;
            sum += 1.0 / (spec.m + laplace_symbol(spec, c1, c2));
        }
    }
    return sum;
}

ScalarLattice convolve(const ScalarLattice& f, const ScalarLattice& g) {
    if (!same_spec(f.spec, g.spec))
        throw std::invalid_argument("convolve: mismatched lattices");
    SpectralTable fh = dft_forward(f);
    SpectralTable gh = dft_forward(g);
    for (size_t i = 0; i < fh.c.size(); ++i)
        fh.c[i] *= gh.c[i];
    return dft_inverse(fh);
}

ScalarLattice pointwise_square(const ScalarLattice& f) {
    ScalarLattice out = f;
    for (double& x : out.v)
        x *= x;
    return out;
}

} // namespace phi4n
