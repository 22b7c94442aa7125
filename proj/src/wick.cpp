#include "phi4n/wick.hpp"

#include <cmath>
#include <stdexcept>

namespace phi4n {

namespace {

void check_ctx(const WickContext& ctx) {
    if (ctx.N < 1)
        throw std::invalid_argument("wick: component count must be at least 1");
    if (!(ctx.a_eps > 0.0))
        throw std::invalid_argument("wick: a_eps must be positive");
}

// generalized Laguerre L_n^{(alpha)}(x) by the three-term recurrence
// (t+1) L_{t+1} = (2t + 1 + alpha - x) L_t - (t + alpha) L_{t-1}
double laguerre(int n, double alpha, double x) {
    double l0 = 1.0;
    if (n == 0)
        return l0;
    double l1 = 1.0 + alpha - x;
    for (int t = 1; t < n; ++t) {
        const double l2 = ((2.0 * t + 1.0 + alpha - x) * l1 - (t + alpha) * l0) / (t + 1.0);
        l0 = l1;
        l1 = l2;
    }
    return l1;
}

} // namespace

double radial_wick_power_value(double S, int n, const WickContext& ctx) {
    check_ctx(ctx);
    if (n < 0)
        throw std::invalid_argument("radial_wick_power: negative order");
    const double a = ctx.a_eps;
    const double alpha = 0.5 * ctx.N - 1.0;
    double prefactor = 1.0;
    for (int t = 1; t <= n; ++t)
        prefactor *= -2.0 * a * t;
    return prefactor * laguerre(n, alpha, S / (2.0 * a));
}

ScalarLattice radial_wick_power(const ScalarLattice& S, int n, const WickContext& ctx) {
    check_ctx(ctx);
    if (n < 0)
        throw std::invalid_argument("radial_wick_power: negative order");
    const double a = ctx.a_eps;
    const double alpha = 0.5 * ctx.N - 1.0;
    double prefactor = 1.0;
    for (int t = 1; t <= n; ++t)
        prefactor *= -2.0 * a * t;
    ScalarLattice out = S;
    for (double& v : out.v)
        v = prefactor * laguerre(n, alpha, v / (2.0 * a));
    return out;
}

ScalarLattice scaled_observable(const ScalarLattice& S, int n, const WickContext& ctx) {
    ScalarLattice out = radial_wick_power(S, n, ctx);
    const double scale = std::pow(static_cast<double>(ctx.N), -0.5 * n);
    for (double& v : out.v)
        v *= scale;
    return out;
}

ScalarLattice mixed_observable(const ScalarLattice& phi_i, const ScalarLattice& S, const WickContext& ctx) {
    check_ctx(ctx);
    if (!same_spec(phi_i.spec, S.spec))
        throw std::invalid_argument("mixed_observable: mismatched lattices");
    const double shift = (ctx.N + 2.0) * ctx.a_eps;
    const double scale = 1.0 / std::sqrt(static_cast<double>(ctx.N));
    ScalarLattice out = phi_i;
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = scale * phi_i.v[i] * (S.v[i] - shift);
    return out;
}

ScalarLattice fluctuation_field(const ScalarLattice& phi_i, const ScalarLattice& z_i, int N) {
    if (!same_spec(phi_i.spec, z_i.spec))
        throw std::invalid_argument("fluctuation_field: mismatched lattices");
    const double scale = std::sqrt(static_cast<double>(N));
    ScalarLattice out = phi_i;
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = scale * (phi_i.v[i] - z_i.v[i]);
    return out;
}

} // namespace phi4n
