#include "phi4n/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace phi4n {

ScalarLattice translation_correlator(const ScalarLattice& a, const ScalarLattice& b) {
    if (!same_spec(a.spec, b.spec))
        throw std::invalid_argument("translation_correlator: mismatched lattices");
    SpectralTable ah = dft_forward(a);
    SpectralTable bh = dft_forward(b);
    for (size_t i = 0; i < ah.c.size(); ++i)
        ah.c[i] = std::conj(ah.c[i]) * bh.c[i];
    return dft_inverse(ah);
}

namespace {

double windowed_tau(const std::vector<double>& v, double mean) {
    const long n = static_cast<long>(v.size());
    double gamma0 = 0.0;
    for (double x : v)
        gamma0 += (x - mean) * (x - mean);
    gamma0 /= n;
    // a variance at rounding scale means the series is constant
    if (!(gamma0 > 1e-28 * (mean * mean + 1.0)))
        return 0.5;
    const long w_max = std::min<long>(n / 4, 10000);
    double tau = 0.5;
    for (long w = 1; w <= w_max; ++w) {
        double gamma = 0.0;
        for (long t = 0; t + w < n; ++t)
            gamma += (v[t] - mean) * (v[t + w] - mean);
        gamma /= (n - w);
        tau += gamma / gamma0;
        if (static_cast<double>(w) >= 5.0 * tau)
            break;
    }
    return std::max(tau, 0.5);
}

} // namespace

EstimateResult batch_estimate(const std::vector<double>& values, int n_batches) {
    if (n_batches < 2)
        throw std::invalid_argument("batch_estimate: need at least 2 batches");
    const long n = static_cast<long>(values.size());
    if (n < 2L * n_batches)
        throw std::invalid_argument("batch_estimate: need at least 2 samples per batch");
    const long batch_len = n / n_batches;
    const long used = batch_len * n_batches;

    double mean = 0.0;
    for (long t = 0; t < used; ++t)
        mean += values[t];
    mean /= used;

    double var_b = 0.0;
    for (int j = 0; j < n_batches; ++j) {
        double bm = 0.0;
        for (long t = 0; t < batch_len; ++t)
            bm += values[j * batch_len + t];
        bm /= batch_len;
        var_b += (bm - mean) * (bm - mean);
    }
    var_b /= (n_batches - 1);

    EstimateResult r;
    r.mean = mean;
    r.std_error = std::sqrt(var_b / n_batches);
    r.n_samples = used;
    r.tau_int = windowed_tau(values, mean);
    return r;
}

RateFit rate_fit(const std::vector<double>& Ns, const std::vector<double>& values) {
    if (Ns.size() != values.size() || Ns.size() < 2)
        throw std::invalid_argument("rate_fit: need matching lists with at least 2 entries");
    const size_t n = Ns.size();
    std::vector<double> lx(n), ly(n);
    for (size_t i = 0; i < n; ++i) {
        if (!(Ns[i] > 0.0))
            throw std::invalid_argument("rate_fit: N values must be positive");
        const double av = std::fabs(values[i]);
        if (!(av > 0.0))
            throw std::invalid_argument("rate_fit: values must be nonzero");
        lx[i] = std::log(Ns[i]);
        ly[i] = std::log(av);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double denom = n * sxx - sx * sx;
    if (!(std::fabs(denom) > 0.0))
        throw std::invalid_argument("rate_fit: degenerate N list");
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;

    RateFit fit;
    fit.exponent = -slope;
    fit.amplitude = std::exp(intercept);
    double ss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double resid = ly[i] - (intercept + slope * lx[i]);
        ss += resid * resid;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

double sigma_test(double estimate, double std_error, double prediction) {
    if (!(std_error > 0.0))
        throw std::invalid_argument("sigma_test: std_error must be positive");
    return (estimate - prediction) / std_error;
}

} // namespace phi4n
