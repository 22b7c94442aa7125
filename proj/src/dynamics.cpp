#include "phi4n/dynamics.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace phi4n {

Scheme scheme_from_string(const std::string& s) {
    if (s == "semi-implicit")
        return Scheme::SemiImplicit;
    if (s == "exponential-linear")
        return Scheme::ExponentialLinear;
    throw std::invalid_argument("unknown scheme '" + s + "' (expected semi-implicit or exponential-linear)");
}

std::string scheme_to_string(Scheme s) {
    return s == Scheme::SemiImplicit ? "semi-implicit" : "exponential-linear";
}

namespace {

struct ModeTables {
    // all tables in wrapped spectral order, length n^2
    std::vector<double> efac;  // exp(-rho dt)
    std::vector<double> dfac;  // (1 - efac)/rho
    std::vector<double> astd;  // sqrt((1 - efac^2)/rho)
    std::vector<double> denom; // 1/(1 + dt rho)
    std::vector<double> sistd; // sqrt(2 dt)/(1 + dt rho)
};

const ModeTables& tables_for(const LatticeSpec& spec, double dt) {
    static std::map<std::tuple<int, double, double>, ModeTables> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    const auto key = std::make_tuple(spec.n, spec.m, dt);
    auto it = cache.find(key);
    if (it != cache.end())
        return it->second;
    const int n = spec.n;
    ModeTables t;
    const size_t sz = static_cast<size_t>(n) * n;
    t.efac.resize(sz);
    t.dfac.resize(sz);
    t.astd.resize(sz);
    t.denom.resize(sz);
    t.sistd.resize(sz);
    for (int k1 = 0; k1 < n; ++k1) {
        const int c1 = k1 <= n / 2 ? k1 : k1 - n;
        for (int k2 = 0; k2 < n; ++k2) {
            const int c2 = k2 <= n / 2 ? k2 : k2 - n;
            const double rho = spec.m + laplace_symbol(spec, c1, c2);
            const size_t idx = static_cast<size_t>(k1) * n + k2;
            const double e = std::exp(-rho * dt);
            t.efac[idx] = e;
            t.dfac[idx] = (1.0 - e) / rho;
            t.astd[idx] = std::sqrt((1.0 - e * e) / rho);
            t.denom[idx] = 1.0 / (1.0 + dt * rho);
            t.sistd[idx] = std::sqrt(2.0 * dt) / (1.0 + dt * rho);
        }
    }
    return cache.emplace(key, std::move(t)).first->second;
}

using CVec = std::vector<std::complex<double>>;

CVec to_spectral(const ScalarLattice& f) {
    CVec buf(f.v.begin(), f.v.end());
    dft2_raw(buf, f.spec.n, -1);
    const double w = f.spec.eps * f.spec.eps;
    for (auto& c : buf)
        c *= w;
    return buf;
}

ScalarLattice from_spectral(CVec buf, const LatticeSpec& spec) {
    dft2_raw(buf, spec.n, +1);
    ScalarLattice out(spec);
    for (size_t i = 0; i < buf.size(); ++i)
        out.v[i] = buf[i].real();
    return out;
}

void fill_site_noise(ScalarLattice& eta, std::mt19937_64& rng) {
    // white noise with Var = eps^-2 per site, drawn row-major
    std::normal_distribution<double> gauss(0.0, static_cast<double>(eta.spec.n));
    for (double& v : eta.v)
        v = gauss(rng);
}

void check_finite(const EnsembleState& state) {
    for (const auto& f : state.phi.comp)
        for (double v : f.v)
            if (!std::isfinite(v))
                throw NonFiniteError("field state became non-finite");
    for (const auto& f : state.z.comp)
        for (double v : f.v)
            if (!std::isfinite(v))
                throw NonFiniteError("reference state became non-finite");
}

} // namespace

ScalarLattice radial_square(const MultiField& phi) {
    ScalarLattice S(phi.spec);
    for (const auto& f : phi.comp)
        for (size_t i = 0; i < S.v.size(); ++i)
            S.v[i] += f.v[i] * f.v[i];
    return S;
}

ScalarLattice sample_gff(const LatticeSpec& spec, std::mt19937_64& rng) {
    ScalarLattice eta(spec);
    fill_site_noise(eta, rng);
    CVec buf = to_spectral(eta);
    const int n = spec.n;
    for (int k1 = 0; k1 < n; ++k1) {
        const int c1 = k1 <= n / 2 ? k1 : k1 - n;
        for (int k2 = 0; k2 < n; ++k2) {
            const int c2 = k2 <= n / 2 ? k2 : k2 - n;
            buf[static_cast<size_t>(k1) * n + k2] *= std::sqrt(1.0 / (spec.m + laplace_symbol(spec, c1, c2)));
        }
    }
    return from_spectral(std::move(buf), spec);
}

EnsembleState make_ensemble(const LatticeSpec& spec, int N, std::uint64_t seed) {
    if (N < 1)
        throw std::invalid_argument("make_ensemble: N must be at least 1");
    EnsembleState st;
    st.spec = spec;
    st.N = N;
    st.a_eps = wick_constant(spec);
    st.rng.seed(seed);
    st.phi = MultiField(spec, N);
    for (auto& f : st.phi.comp)
        f = sample_gff(spec, st.rng);
    st.z = st.phi;
    return st;
}

MultiField drift(const MultiField& phi, double a_eps) {
    const ScalarLattice S = radial_square(phi);
    const double shift = (phi.N + 2.0) * a_eps;
    MultiField b(phi.spec, phi.N);
    for (int i = 0; i < phi.N; ++i)
        for (size_t x = 0; x < S.v.size(); ++x)
            b.comp[i].v[x] = -(phi.comp[i].v[x] * (S.v[x] - shift)) / phi.N;
    return b;
}

double action(const MultiField& phi, double a_eps) {
    const LatticeSpec& spec = phi.spec;
    const int n = spec.n;
    const double eps2 = spec.eps * spec.eps;
    const ScalarLattice S = radial_square(phi);
    double u = 0.0;
    const double mass_coef = 0.5 * (spec.m - (phi.N + 2.0) * a_eps / phi.N);
    for (double s : S.v)
        u += eps2 * (s * s / (4.0 * phi.N) + mass_coef * s);
    // eps^2 * |grad|^2/2 with the eps^-2 from the difference quotients cancels
    for (const auto& f : phi.comp) {
        for (int x = 0; x < n; ++x) {
            const int xp = (x + 1) % n;
            for (int y = 0; y < n; ++y) {
                const int yp = (y + 1) % n;
                const double d1 = f.at(xp, y) - f.at(x, y);
                const double d2 = f.at(x, yp) - f.at(x, y);
                u += 0.5 * (d1 * d1 + d2 * d2);
            }
        }
    }
    return u;
}

void step(EnsembleState& state, const IntegratorConfig& cfg) {
    const LatticeSpec& spec = state.spec;
    const ModeTables& mt = tables_for(spec, cfg.dt);
    const MultiField b = drift(state.phi, state.a_eps);

    std::vector<ScalarLattice> eta(state.N, ScalarLattice(spec));
    for (int i = 0; i < state.N; ++i)
        fill_site_noise(eta[i], state.rng);

    const double sq2dt = std::sqrt(2.0 * cfg.dt);
    for (int i = 0; i < state.N; ++i) {
        if (cfg.scheme == Scheme::SemiImplicit) {
            ScalarLattice tmp(spec), tmpz(spec);
            for (size_t x = 0; x < tmp.v.size(); ++x) {
                tmp.v[x] = state.phi.comp[i].v[x] + cfg.dt * b.comp[i].v[x] + sq2dt * eta[i].v[x];
                tmpz.v[x] = state.z.comp[i].v[x] + sq2dt * eta[i].v[x];
            }
            CVec ph = to_spectral(tmp), zh = to_spectral(tmpz);
            for (size_t k = 0; k < ph.size(); ++k) {
                ph[k] *= mt.denom[k];
                zh[k] *= mt.denom[k];
            }
            state.phi.comp[i] = from_spectral(std::move(ph), spec);
            state.z.comp[i] = from_spectral(std::move(zh), spec);
        } else {
            CVec ph = to_spectral(state.phi.comp[i]);
            CVec bh = to_spectral(b.comp[i]);
            CVec zh = to_spectral(state.z.comp[i]);
            CVec eh = to_spectral(eta[i]);
            for (size_t k = 0; k < ph.size(); ++k) {
                const auto noise = mt.astd[k] * eh[k];
                ph[k] = mt.efac[k] * ph[k] + mt.dfac[k] * bh[k] + noise;
                zh[k] = mt.efac[k] * zh[k] + noise;
            }
            state.phi.comp[i] = from_spectral(std::move(ph), spec);
            state.z.comp[i] = from_spectral(std::move(zh), spec);
        }
    }
    state.time += cfg.dt;
    check_finite(state);
}

bool mala_step(EnsembleState& state, const IntegratorConfig& cfg) {
    const LatticeSpec& spec = state.spec;
    const ModeTables& mt = tables_for(spec, cfg.dt);
    const size_t nm = static_cast<size_t>(spec.n) * spec.n;
    const bool semi = cfg.scheme == Scheme::SemiImplicit;

    const double u0 = action(state.phi, state.a_eps);
    const MultiField b = drift(state.phi, state.a_eps);

    std::vector<ScalarLattice> eta(state.N, ScalarLattice(spec));
    for (int i = 0; i < state.N; ++i)
        fill_site_noise(eta[i], state.rng);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u_draw = unif(state.rng);

    auto prop_mean = [&](const CVec& ph, const CVec& bh, size_t k) {
        return semi ? (ph[k] + cfg.dt * bh[k]) * mt.denom[k]
                    : mt.efac[k] * ph[k] + mt.dfac[k] * bh[k];
    };
    auto prop_std = [&](size_t k) { return semi ? mt.sistd[k] : mt.astd[k]; };

    MultiField proposal(spec, state.N);
    std::vector<CVec> ph_cur(state.N), ph_prop(state.N), mu_fwd(state.N);
    double log_q_fwd_num = 0.0; // sum |phi' - mu_fwd|^2 / (2 var)
    for (int i = 0; i < state.N; ++i) {
        ph_cur[i] = to_spectral(state.phi.comp[i]);
        const CVec bh = to_spectral(b.comp[i]);
        const CVec eh = to_spectral(eta[i]);
        mu_fwd[i].resize(nm);
        ph_prop[i].resize(nm);
        for (size_t k = 0; k < nm; ++k) {
            mu_fwd[i][k] = prop_mean(ph_cur[i], bh, k);
            ph_prop[i][k] = mu_fwd[i][k] + prop_std(k) * eh[k];
            log_q_fwd_num += std::norm(prop_std(k) * eh[k]) / (2.0 * prop_std(k) * prop_std(k));
        }
        proposal.comp[i] = from_spectral(ph_prop[i], spec);
    }

    const double u1 = action(proposal, state.a_eps);
    const MultiField b_prop = drift(proposal, state.a_eps);
    double log_q_rev_num = 0.0; // sum |phi - mu_rev|^2 / (2 var)
    for (int i = 0; i < state.N; ++i) {
        const CVec bh = to_spectral(b_prop.comp[i]);
        for (size_t k = 0; k < nm; ++k) {
            const auto mu_rev = prop_mean(ph_prop[i], bh, k);
            const double sd = prop_std(k);
            log_q_rev_num += std::norm(ph_cur[i][k] - mu_rev) / (2.0 * sd * sd);
        }
    }

    const double log_alpha = (u0 - u1) - log_q_rev_num + log_q_fwd_num;
    const bool accept = std::log(u_draw) < log_alpha;
    if (accept)
        state.phi = proposal;

    // the coupled free field moves with the shared noise either way
    for (int i = 0; i < state.N; ++i) {
        CVec zh = to_spectral(state.z.comp[i]);
        const CVec eh = to_spectral(eta[i]);
        for (size_t k = 0; k < nm; ++k) {
            if (semi)
                zh[k] = (zh[k] + std::sqrt(2.0 * cfg.dt) * eh[k]) * mt.denom[k];
            else
                zh[k] = mt.efac[k] * zh[k] + mt.astd[k] * eh[k];
        }
        state.z.comp[i] = from_spectral(std::move(zh), spec);
    }

    state.time += cfg.dt;
    check_finite(state);
    return accept;
}

ChainStats run_chain(EnsembleState& state, const IntegratorConfig& cfg, long n_samples, const Observer& observe) {
    ChainStats stats;
    auto advance = [&]() {
        if (cfg.mala_adjust) {
            ++stats.proposals;
            if (mala_step(state, cfg))
                ++stats.accepted;
        } else {
            step(state, cfg);
        }
        ++stats.steps;
    };
    for (long t = 0; t < cfg.burn_in_steps; ++t)
        advance();
    for (long s = 0; s < n_samples; ++s) {
        for (long t = 0; t < cfg.thin_stride; ++t)
            advance();
        if (observe)
            observe(state);
    }
    return stats;
}

} // namespace phi4n
