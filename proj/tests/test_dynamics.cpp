#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "phi4n/dynamics.hpp"
#include "phi4n/kernels.hpp"
#include "phi4n/stats.hpp"

#include <cmath>
#include <random>

using namespace phi4n;

TEST_CASE("scheme names round trip") {
    CHECK(scheme_from_string("semi-implicit") == Scheme::SemiImplicit);
    CHECK(scheme_from_string("exponential-linear") == Scheme::ExponentialLinear);
    CHECK(scheme_to_string(Scheme::SemiImplicit) == "semi-implicit");
    CHECK(scheme_to_string(Scheme::ExponentialLinear) == "exponential-linear");
    CHECK_THROWS_AS(scheme_from_string("euler"), std::invalid_argument);
}

TEST_CASE("free-field sampler matches the covariance") {
    const LatticeSpec spec = make_spec(3, 1.0);
    const ScalarLattice C = greens_function(spec);
    const double a = wick_constant(spec);
    std::mt19937_64 rng(1234);

    const int samples = 4000;
    double var_acc = 0.0, cov_acc = 0.0;
    const double inv_sites = 1.0 / (spec.n * spec.n);
    for (int s = 0; s < samples; ++s) {
        const ScalarLattice z = sample_gff(spec, rng);
        double var = 0.0, cov = 0.0;
        for (int x1 = 0; x1 < spec.n; ++x1) {
            for (int x2 = 0; x2 < spec.n; ++x2) {
                var += z.at(x1, x2) * z.at(x1, x2);
                cov += z.at(x1, x2) * z.at_wrapped(x1 + 1, x2);
            }
        }
        var_acc += var * inv_sites;
        cov_acc += cov * inv_sites;
    }
    var_acc /= samples;
    cov_acc /= samples;
    CHECK(std::abs(var_acc - a) < 0.05 * a);
    CHECK(std::abs(cov_acc - C.at(1, 0)) < 0.05 * a);
}

TEST_CASE("free-field sampler matches the spectral density") {
    const LatticeSpec spec = make_spec(3, 5.0);
    std::mt19937_64 rng(777);
    const int samples = 4000;
    double p00 = 0.0, p10 = 0.0, p22 = 0.0;
    for (int s = 0; s < samples; ++s) {
        const SpectralTable zh = dft_forward(sample_gff(spec, rng));
        p00 += std::norm(zh.at(0, 0));
        p10 += std::norm(zh.at(1, 0));
        p22 += std::norm(zh.at(2, 2));
    }
    p00 /= samples;
    p10 /= samples;
    p22 /= samples;
    auto chat = [&](int k1, int k2) { return 1.0 / (spec.m + laplace_symbol(spec, k1, k2)); };
    CHECK(std::abs(p00 - chat(0, 0)) < 0.1 * chat(0, 0));
    CHECK(std::abs(p10 - chat(1, 0)) < 0.1 * chat(1, 0));
    CHECK(std::abs(p22 - chat(2, 2)) < 0.1 * chat(2, 2));
}

TEST_CASE("drift reduces to the scalar cubic at N = 1") {
    const LatticeSpec spec = make_spec(3, 1.0);
    MultiField phi(spec, 1);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : phi.comp[0].v)
        v = normal(rng);
    const double a = 0.8;
    const MultiField b = drift(phi, a);
    for (size_t i = 0; i < phi.comp[0].v.size(); ++i) {
        const double p = phi.comp[0].v[i];
        CHECK(b.comp[0].v[i] == doctest::Approx(-p * p * p + 3.0 * a * p).epsilon(1e-12));
    }
}

TEST_CASE("drift and action are rotation equivariant") {
    const LatticeSpec spec = make_spec(3, 1.0);
    const int N = 3;
    MultiField phi(spec, N);
    std::mt19937_64 rng(10);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& comp : phi.comp)
        for (double& v : comp.v)
            v = normal(rng);
    const double a = 0.4;

    const double theta = 0.7;
    const double c = std::cos(theta), s = std::sin(theta);
    MultiField rot = phi;
    for (size_t i = 0; i < phi.comp[0].v.size(); ++i) {
        rot.comp[0].v[i] = c * phi.comp[0].v[i] - s * phi.comp[1].v[i];
        rot.comp[1].v[i] = s * phi.comp[0].v[i] + c * phi.comp[1].v[i];
    }

    const MultiField b = drift(phi, a);
    const MultiField br = drift(rot, a);
    for (size_t i = 0; i < phi.comp[0].v.size(); ++i) {
        const double want0 = c * b.comp[0].v[i] - s * b.comp[1].v[i];
        const double want1 = s * b.comp[0].v[i] + c * b.comp[1].v[i];
        CHECK(std::abs(br.comp[0].v[i] - want0) < 1e-10);
        CHECK(std::abs(br.comp[1].v[i] - want1) < 1e-10);
        CHECK(std::abs(br.comp[2].v[i] - b.comp[2].v[i]) < 1e-10);
    }
    CHECK(action(rot, a) == doctest::Approx(action(phi, a)).epsilon(1e-10));
}

TEST_CASE("action gradient matches mass, laplacian and drift terms") {
    const LatticeSpec spec = make_spec(2, 5.0);
    const int N = 3;
    MultiField phi(spec, N);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 0.5);
    for (auto& comp : phi.comp)
        for (double& v : comp.v)
            v = normal(rng);
    const double a = 0.3;
    const MultiField b = drift(phi, a);

    const double h = 1e-6;
    const double eps2 = spec.eps * spec.eps;
    for (const auto& [ci, x1, x2] : {std::tuple<int, int, int>{0, 0, 0}, {1, 2, 3}, {2, 1, 2}}) {
        MultiField up = phi, dn = phi;
        up.comp[ci].at(x1, x2) += h;
        dn.comp[ci].at(x1, x2) -= h;
        const double fd = (action(up, a) - action(dn, a)) / (2.0 * h);
        const ScalarLattice lap = laplacian_5pt(phi.comp[ci]);
        const double expect =
            eps2 * (spec.m * phi.comp[ci].at(x1, x2) - lap.at(x1, x2) - b.comp[ci].at(x1, x2));
        CHECK(fd == doctest::Approx(expect).epsilon(1e-5));
    }
}

TEST_CASE("coupled free field keeps its invariant variance under the exact splitting") {
    const LatticeSpec spec = make_spec(2, 5.0);
    const double inv_sites = 1.0 / (spec.n * spec.n);

    auto mean_z_square = [&](IntegratorConfig cfg, std::uint64_t seed) {
        EnsembleState state = make_ensemble(spec, 2, seed);
        double acc = 0.0;
        long count = 0;
        run_chain(state, cfg, 2500, [&](const EnsembleState& st) {
            double v = 0.0;
            for (const auto& comp : st.z.comp)
                for (double zz : comp.v)
                    v += zz * zz;
            acc += v * inv_sites / st.N;
            ++count;
        });
        CHECK(count == 2500);
        return acc / count;
    };
    const double a = wick_constant(spec);

    IntegratorConfig plain;
    plain.dt = 0.08;
    plain.scheme = Scheme::ExponentialLinear;
    plain.burn_in_steps = 200;
    plain.thin_stride = 2;
    CHECK(std::abs(mean_z_square(plain, 51) - a) < 0.07 * a);

    // at a large step the interacting field needs the rejection guard, but the
    // reference field is still moved by the exact kernel every proposal
    IntegratorConfig big = plain;
    big.dt = 0.4;
    big.mala_adjust = true;
    CHECK(std::abs(mean_z_square(big, 52) - a) < 0.07 * a);
}

TEST_CASE("metropolis adjustment accepts almost surely at vanishing step size") {
    const LatticeSpec spec = make_spec(3, 5.0);
    EnsembleState state = make_ensemble(spec, 2, 71);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.scheme = Scheme::ExponentialLinear;
    cfg.mala_adjust = true;
    cfg.burn_in_steps = 0;
    ChainStats stats = run_chain(state, cfg, 300, nullptr);
    CHECK(stats.proposals == 300);
    CHECK(stats.accept_rate() > 0.95);
}

TEST_CASE("adjusted chain agrees with an independent site-wise sampler") {
    const LatticeSpec spec = make_spec(2, 5.0);
    const int N = 1;
    const double a = wick_constant(spec);
    const double inv_sites = 1.0 / (spec.n * spec.n);

    // reference: random-walk Metropolis on exp(-action), one site at a time
    std::mt19937_64 rng(4242);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    MultiField phi(spec, N);
    for (double& v : phi.comp[0].v)
        v = 0.3 * normal(rng);
    double u_cur = action(phi, a);
    std::vector<double> ref_series;
    const int sweeps = 42000, burn = 4000;
    const double prop_sd = 0.6;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (int x1 = 0; x1 < spec.n; ++x1) {
            for (int x2 = 0; x2 < spec.n; ++x2) {
                const double old = phi.comp[0].at(x1, x2);
                phi.comp[0].at(x1, x2) = old + prop_sd * normal(rng);
                const double u_new = action(phi, a);
                if (std::log(uni(rng) + 1e-300) < u_cur - u_new)
                    u_cur = u_new;
                else
                    phi.comp[0].at(x1, x2) = old;
            }
        }
        if (sweep >= burn) {
            double s = 0.0;
            for (double v : phi.comp[0].v)
                s += v * v;
            ref_series.push_back(s * inv_sites);
        }
    }
    const EstimateResult ref = batch_estimate(ref_series, 32);

    EnsembleState state = make_ensemble(spec, N, 904);
    IntegratorConfig cfg;
    cfg.dt = 0.05;
    cfg.scheme = Scheme::ExponentialLinear;
    cfg.mala_adjust = true;
    cfg.burn_in_steps = 3000;
    std::vector<double> mala_series;
    ChainStats stats = run_chain(state, cfg, 40000, [&](const EnsembleState& st) {
        double s = 0.0;
        for (double v : st.phi.comp[0].v)
            s += v * v;
        mala_series.push_back(s * inv_sites);
    });
    const EstimateResult est = batch_estimate(mala_series, 32);

    CHECK(stats.accept_rate() > 0.3);
    const double combined = std::sqrt(ref.std_error * ref.std_error + est.std_error * est.std_error);
    CHECK(std::abs(est.mean - ref.mean) < 3.0 * combined);
}

TEST_CASE("identical seeds give identical trajectories") {
    const LatticeSpec spec = make_spec(2, 2.0);
    for (const bool mala : {false, true}) {
        EnsembleState s1 = make_ensemble(spec, 3, 33);
        EnsembleState s2 = make_ensemble(spec, 3, 33);
        EnsembleState s3 = make_ensemble(spec, 3, 34);
        IntegratorConfig cfg;
        cfg.dt = 0.05;
        cfg.scheme = Scheme::ExponentialLinear;
        cfg.mala_adjust = mala;
        cfg.burn_in_steps = 0;
        run_chain(s1, cfg, 50, nullptr);
        run_chain(s2, cfg, 50, nullptr);
        run_chain(s3, cfg, 50, nullptr);
        bool same = true, different = false;
        for (int c = 0; c < 3; ++c) {
            for (size_t i = 0; i < s1.phi.comp[c].v.size(); ++i) {
                same = same && s1.phi.comp[c].v[i] == s2.phi.comp[c].v[i] &&
                       s1.z.comp[c].v[i] == s2.z.comp[c].v[i];
                different = different || s1.phi.comp[c].v[i] != s3.phi.comp[c].v[i];
            }
        }
        CHECK(same);
        CHECK(different);
    }
}

TEST_CASE("divergent configurations raise the dedicated error") {
    const LatticeSpec spec = make_spec(2, 1.0);
    EnsembleState state = make_ensemble(spec, 1, 5);
    for (double& v : state.phi.comp[0].v)
        v = (v >= 0.0 ? 1.0 : -1.0) * 1e140;
    IntegratorConfig cfg;
    cfg.dt = 0.01;
    cfg.scheme = Scheme::SemiImplicit;
    CHECK_THROWS_AS(step(state, cfg), NonFiniteError);
}

TEST_CASE("chain bookkeeping counts burn-in, thinning and proposals") {
    const LatticeSpec spec = make_spec(2, 1.0);
    EnsembleState state = make_ensemble(spec, 2, 6);
    IntegratorConfig cfg;
    cfg.dt = 0.02;
    cfg.scheme = Scheme::ExponentialLinear;
    cfg.burn_in_steps = 11;
    cfg.thin_stride = 3;
    long observed = 0;
    ChainStats stats = run_chain(state, cfg, 7, [&](const EnsembleState&) { ++observed; });
    CHECK(observed == 7);
    CHECK(stats.steps == 11 + 7 * 3);
    CHECK(stats.proposals == 0);

    cfg.mala_adjust = true;
    ChainStats mstats = run_chain(state, cfg, 7, nullptr);
    CHECK(mstats.proposals == 11 + 7 * 3);
    CHECK(mstats.accepted <= mstats.proposals);
}
