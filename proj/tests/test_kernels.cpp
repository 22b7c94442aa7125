#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "phi4n/kernels.hpp"

#include <cmath>
#include <random>

using namespace phi4n;

TEST_CASE("limit kernel spectrum stays in (0, 2)") {
    const KernelSet ks = build_kernels(make_spec(4, 1.0));
    const SpectralTable gh = dft_forward(ks.G);
    for (const auto& c : gh.c) {
        CHECK(c.real() > 0.0);
        CHECK(c.real() < 2.0);
        CHECK(std::abs(c.imag()) < 1e-12);
    }
}

TEST_CASE("closure C2*G + G = 2 C2 on the (M, m) grid") {
    for (const int M : {4, 5, 6}) {
        for (const double m : {1.0, 5.0}) {
            const KernelSet ks = build_kernels(make_spec(M, m));
            const ScalarLattice conv = convolve(ks.C2, ks.G);
            double worst = 0.0, scale = 0.0;
            for (size_t i = 0; i < conv.v.size(); ++i) {
                worst = std::max(worst, std::abs(conv.v[i] + ks.G.v[i] - 2.0 * ks.C2.v[i]));
                scale = std::max(scale, std::abs(ks.C2.v[i]));
            }
            CHECK(worst <= 1e-10 * scale);
        }
    }
}

TEST_CASE("resolvent inverts f -> f + C2*f") {
    const KernelSet ks = build_kernels(make_spec(5, 5.0));
    std::mt19937_64 rng(97);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        ScalarLattice f(ks.spec);
        double scale = 0.0;
        for (double& v : f.v) {
            v = normal(rng);
            scale = std::max(scale, std::abs(v));
        }
        ScalarLattice g = convolve(ks.C2, f);
        for (size_t i = 0; i < g.v.size(); ++i)
            g.v[i] += f.v[i];
        ScalarLattice back = convolve(ks.L, g);
        for (size_t i = 0; i < back.v.size(); ++i)
            back.v[i] += g.v[i];
        double worst = 0.0;
        for (size_t i = 0; i < back.v.size(); ++i)
            worst = std::max(worst, std::abs(back.v[i] - f.v[i]));
        CHECK(worst <= 1e-10 * scale);
    }
}

TEST_CASE("shift constant identities") {
    for (const int M : {3, 4, 5}) {
        for (const double m : {1.0, 5.0}) {
            const KernelSet ks = build_kernels(make_spec(M, m));
            CHECK(std::abs(ks.c1 - (2.0 * ks.C2.at(0, 0) - ks.G.at(0, 0))) <= 1e-12 * ks.c1);
            CHECK(ks.c1 > 0.0);

            const ScalarLattice kg = convolve(ks.C2, ks.G);
            CHECK(kg.at(0, 0) == doctest::Approx(ks.c1).epsilon(1e-11));
        }
    }
}

TEST_CASE("single-site lattice closes in closed form") {
    const KernelSet ks = build_kernels(make_spec(0, 1.0));
    CHECK(ks.a_eps == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ks.C.at(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ks.C2.at(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ks.G.at(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(ks.c1 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(ks.L.at(0, 0) == doctest::Approx(-0.5).epsilon(1e-13));
}

TEST_CASE("resolvent spectrum and delta + L inversion identity") {
    const KernelSet ks = build_kernels(make_spec(4, 5.0));
    const SpectralTable lh = dft_forward(ks.L);
    const SpectralTable c2h = dft_forward(ks.C2);
    for (size_t i = 0; i < lh.c.size(); ++i) {
        const double l = lh.c[i].real();
        const double s = c2h.c[i].real();
        CHECK(l < 0.0);
        CHECK(l > -1.0);
        CHECK(std::abs((1.0 + l) * (1.0 + s) - 1.0) < 1e-12);
    }
}

TEST_CASE("kernels are even") {
    const KernelSet ks = build_kernels(make_spec(4, 1.0));
    for (const ScalarLattice* k : {&ks.C, &ks.C2, &ks.G, &ks.L})
        for (int x1 = 0; x1 < ks.spec.n; ++x1)
            for (int x2 = 0; x2 < ks.spec.n; ++x2)
                CHECK(k->at_wrapped(x1, x2) == k->at_wrapped(-x1, -x2));
}
