#include "phi4n/oracle.hpp"

#include <numeric>
#include <stdexcept>

namespace phi4n {

namespace {

void build_matchings(std::vector<int>& free_idx, Matching& current, std::vector<Matching>& out) {
    if (free_idx.empty()) {
        out.push_back(current);
        return;
    }
    const int a = free_idx.front();
    for (size_t j = 1; j < free_idx.size(); ++j) {
        const int b = free_idx[j];
        std::vector<int> rest;
        rest.reserve(free_idx.size() - 2);
        for (size_t t = 1; t < free_idx.size(); ++t)
            if (t != j)
                rest.push_back(free_idx[t]);
        current.emplace_back(a, b);
        build_matchings(rest, current, out);
        current.pop_back();
    }
}

} // namespace

std::vector<Matching> perfect_matchings(int k) {
    if (k < 0)
        throw std::invalid_argument("perfect_matchings: negative k");
    if (k % 2 != 0)
        return {};
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<Matching> out;
    Matching current;
    build_matchings(idx, current, out);
    return out;
}

double f_k_oracle(const PointTuple& points, const ScalarLattice& kernel) {
    const int k = static_cast<int>(points.size());
    double sum = 0.0;
    for (const Matching& m : perfect_matchings(k)) {
        double prod = 1.0;
        for (const auto& [a, b] : m)
            prod *= eval_displacement(kernel, points[a], points[b]);
        sum += prod;
    }
    return sum;
}

double F_nk_oracle(const MultiIndex& n, const PointTuple& points, const ScalarLattice& kernel) {
    if (n.size() != points.size())
        throw std::invalid_argument("F_nk_oracle: tuple size mismatch");
    int total = 0;
    std::vector<int> slot_of;
    for (size_t i = 0; i < n.size(); ++i) {
        if (n[i] < 0)
            throw std::invalid_argument("F_nk_oracle: negative power");
        total += n[i];
        for (int c = 0; c < n[i]; ++c)
            slot_of.push_back(static_cast<int>(i));
    }
    if (total > 12)
        throw std::invalid_argument("F_nk_oracle: total degree above 12");
    if (total % 2 != 0)
        return 0.0;
    double sum = 0.0;
    for (const Matching& m : perfect_matchings(total)) {
        double prod = 1.0;
        bool ok = true;
        for (const auto& [a, b] : m) {
            if (slot_of[a] == slot_of[b]) {
                ok = false;
                break;
            }
            prod *= eval_displacement(kernel, points[slot_of[a]], points[slot_of[b]]);
        }
        if (ok)
            sum += prod;
    }
    return sum;
}

namespace {

double falling_weight(int n_i, int l_i) {
    // n_i! / ((n_i - 2 l_i)! l_i! 2^l_i), the number of ways to pick l_i
    // disjoint unordered pairs out of n_i labeled copies
    double w = 1.0;
    for (int t = 0; t < 2 * l_i; ++t)
        w *= n_i - t;
    for (int t = 1; t <= l_i; ++t)
        w /= 2.0 * t;
    return w;
}

} // namespace

double f_nk_oracle(const MultiIndex& n, const PointTuple& points, const KernelSet& ks) {
    if (n.size() != points.size())
        throw std::invalid_argument("f_nk_oracle: tuple size mismatch");
    int total = 0;
    for (int ni : n)
        total += ni;
    if (total > 12)
        throw std::invalid_argument("f_nk_oracle: total degree above 12");

    const size_t k = n.size();
    std::vector<int> l(k, 0);
    double sum = 0.0;
    while (true) {
        double weight = 1.0;
        int lsum = 0;
        MultiIndex reduced(k);
        for (size_t i = 0; i < k; ++i) {
            weight *= falling_weight(n[i], l[i]);
            lsum += l[i];
            reduced[i] = n[i] - 2 * l[i];
        }
        double sign_pow = 1.0;
        for (int t = 0; t < lsum; ++t)
            sign_pow *= -ks.c1;
        sum += weight * sign_pow * F_nk_oracle(reduced, points, ks.G);

        size_t pos = 0;
        while (pos < k) {
            if (2 * (l[pos] + 1) <= n[pos]) {
                ++l[pos];
                break;
            }
            l[pos] = 0;
            ++pos;
        }
        if (pos == k)
            break;
    }
    return sum;
}

double g_k_oracle(const PointTuple& points, const KernelSet& ks) {
    const int k = static_cast<int>(points.size());
    if (k % 2 != 0)
        return 0.0;
    return f_k_oracle(points, ks.C) * f_k_oracle(points, ks.G);
}

double hermite(int n, double x) {
    if (n < 0)
        throw std::invalid_argument("hermite: negative order");
    double h0 = 1.0, h1 = x;
    if (n == 0)
        return h0;
    for (int t = 1; t < n; ++t) {
        const double h2 = x * h1 - t * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

} // namespace phi4n
