#include "phi4n/ibp.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace phi4n {
namespace ibp {

int n_phi(const IbpGraph& g) {
    int total = 0;
    for (const Vertex& v : g.vertices)
        total += v.wavy;
    return total;
}

int parity_class(const IbpGraph& g) {
    int odd = 0;
    for (const Vertex& v : g.vertices)
        odd += v.wavy % 2;
    if (odd == 0)
        return 1;
    if (odd == 2)
        return 2;
    throw std::logic_error("parity_class: odd-wavy vertex count is neither 0 nor 2");
}

namespace {

struct Degrees {
    std::vector<int> deg_c;
    std::vector<int> deg_k;
};

Degrees degrees_of(const IbpGraph& g) {
    Degrees d;
    d.deg_c.assign(g.vertices.size(), 0);
    d.deg_k.assign(g.vertices.size(), 0);
    for (const Edge& e : g.edges) {
        auto& tab = e.kind == EdgeKind::C ? d.deg_c : d.deg_k;
        tab[e.a] += 1;
        tab[e.b] += 1;
    }
    return d;
}

} // namespace

void validate(const IbpGraph& g) {
    const int nv = static_cast<int>(g.vertices.size());
    if (g.n_special < 0 || g.n_special > nv)
        throw std::invalid_argument("ibp graph: special count out of range");
    for (int i = 0; i < nv; ++i) {
        const bool is_special = i < g.n_special;
        if ((g.vertices[i].role == VertexRole::Special) != is_special)
            throw std::invalid_argument("ibp graph: special vertices must occupy the leading indices");
        const int w = g.vertices[i].wavy;
        if (w < 0 || w > (is_special ? 2 : 3))
            throw std::invalid_argument("ibp graph: wavy marker out of range");
    }
    for (const Edge& e : g.edges) {
        if (e.a < 0 || e.a >= nv || e.b < 0 || e.b >= nv)
            throw std::invalid_argument("ibp graph: edge endpoint out of range");
        if (e.a == e.b)
            throw std::invalid_argument("ibp graph: self loops are not allowed");
    }
    const Degrees d = degrees_of(g);
    for (int i = 0; i < nv; ++i) {
        const bool is_special = i < g.n_special;
        const int budget = g.vertices[i].wavy + d.deg_c[i] + 2 * d.deg_k[i];
        if (budget != (is_special ? 2 : 4))
            throw std::invalid_argument("ibp graph: vertex budget violated");
        if (!is_special && n_phi(g) > 0 && d.deg_c[i] + d.deg_k[i] == 0 && g.vertices[i].wavy == 0)
            throw std::invalid_argument("ibp graph: isolated bare internal vertex");
    }
    parity_class(g);
}

IbpGraph start_graph(int k) {
    if (k < 1)
        throw std::invalid_argument("start_graph: k must be positive");
    IbpGraph g;
    g.n_special = k;
    g.vertices.assign(k, Vertex{VertexRole::Special, 2});
    return g;
}

namespace {

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t x) {
    h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h * 0x100000001b3ULL;
}

std::string encode_with_order(const IbpGraph& g, const std::vector<int>& new_index) {
    std::string out;
    out.reserve(8 * g.vertices.size() + 12 * g.edges.size());
    out += 'S';
    out += std::to_string(g.n_special);
    out += '|';
    std::vector<int> wavy_by_new(g.vertices.size(), 0);
    for (size_t i = 0; i < g.vertices.size(); ++i)
        wavy_by_new[new_index[i]] = g.vertices[i].wavy;
    for (int w : wavy_by_new) {
        out += static_cast<char>('0' + w);
    }
    out += '|';
    std::vector<std::tuple<int, int, int>> edges;
    edges.reserve(g.edges.size());
    for (const Edge& e : g.edges) {
        int a = new_index[e.a], b = new_index[e.b];
        if (a > b)
            std::swap(a, b);
        edges.emplace_back(a, b, e.kind == EdgeKind::C ? 0 : 1);
    }
    std::sort(edges.begin(), edges.end());
    for (const auto& [a, b, k] : edges) {
        out += std::to_string(a);
        out += k == 0 ? 'c' : 'k';
        out += std::to_string(b);
        out += ';';
    }
    return out;
}

// Canonical order of the internal vertices: iterated neighborhood-color
// refinement, then lexicographically smallest encoding over permutations
// within the residual color classes. Specials keep their indices.
std::pair<std::string, std::vector<int>> canonical_order(const IbpGraph& g) {
    const int nv = static_cast<int>(g.vertices.size());
    const Degrees d = degrees_of(g);
    std::vector<std::uint64_t> color(nv);
    for (int i = 0; i < nv; ++i) {
        if (i < g.n_special)
            color[i] = 0xABCD0000ULL + static_cast<std::uint64_t>(i);
        else
            color[i] = fnv_mix(fnv_mix(fnv_mix(0x1234ULL, g.vertices[i].wavy), d.deg_c[i]), d.deg_k[i]);
    }
    for (int round = 0; round < 5; ++round) {
        std::vector<std::vector<std::uint64_t>> nbr(nv);
        for (const Edge& e : g.edges) {
            const std::uint64_t tag = e.kind == EdgeKind::C ? 11ULL : 13ULL;
            nbr[e.a].push_back(fnv_mix(tag, color[e.b]));
            nbr[e.b].push_back(fnv_mix(tag, color[e.a]));
        }
        std::vector<std::uint64_t> next(nv);
        for (int i = 0; i < nv; ++i) {
            std::sort(nbr[i].begin(), nbr[i].end());
            std::uint64_t h = color[i];
            for (std::uint64_t x : nbr[i])
                h = fnv_mix(h, x);
            next[i] = h;
        }
        color = std::move(next);
    }

    std::vector<int> internals;
    for (int i = g.n_special; i < nv; ++i)
        internals.push_back(i);
    std::stable_sort(internals.begin(), internals.end(),
                     [&](int a, int b) { return color[a] < color[b]; });

    // group contiguous equal colors
    std::vector<std::pair<size_t, size_t>> groups;
    size_t start = 0;
    for (size_t i = 1; i <= internals.size(); ++i) {
        if (i == internals.size() || color[internals[i]] != color[internals[start]]) {
            groups.emplace_back(start, i);
            start = i;
        }
    }
    long perm_budget = 1;
    for (const auto& [a, b] : groups) {
        long f = 1;
        for (size_t t = 2; t <= b - a; ++t)
            f *= static_cast<long>(t);
        perm_budget *= f;
        if (perm_budget > 40320)
            throw std::logic_error("canonical_order: tie class too large");
    }

    std::string best;
    std::vector<int> best_order;
    std::vector<int> work = internals;
    std::function<void(size_t)> rec = [&](size_t gi) {
        if (gi == groups.size()) {
            std::vector<int> new_index(nv);
            for (int i = 0; i < g.n_special; ++i)
                new_index[i] = i;
            for (size_t s = 0; s < work.size(); ++s)
                new_index[work[s]] = g.n_special + static_cast<int>(s);
            std::string enc = encode_with_order(g, new_index);
            if (best.empty() || enc < best) {
                best = std::move(enc);
                best_order = new_index;
            }
            return;
        }
        const auto [a, b] = groups[gi];
        std::vector<int> slice(work.begin() + a, work.begin() + b);
        std::sort(slice.begin(), slice.end());
        do {
            std::copy(slice.begin(), slice.end(), work.begin() + a);
            rec(gi + 1);
        } while (std::next_permutation(slice.begin(), slice.end()));
        std::copy(internals.begin() + a, internals.begin() + b, work.begin() + a);
    };
    rec(0);
    return {best, best_order};
}

IbpGraph relabel(const IbpGraph& g, const std::vector<int>& new_index) {
    IbpGraph out = g;
    for (size_t i = 0; i < g.vertices.size(); ++i)
        out.vertices[new_index[i]] = g.vertices[i];
    for (size_t i = 0; i < g.edges.size(); ++i) {
        out.edges[i].a = new_index[g.edges[i].a];
        out.edges[i].b = new_index[g.edges[i].b];
        if (out.edges[i].a > out.edges[i].b)
            std::swap(out.edges[i].a, out.edges[i].b);
    }
    std::sort(out.edges.begin(), out.edges.end(), [](const Edge& x, const Edge& y) {
        return std::make_tuple(x.a, x.b, x.kind == EdgeKind::K) < std::make_tuple(y.a, y.b, y.kind == EdgeKind::K);
    });
    return out;
}

IbpGraph canonicalize(const IbpGraph& g) {
    auto [key, order] = canonical_order(g);
    (void)key;
    return relabel(g, order);
}

int add_internal(IbpGraph& g, int wavy) {
    g.vertices.push_back(Vertex{VertexRole::Internal, wavy});
    return static_cast<int>(g.vertices.size()) - 1;
}

void add_edge(IbpGraph& g, int a, int b, EdgeKind kind) {
    g.edges.push_back(Edge{a, b, kind});
}

IbpGraph shifted(const IbpGraph& g, long num, long den, int d_twice_power) {
    IbpGraph out = g;
    out.coefficient *= Rational(num, den);
    out.twice_power += d_twice_power;
    return out;
}

} // namespace

std::string canonical_key(const IbpGraph& g) {
    return canonical_order(g).first;
}

int rewrite_vertex(const IbpGraph& g) {
    const int cls = parity_class(g);
    for (size_t i = 0; i < g.vertices.size(); ++i) {
        if (cls == 1 && g.vertices[i].wavy == 2)
            return static_cast<int>(i);
        if (cls == 2 && g.vertices[i].wavy % 2 == 1)
            return static_cast<int>(i);
    }
    throw std::invalid_argument("rewrite_vertex: no rewritable vertex");
}

std::vector<IbpGraph> rewrite_class1(const IbpGraph& g, int v) {
    if (parity_class(g) != 1)
        throw std::invalid_argument("rewrite_class1: graph is not class 1");
    if (v < 0 || v >= static_cast<int>(g.vertices.size()) || g.vertices[v].wavy != 2)
        throw std::invalid_argument("rewrite_class1: chosen vertex is not double-wavy");

    std::vector<int> w2;
    for (size_t i = 0; i < g.vertices.size(); ++i)
        if (static_cast<int>(i) != v && g.vertices[i].wavy == 2)
            w2.push_back(static_cast<int>(i));

    // every child resolves the convolution with the K junction at v; the two
    // C legs the step creates hang off the junction
    auto with_junction = [&](IbpGraph base, int* junction) {
        base.vertices[v].wavy = 0;
        *junction = add_internal(base, 0);
        add_edge(base, v, *junction, EdgeKind::K);
        return base;
    };

    std::vector<IbpGraph> out;
    for (int yj : w2) { // pairing with each double-wavy spectator
        int w = 0;
        IbpGraph child = with_junction(shifted(g, 2, 1, 0), &w);
        child.vertices[yj].wavy = 0;
        add_edge(child, w, yj, EdgeKind::C);
        add_edge(child, w, yj, EdgeKind::C);
        out.push_back(canonicalize(child));
    }
    { // convolution remainder at 1/N
        int w = 0;
        IbpGraph child = with_junction(shifted(g, -2, 1, 2), &w);
        const int z = add_internal(child, 2);
        add_edge(child, w, z, EdgeKind::C);
        add_edge(child, w, z, EdgeKind::C);
        out.push_back(canonicalize(child));
    }
    for (int yj : w2) { // two-spectator remainder at 1/sqrt(N), ordered pairs
        for (int ym : w2) {
            if (ym == yj)
                continue;
            int w = 0;
            IbpGraph child = with_junction(shifted(g, 4, 1, 1), &w);
            child.vertices[yj].wavy = 1;
            child.vertices[ym].wavy = 1;
            add_edge(child, w, yj, EdgeKind::C);
            add_edge(child, w, ym, EdgeKind::C);
            out.push_back(canonicalize(child));
        }
    }
    for (int yj : w2) { // single-spectator remainder at 1/sqrt(N)
        int w = 0;
        IbpGraph child = with_junction(shifted(g, -4, 1, 1), &w);
        child.vertices[yj].wavy = 1;
        const int t = add_internal(child, 3);
        add_edge(child, w, yj, EdgeKind::C);
        add_edge(child, w, t, EdgeKind::C);
        out.push_back(canonicalize(child));
    }
    { // double triple-wavy remainder at 1/sqrt(N)
        int w = 0;
        IbpGraph child = with_junction(shifted(g, 1, 1, 1), &w);
        const int t1 = add_internal(child, 3);
        const int t2 = add_internal(child, 3);
        add_edge(child, w, t1, EdgeKind::C);
        add_edge(child, w, t2, EdgeKind::C);
        out.push_back(canonicalize(child));
    }
    for (const IbpGraph& c : out)
        validate(c);
    return out;
}

std::vector<IbpGraph> rewrite_class2(const IbpGraph& g) {
    if (parity_class(g) != 2)
        throw std::invalid_argument("rewrite_class2: graph is not class 2");
    int x1 = -1, x2 = -1;
    for (size_t i = 0; i < g.vertices.size(); ++i) {
        if (g.vertices[i].wavy % 2 == 1) {
            if (x1 < 0)
                x1 = static_cast<int>(i);
            else
                x2 = static_cast<int>(i);
        }
    }
    const int m2 = (g.vertices[x2].wavy - 1) / 2;
    std::vector<int> w2;
    for (size_t i = 0; i < g.vertices.size(); ++i)
        if (g.vertices[i].wavy == 2)
            w2.push_back(static_cast<int>(i));

    std::vector<IbpGraph> out;
    { // join the two odd vertices
        IbpGraph child = shifted(g, 1, 1, 0);
        child.vertices[x1].wavy -= 1;
        child.vertices[x2].wavy -= 1;
        add_edge(child, x1, x2, EdgeKind::C);
        out.push_back(canonicalize(child));
        if (m2 == 1) {
            IbpGraph extra = shifted(g, 2, 1, 2);
            extra.vertices[x1].wavy -= 1;
            extra.vertices[x2].wavy -= 1;
            add_edge(extra, x1, x2, EdgeKind::C);
            out.push_back(canonicalize(extra));
        }
    }
    for (int yj : w2) { // pairing with a double-wavy spectator
        IbpGraph child = shifted(g, 2, 1, 1);
        child.vertices[x1].wavy -= 1;
        child.vertices[yj].wavy = 1;
        add_edge(child, x1, yj, EdgeKind::C);
        out.push_back(canonicalize(child));
    }
    { // smeared triple-wavy remainder
        IbpGraph child = shifted(g, -1, 1, 1);
        child.vertices[x1].wavy -= 1;
        const int t = add_internal(child, 3);
        add_edge(child, x1, t, EdgeKind::C);
        out.push_back(canonicalize(child));
    }
    for (const IbpGraph& c : out)
        validate(c);
    return out;
}

std::vector<IbpGraph> tadpole_substitute(const IbpGraph& g) {
    if (n_phi(g) != 2)
        throw std::invalid_argument("tadpole_substitute: total wavy degree must be 2");
    int v = -1;
    for (size_t i = 0; i < g.vertices.size(); ++i)
        if (g.vertices[i].wavy == 2)
            v = static_cast<int>(i);
    if (v < 0)
        throw std::invalid_argument("tadpole_substitute: needs one isolated double-wavy vertex");

    std::vector<IbpGraph> out;
    { // resolved one-point structure
        IbpGraph child = shifted(g, 1, 1, 1);
        child.vertices[v].wavy = 0;
        const int w = add_internal(child, 0);
        add_edge(child, v, w, EdgeKind::K);
        const int t1 = add_internal(child, 3);
        const int t2 = add_internal(child, 3);
        add_edge(child, w, t1, EdgeKind::C);
        add_edge(child, w, t2, EdgeKind::C);
        out.push_back(canonicalize(child));
    }
    { // scalar correction, one extra power of s = C2hat(0)/(1+C2hat(0))
        IbpGraph child = shifted(g, -2, 1, 2);
        child.scalar_pow += 1;
        out.push_back(canonicalize(child));
    }
    for (const IbpGraph& c : out)
        validate(c);
    return out;
}

ExpansionResult expand(int k, int p) {
    if (k < 1 || k > 4)
        throw std::invalid_argument("expand: k must be in 1..4");
    if (p < 0 || p > 1)
        throw std::invalid_argument("expand: order must be 0 or 1");
    const int cutoff_twice = 2 * p + (k % 2);

    using Key = std::tuple<int, int, std::string>;
    auto key_of = [](const IbpGraph& g) {
        return Key{g.twice_power, g.scalar_pow, canonical_key(g)};
    };

    std::map<Key, IbpGraph> work;
    std::map<Key, IbpGraph> closed;
    std::map<Key, IbpGraph> remainder;

    auto push = [&](std::map<Key, IbpGraph>& dst, const IbpGraph& g) {
        const Key key = key_of(g);
        auto it = dst.find(key);
        if (it == dst.end()) {
            dst.emplace(key, g);
        } else {
            it->second.coefficient += g.coefficient;
            if (it->second.coefficient == Rational(0))
                dst.erase(it);
        }
    };

    push(work, canonicalize(start_graph(k)));
    while (!work.empty()) {
        IbpGraph g = work.begin()->second;
        work.erase(work.begin());
        if (g.coefficient == Rational(0))
            continue;
        if (g.twice_power > cutoff_twice) {
            push(remainder, g);
            continue;
        }
        if (n_phi(g) == 0) {
            push(closed, g);
            continue;
        }
        std::vector<IbpGraph> children;
        if (parity_class(g) == 2)
            children = rewrite_class2(g);
        else if (n_phi(g) == 2)
            children = tadpole_substitute(g);
        else
            children = rewrite_class1(g, rewrite_vertex(g));
        for (const IbpGraph& c : children)
            push(work, c);
    }

    ExpansionResult res;
    for (auto& [key, g] : closed)
        res.closed_terms[g.twice_power].push_back(g);
    for (auto& [key, g] : remainder)
        res.remainder_terms.push_back(g);
    return res;
}

namespace {

struct Ker {
    double d = 0.0;         // coefficient of the lattice delta
    ScalarLattice T;        // smooth part
};

struct EvalEdge {
    int a, b;
    Ker ker;
};

double integral_of(const Ker& k, double eps2) {
    double s = 0.0;
    for (double x : k.T.v)
        s += x;
    return k.d + eps2 * s;
}

Ker pointwise_merge(const Ker& k1, const Ker& k2, double inv_eps2) {
    Ker out;
    out.T = k1.T;
    out.d = k1.d * k2.d * inv_eps2 + k1.d * k2.T.at(0, 0) + k2.d * k1.T.at(0, 0);
    for (size_t i = 0; i < out.T.v.size(); ++i)
        out.T.v[i] = k1.T.v[i] * k2.T.v[i];
    return out;
}

Ker compose(const Ker& k1, const Ker& k2) {
    Ker out;
    out.d = k1.d * k2.d;
    out.T = convolve(k1.T, k2.T);
    for (size_t i = 0; i < out.T.v.size(); ++i)
        out.T.v[i] += k1.d * k2.T.v[i] + k2.d * k1.T.v[i];
    return out;
}

double ker_at(const Ker& k, int dx, int dy, double inv_eps2) {
    const int n = k.T.spec.n;
    const int wx = ((dx % n) + n) % n;
    const int wy = ((dy % n) + n) % n;
    double val = k.T.at(wx, wy);
    if (wx == 0 && wy == 0)
        val += k.d * inv_eps2;
    return val;
}

} // namespace

double evaluate(const IbpGraph& g, const KernelSet& ks, const PointTuple& specials) {
    if (static_cast<int>(specials.size()) != g.n_special)
        throw std::invalid_argument("evaluate: point tuple size must match special count");
    if (n_phi(g) != 0)
        throw std::invalid_argument("evaluate: graph still carries field legs");
    const LatticeSpec& spec = ks.spec;
    const double eps2 = spec.eps * spec.eps;
    const double inv_eps2 = 1.0 / eps2;

    double scalar = boost::rational_cast<double>(g.coefficient);
    if (g.scalar_pow > 0) {
        double c2hat0 = 0.0;
        for (double x : ks.C2.v)
            c2hat0 += x;
        c2hat0 *= eps2;
        const double s = c2hat0 / (1.0 + c2hat0);
        for (int t = 0; t < g.scalar_pow; ++t)
            scalar *= s;
    }

    const int nv = static_cast<int>(g.vertices.size());
    std::vector<bool> alive(nv, true);
    std::vector<EvalEdge> edges;
    for (const Edge& e : g.edges) {
        EvalEdge ee;
        ee.a = e.a;
        ee.b = e.b;
        if (e.kind == EdgeKind::C) {
            ee.ker.d = 0.0;
            ee.ker.T = ks.C;
        } else {
            ee.ker.d = 1.0;
            ee.ker.T = ks.L;
        }
        edges.push_back(std::move(ee));
    }

    auto degree = [&](int v) {
        int d = 0;
        for (const EvalEdge& e : edges)
            if (e.a == v || e.b == v)
                ++d;
        return d;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        // merge parallel edges pointwise
        for (size_t i = 0; i < edges.size() && !changed; ++i) {
            for (size_t j = i + 1; j < edges.size(); ++j) {
                const bool same = (edges[i].a == edges[j].a && edges[i].b == edges[j].b) ||
                                  (edges[i].a == edges[j].b && edges[i].b == edges[j].a);
                if (same) {
                    edges[i].ker = pointwise_merge(edges[i].ker, edges[j].ker, inv_eps2);
                    edges.erase(edges.begin() + j);
                    changed = true;
                    break;
                }
            }
        }
        if (changed)
            continue;
        for (int v = g.n_special; v < nv && !changed; ++v) {
            if (!alive[v])
                continue;
            const int d = degree(v);
            if (d == 0) {
                alive[v] = false; // integrates to the torus volume, 1
                changed = true;
            } else if (d == 1) {
                for (size_t i = 0; i < edges.size(); ++i) {
                    if (edges[i].a == v || edges[i].b == v) {
                        scalar *= integral_of(edges[i].ker, eps2);
                        edges.erase(edges.begin() + i);
                        break;
                    }
                }
                alive[v] = false;
                changed = true;
            } else if (d == 2) {
                size_t e1 = edges.size(), e2 = edges.size();
                for (size_t i = 0; i < edges.size(); ++i) {
                    if (edges[i].a == v || edges[i].b == v) {
                        if (e1 == edges.size())
                            e1 = i;
                        else
                            e2 = i;
                    }
                }
                const int u = edges[e1].a == v ? edges[e1].b : edges[e1].a;
                const int t = edges[e2].a == v ? edges[e2].b : edges[e2].a;
                EvalEdge merged;
                merged.a = u;
                merged.b = t;
                merged.ker = compose(edges[e1].ker, edges[e2].ker);
                edges.erase(edges.begin() + e2);
                edges.erase(edges.begin() + e1);
                edges.push_back(std::move(merged));
                alive[v] = false;
                changed = true;
            }
        }
    }

    std::vector<int> residual;
    for (int v = g.n_special; v < nv; ++v)
        if (alive[v])
            residual.push_back(v);

    const int n = spec.n;
    const long cells = static_cast<long>(n) * n;
    long combos = 1;
    double work = static_cast<double>(edges.size());
    for (size_t i = 0; i < residual.size(); ++i) {
        combos *= cells;
        work *= cells;
    }
    if (work > 3e8)
        throw WorkBudgetError("evaluate: direct summation over " + std::to_string(residual.size()) +
                              " coupled vertices does not fit the work budget on this grid");

    std::vector<std::array<int, 2>> pos(nv, {0, 0});
    for (int i = 0; i < g.n_special; ++i)
        pos[i] = specials[i];

    double total = 0.0;
    for (long idx = 0; idx < combos; ++idx) {
        long rem = idx;
        for (int rv : residual) {
            const long cell = rem % cells;
            rem /= cells;
            pos[rv] = {static_cast<int>(cell / n), static_cast<int>(cell % n)};
        }
        double prod = 1.0;
        for (const EvalEdge& e : edges)
            prod *= ker_at(e.ker, pos[e.a][0] - pos[e.b][0], pos[e.a][1] - pos[e.b][1], inv_eps2);
        total += prod;
    }
    for (size_t i = 0; i < residual.size(); ++i)
        total *= eps2;
    return scalar * total;
}

double evaluate_sum(const std::vector<IbpGraph>& terms, const KernelSet& ks, const PointTuple& specials) {
    double s = 0.0;
    for (const IbpGraph& g : terms)
        s += evaluate(g, ks, specials);
    return s;
}

} // namespace ibp
} // namespace phi4n
