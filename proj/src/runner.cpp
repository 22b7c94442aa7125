#include "phi4n/runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace phi4n {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write output file: " + path.string());
    out << text;
}

fs::path out_dir(const RunConfig& cfg) {
    fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const RunConfig& cfg, const std::string& command) {
    json m;
    m["command"] = command;
    m["version"] = kToolVersion;
    m["seed"] = cfg.seed;
    m["config_hash"] = config_fingerprint(cfg);
    m["config"] = config_to_json(cfg);
    write_text(out_dir(cfg) / "manifest.json", m.dump(2) + "\n");
}

void write_kernel_csv(const fs::path& path, const ScalarLattice& k) {
    std::string text = "x1,x2,value\n";
    const int n = k.spec.n;
    for (int x1 = 0; x1 < n; ++x1)
        for (int x2 = 0; x2 < n; ++x2)
            text += std::to_string(x1) + "," + std::to_string(x2) + "," + fmt(k.at(x1, x2)) + "\n";
    write_text(path, text);
}

ScalarLattice observable_field(const EnsembleState& st, const ScalarLattice& S,
                               const WickContext& ctx, const std::string& id) {
    if (id == "Q1")
        return scaled_observable(S, 1, ctx);
    if (id == "Q2")
        return scaled_observable(S, 2, ctx);
    if (id == "Q3")
        return scaled_observable(S, 3, ctx);
    if (id == "Q4")
        return scaled_observable(S, 4, ctx);
    if (id == "mixed_1")
        return mixed_observable(st.phi.comp[0], S, ctx);
    if (id == "fluct_1")
        return fluctuation_field(st.phi.comp[0], st.z.comp[0], st.N);
    throw std::invalid_argument("unknown observable id: " + id);
}

std::vector<std::string> stat_names(const RunConfig& cfg) {
    std::vector<std::string> stats = {"mean"};
    for (const auto& d : cfg.displacements)
        stats.push_back(corr_stat_name(d[0], d[1]));
    return stats;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ','))
        cells.push_back(cell);
    return cells;
}

int observable_power(const std::string& id) {
    if (id.size() == 2 && id[0] == 'Q' && id[1] >= '1' && id[1] <= '4')
        return id[1] - '0';
    return 0;
}

} // namespace

std::string corr_stat_name(int dx, int dy) {
    return "corr_" + std::to_string(dx) + "_" + std::to_string(dy);
}

std::uint64_t chain_seed(std::uint64_t base, int chain_index) {
    std::uint64_t x = base ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(chain_index + 1));
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

int default_batches(long n) {
    if (n >= 64)
        return 32;
    return static_cast<int>(std::max<long>(2, n / 2));
}

ObservableSeries run_chain_observables(const RunConfig& cfg, int N, std::uint64_t seed) {
    const LatticeSpec spec = make_spec(cfg.M, cfg.mass);
    EnsembleState state = make_ensemble(spec, N, seed);
    const WickContext ctx{N, state.a_eps};

    ObservableSeries out;
    out.N = N;
    out.observables = cfg.observables;
    out.stats = stat_names(cfg);
    out.a_eps = state.a_eps;
    out.series.assign(cfg.observables.size(),
                      std::vector<std::vector<double>>(out.stats.size()));
    for (auto& per_obs : out.series)
        for (auto& s : per_obs)
            s.reserve(cfg.steps);

    const double inv_sites = 1.0 / (spec.n * static_cast<double>(spec.n));
    Observer observe = [&](const EnsembleState& st) {
        const ScalarLattice S = radial_square(st.phi);
        for (size_t o = 0; o < cfg.observables.size(); ++o) {
            const ScalarLattice field = observable_field(st, S, ctx, cfg.observables[o]);
            double mean = 0.0;
            for (double v : field.v)
                mean += v;
            out.series[o][0].push_back(mean * inv_sites);
            const ScalarLattice corr = translation_correlator(field, field);
            for (size_t d = 0; d < cfg.displacements.size(); ++d)
                out.series[o][1 + d].push_back(
                    corr.at_wrapped(cfg.displacements[d][0], cfg.displacements[d][1]));
        }
    };
    out.chain = run_chain(state, cfg.integrator, cfg.steps, observe);
    return out;
}

double oracle_mean(const std::string& id, const KernelSet& ks) {
    const int n = observable_power(id);
    if (n > 0)
        return f_nk_oracle(MultiIndex{n}, PointTuple{{{0, 0}}}, ks);
    if (id == "mixed_1")
        return 0.0;
    throw std::invalid_argument("no closed-form prediction for observable " + id);
}

double oracle_two_point(const std::string& id, const KernelSet& ks, int dx, int dy) {
    const PointTuple pts = {{{0, 0}}, {{dx, dy}}};
    const int n = observable_power(id);
    if (n > 0)
        return f_nk_oracle(MultiIndex{n, n}, pts, ks);
    if (id == "mixed_1")
        return g_k_oracle(pts, ks);
    throw std::invalid_argument("no closed-form prediction for observable " + id);
}

int run_kernels(const RunConfig& cfg) {
    const KernelSet ks = build_kernels(make_spec(cfg.M, cfg.mass));
    const fs::path dir = out_dir(cfg);
    write_kernel_csv(dir / "C.csv", ks.C);
    write_kernel_csv(dir / "C_sq.csv", ks.C2);
    write_kernel_csv(dir / "G.csv", ks.G);
    write_kernel_csv(dir / "L.csv", ks.L);
    json rec;
    rec["M"] = cfg.M;
    rec["m"] = cfg.mass;
    rec["n"] = ks.spec.n;
    rec["a_eps"] = ks.a_eps;
    rec["c1"] = ks.c1;
    write_text(dir / "kernels.json", rec.dump(2) + "\n");
    write_manifest(cfg, "kernels");
    return 0;
}

int run_simulate(const RunConfig& cfg) {
    if (cfg.N_values.size() != 1)
        throw ConfigError("simulate runs a single chain; give model.N rather than model.N_list");
    const ObservableSeries os = run_chain_observables(cfg, cfg.N_values[0], cfg.seed);

    std::string text = "step,observable";
    for (const std::string& s : os.stats)
        text += "," + s;
    text += "\n";
    for (long t = 0; t < cfg.steps; ++t) {
        for (size_t o = 0; o < os.observables.size(); ++o) {
            text += std::to_string(t) + "," + os.observables[o];
            for (size_t s = 0; s < os.stats.size(); ++s)
                text += "," + fmt(os.series[o][s][t]);
            text += "\n";
        }
    }
    const fs::path dir = out_dir(cfg);
    write_text(dir / "series.csv", text);

    json rep;
    rep["N"] = os.N;
    rep["steps"] = os.chain.steps;
    rep["proposals"] = os.chain.proposals;
    rep["accepted"] = os.chain.accepted;
    rep["accept_rate"] = os.chain.accept_rate();
    rep["a_eps"] = os.a_eps;
    write_text(dir / "chain.json", rep.dump(2) + "\n");
    write_manifest(cfg, "simulate");
    return 0;
}

int run_estimate(const RunConfig& cfg) {
    const fs::path dir = out_dir(cfg);
    std::ifstream in(dir / "series.csv", std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open series file: " + (dir / "series.csv").string());
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("series file is empty");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "step" || header[1] != "observable")
        throw std::runtime_error("series file header must start with step,observable");
    const std::vector<std::string> stats(header.begin() + 2, header.end());

    std::vector<std::string> obs_order;
    std::map<std::string, std::vector<std::vector<double>>> columns;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("series file row has wrong arity: " + line);
        const std::string& id = cells[1];
        auto it = columns.find(id);
        if (it == columns.end()) {
            obs_order.push_back(id);
            it = columns.emplace(id, std::vector<std::vector<double>>(stats.size())).first;
        }
        for (size_t s = 0; s < stats.size(); ++s)
            it->second[s].push_back(std::strtod(cells[2 + s].c_str(), nullptr));
    }

    std::string text = "observable,stat,mean,stderr,tau_int,n\n";
    for (const std::string& id : obs_order) {
        const auto& per_stat = columns[id];
        for (size_t s = 0; s < stats.size(); ++s) {
            const EstimateResult est = batch_estimate(per_stat[s], default_batches(static_cast<long>(per_stat[s].size())));
            text += id + "," + stats[s] + "," + fmt(est.mean) + "," + fmt(est.std_error) + "," +
                    fmt(est.tau_int) + "," + std::to_string(est.n_samples) + "\n";
        }
    }
    write_text(dir / "estimates.csv", text);
    write_manifest(cfg, "estimate");
    return 0;
}

int run_oracle(const RunConfig& cfg) {
    const KernelSet ks = build_kernels(make_spec(cfg.M, cfg.mass));
    std::string text = "observable,stat,dx,dy,prediction\n";
    for (const std::string& id : cfg.observables) {
        text += id + ",mean,0,0," + fmt(oracle_mean(id, ks)) + "\n";
        for (const auto& d : cfg.displacements)
            text += id + ",corr," + std::to_string(d[0]) + "," + std::to_string(d[1]) + "," +
                    fmt(oracle_two_point(id, ks, d[0], d[1])) + "\n";
    }
    const fs::path dir = out_dir(cfg);
    write_text(dir / "predictions.csv", text);
    write_manifest(cfg, "oracle");
    return 0;
}

namespace {

std::string rational_to_string(const ibp::Rational& r) {
    std::string s = std::to_string(r.numerator());
    if (r.denominator() != 1)
        s += "/" + std::to_string(r.denominator());
    return s;
}

json graph_to_json(const ibp::IbpGraph& g) {
    json j;
    j["n_special"] = g.n_special;
    json wavy = json::array();
    for (const ibp::Vertex& v : g.vertices)
        wavy.push_back(v.wavy);
    j["wavy"] = wavy;
    json edges = json::array();
    for (const ibp::Edge& e : g.edges)
        edges.push_back({e.a, e.b, e.kind == ibp::EdgeKind::C ? "C" : "K"});
    j["edges"] = edges;
    j["coefficient"] = rational_to_string(g.coefficient);
    j["power"] = g.twice_power / 2.0;
    j["scalar_pow"] = g.scalar_pow;
    return j;
}

} // namespace

int run_expand(const RunConfig& cfg, int k, int order) {
    if (static_cast<int>(cfg.displacements.size()) < k)
        throw ConfigError("expand needs at least k displacement entries to place the special points");
    const KernelSet ks = build_kernels(make_spec(cfg.M, cfg.mass));
    const ibp::ExpansionResult res = ibp::expand(k, order);
    PointTuple points;
    for (int i = 0; i < k; ++i)
        points.push_back(cfg.displacements[i]);

    std::string text = "power,coefficient,graph,value\n";
    json dump;
    dump["k"] = k;
    dump["order"] = order;
    json closed = json::array();
    for (const auto& [twice_power, terms] : res.closed_terms) {
        for (const ibp::IbpGraph& g : terms) {
            // a closed term whose irreducible core outgrows the summation budget
            // is still reported exactly, just without a numerical value
            std::string value;
            try {
                value = fmt(ibp::evaluate(g, ks, points));
            } catch (const ibp::WorkBudgetError&) {
                value = "nan";
            }
            text += fmt(twice_power / 2.0) + "," + rational_to_string(g.coefficient) + "," +
                    ibp::canonical_key(g) + "," + value + "\n";
            closed.push_back(graph_to_json(g));
        }
    }
    json remainder = json::array();
    for (const ibp::IbpGraph& g : res.remainder_terms) {
        text += fmt(g.twice_power / 2.0) + "," + rational_to_string(g.coefficient) + "," +
                ibp::canonical_key(g) + ",nan\n";
        remainder.push_back(graph_to_json(g));
    }
    dump["closed"] = closed;
    dump["remainder"] = remainder;

    const fs::path dir = out_dir(cfg);
    write_text(dir / "expansion.csv", text);
    write_text(dir / "graphs.json", dump.dump(2) + "\n");
    write_manifest(cfg, "expand");
    return 0;
}

int run_verify(const RunConfig& cfg) {
    const LatticeSpec spec = make_spec(cfg.M, cfg.mass);
    const KernelSet ks = build_kernels(spec);
    struct Check {
        std::string name;
        double residual;
        double bound;
    };
    std::vector<Check> checks;

    {
        const ScalarLattice lap = laplacian_5pt(ks.C);
        double worst = 0.0;
        for (int x1 = 0; x1 < spec.n; ++x1) {
            for (int x2 = 0; x2 < spec.n; ++x2) {
                const double delta = (x1 == 0 && x2 == 0) ? 1.0 / (spec.eps * spec.eps) : 0.0;
                worst = std::max(worst, std::abs(cfg.mass * ks.C.at(x1, x2) - lap.at(x1, x2) - delta));
            }
        }
        checks.push_back({"greens_equation", worst * spec.eps * spec.eps, 1e-10});
    }
    {
        const ScalarLattice conv = convolve(ks.C2, ks.G);
        double worst = 0.0, scale = 0.0;
        for (size_t i = 0; i < conv.v.size(); ++i) {
            worst = std::max(worst, std::abs(conv.v[i] + ks.G.v[i] - 2.0 * ks.C2.v[i]));
            scale = std::max(scale, std::abs(ks.C2.v[i]));
        }
        checks.push_back({"limit_kernel_closure", worst / scale, 1e-10});
    }
    {
        std::mt19937_64 rng(cfg.seed + 17);
        std::normal_distribution<double> normal(0.0, 1.0);
        double worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            ScalarLattice f(spec);
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
            for (size_t i = 0; i < back.v.size(); ++i)
                worst = std::max(worst, std::abs(back.v[i] - f.v[i]) / scale);
        }
        checks.push_back({"resolvent_inversion", worst, 1e-10});
    }
    checks.push_back({"shift_constant_identity",
                      std::abs(ks.c1 - (2.0 * ks.C2.at(0, 0) - ks.G.at(0, 0))) / std::abs(ks.c1), 1e-12});
    {
        std::mt19937_64 rng(cfg.seed + 39);
        std::uniform_real_distribution<double> uni(0.2, 3.0);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const double S = uni(rng), a = uni(rng);
            const int N = 1 + static_cast<int>(rng() % 16);
            const WickContext ctx{N, a};
            const double p1 = S - N * a;
            const double p2 = S * S - (2 * N + 4) * a * S + N * (N + 2) * a * a;
            const double p3 = S * S * S - 3 * (N + 4) * a * S * S + 3 * (N + 2) * (N + 4) * a * a * S -
                              N * (N + 2) * (N + 4) * a * a * a;
            worst = std::max(worst, std::abs(radial_wick_power_value(S, 1, ctx) - p1) / std::abs(p1));
            worst = std::max(worst, std::abs(radial_wick_power_value(S, 2, ctx) - p2) / std::max(1.0, std::abs(p2)));
            worst = std::max(worst, std::abs(radial_wick_power_value(S, 3, ctx) - p3) / std::max(1.0, std::abs(p3)));
        }
        checks.push_back({"wick_polynomial_equivalence", worst, 1e-12});
    }
    {
        long expect = 1;
        bool ok = true;
        for (int k = 2; k <= 8; k += 2) {
            expect *= (k - 1);
            ok = ok && static_cast<long>(perfect_matchings(k).size()) == expect;
        }
        checks.push_back({"matching_count", ok ? 0.0 : 1.0, 0.5});
    }
    {
        const ibp::ExpansionResult res = ibp::expand(2, 0);
        const PointTuple pts = {{{0, 0}}, {{1, 0}}};
        double total = 0.0;
        for (const auto& [p, terms] : res.closed_terms)
            if (p == 0)
                total = ibp::evaluate_sum(terms, ks, pts);
        const double ref = f_k_oracle(pts, ks.G);
        checks.push_back({"expansion_leading_order", std::abs(total - ref) / std::abs(ref), 1e-8});
    }

    json rep;
    json arr = json::array();
    bool all_pass = true;
    for (const Check& c : checks) {
        const bool pass = c.residual <= c.bound;
        all_pass = all_pass && pass;
        arr.push_back({{"name", c.name}, {"residual", c.residual}, {"bound", c.bound}, {"pass", pass}});
    }
    rep["checks"] = arr;
    rep["all_pass"] = all_pass;
    const fs::path dir = out_dir(cfg);
    write_text(dir / "verify.json", rep.dump(2) + "\n");
    write_manifest(cfg, "verify");
    return all_pass ? 0 : 1;
}

int run_compare(const RunConfig& cfg) {
    const KernelSet ks = build_kernels(make_spec(cfg.M, cfg.mass));
    const int n_chains = static_cast<int>(cfg.N_values.size());
    std::vector<ObservableSeries> results(n_chains);

    const int workers = std::max(1, std::min(cfg.threads, n_chains));
    if (workers == 1) {
        for (int i = 0; i < n_chains; ++i)
            results[i] = run_chain_observables(cfg, cfg.N_values[i], chain_seed(cfg.seed, i));
    } else {
        std::atomic<int> next(0);
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                try {
                    for (int i = next.fetch_add(1); i < n_chains; i = next.fetch_add(1))
                        results[i] = run_chain_observables(cfg, cfg.N_values[i], chain_seed(cfg.seed, i));
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (std::thread& t : pool)
            t.join();
        for (const std::exception_ptr& e : errors)
            if (e)
                std::rethrow_exception(e);
    }

    // estimates for every (observable, stat, N), in config order
    std::vector<std::vector<std::vector<EstimateResult>>> est(cfg.observables.size());
    for (size_t o = 0; o < cfg.observables.size(); ++o) {
        est[o].resize(results[0].stats.size());
        for (size_t s = 0; s < results[0].stats.size(); ++s)
            for (int i = 0; i < n_chains; ++i)
                est[o][s].push_back(batch_estimate(results[i].series[o][s], default_batches(cfg.steps)));
    }

    std::string text = "observable,displacement,N,estimate,stderr,prediction,z\n";
    for (size_t o = 0; o < cfg.observables.size(); ++o) {
        const std::string& id = cfg.observables[o];
        const bool has_oracle = id != "fluct_1";
        for (size_t s = 0; s < results[0].stats.size(); ++s) {
            std::string disp = "mean";
            double prediction = 0.0;
            if (s > 0) {
                const auto& d = cfg.displacements[s - 1];
                disp = std::to_string(d[0]) + ":" + std::to_string(d[1]);
                if (has_oracle)
                    prediction = oracle_two_point(id, ks, d[0], d[1]);
            } else if (has_oracle) {
                prediction = oracle_mean(id, ks);
            }
            for (int i = 0; i < n_chains; ++i) {
                const EstimateResult& e = est[o][s][i];
                text += id + "," + disp + "," + std::to_string(cfg.N_values[i]) + "," +
                        fmt(e.mean) + "," + fmt(e.std_error) + ",";
                if (has_oracle)
                    text += fmt(prediction) + "," + fmt(sigma_test(e.mean, e.std_error, prediction));
                else
                    text += "nan,nan";
                text += "\n";
            }
        }
    }
    const fs::path dir = out_dir(cfg);
    write_text(dir / "compare.csv", text);

    std::string rates = "observable,stat,exponent,amplitude,residual\n";
    if (n_chains >= 2) {
        std::vector<double> Ns(cfg.N_values.begin(), cfg.N_values.end());
        for (size_t o = 0; o < cfg.observables.size(); ++o) {
            std::vector<double> vals;
            for (int i = 0; i < n_chains; ++i)
                vals.push_back(std::abs(est[o][0][i].mean));
            try {
                const RateFit fit = rate_fit(Ns, vals);
                rates += cfg.observables[o] + ",mean," + fmt(fit.exponent) + "," + fmt(fit.amplitude) +
                         "," + fmt(fit.residual) + "\n";
            } catch (const std::exception&) {
                rates += cfg.observables[o] + ",mean,nan,nan,nan\n";
            }
        }
    }
    write_text(dir / "rates.csv", rates);

    json rep;
    json chains = json::array();
    for (int i = 0; i < n_chains; ++i) {
        chains.push_back({{"N", cfg.N_values[i]},
                          {"steps", results[i].chain.steps},
                          {"proposals", results[i].chain.proposals},
                          {"accepted", results[i].chain.accepted},
                          {"accept_rate", results[i].chain.accept_rate()}});
    }
    rep["chains"] = chains;
    rep["a_eps"] = results[0].a_eps;
    rep["c1"] = ks.c1;
    write_text(dir / "report.json", rep.dump(2) + "\n");
    write_manifest(cfg, "compare");
    return 0;
}

} // namespace phi4n
