#include "phi4n/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace phi4n {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) {
            if (it.key() == a) {
                ok = true;
                break;
            }
        }
        if (!ok)
            throw ConfigError(prefix + it.key() + ": unknown key");
    }
}

const json& require_object(const json& v, const std::string& path) {
    if (!v.is_object())
        throw ConfigError(path + " must be an object");
    return v;
}

long require_int(const json& v, const std::string& path, long lo, long hi) {
    if (!v.is_number_integer())
        throw ConfigError(path + " must be an integer");
    const long x = v.get<long>();
    if (x < lo || x > hi) {
        std::ostringstream oss;
        oss << path << " must lie in [" << lo << ", " << hi << "]";
        throw ConfigError(oss.str());
    }
    return x;
}

double require_positive_number(const json& v, const std::string& path) {
    if (!v.is_number())
        throw ConfigError(path + " must be a number");
    const double x = v.get<double>();
    if (!(x > 0.0))
        throw ConfigError(path + " must be positive");
    return x;
}

} // namespace

bool known_observable(const std::string& id) {
    static const char* ids[] = {"Q1", "Q2", "Q3", "Q4", "mixed_1", "fluct_1"};
    for (const char* s : ids)
        if (id == s)
            return true;
    return false;
}

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    require_object(j, "config");
    check_keys(j, "", {"lattice", "model", "integrator", "observables", "displacements", "seed", "output_dir", "threads"});

    RunConfig cfg;
    if (j.contains("lattice")) {
        const json& lat = require_object(j["lattice"], "lattice");
        check_keys(lat, "lattice.", {"M", "m"});
        if (lat.contains("M"))
            cfg.M = static_cast<int>(require_int(lat["M"], "lattice.M", 0, 12));
        if (lat.contains("m"))
            cfg.mass = require_positive_number(lat["m"], "lattice.m");
    }
    if (j.contains("model")) {
        const json& mod = require_object(j["model"], "model");
        check_keys(mod, "model.", {"N", "N_list"});
        if (mod.contains("N") && mod.contains("N_list"))
            throw ConfigError("model: give either N or N_list, not both");
        if (mod.contains("N")) {
            if (!mod["N"].is_number_integer() || mod["N"].get<long>() <= 0)
                throw ConfigError("model.N must be a positive integer");
            cfg.N_values = {static_cast<int>(mod["N"].get<long>())};
        } else if (mod.contains("N_list")) {
            if (!mod["N_list"].is_array() || mod["N_list"].empty())
                throw ConfigError("model.N_list must be a nonempty array");
            cfg.N_values.clear();
            for (size_t i = 0; i < mod["N_list"].size(); ++i) {
                std::ostringstream path;
                path << "model.N_list[" << i << "]";
                cfg.N_values.push_back(static_cast<int>(require_int(mod["N_list"][i], path.str(), 1, 1 << 20)));
            }
        }
    }
    if (j.contains("integrator")) {
        const json& integ = require_object(j["integrator"], "integrator");
        check_keys(integ, "integrator.", {"dt", "scheme", "mala", "steps", "burn_in", "thin"});
        if (integ.contains("dt"))
            cfg.integrator.dt = require_positive_number(integ["dt"], "integrator.dt");
        if (integ.contains("scheme")) {
            if (!integ["scheme"].is_string())
                throw ConfigError("integrator.scheme must be a string");
            try {
                cfg.integrator.scheme = scheme_from_string(integ["scheme"].get<std::string>());
            } catch (const std::exception& e) {
                throw ConfigError(std::string("integrator.scheme: ") + e.what());
            }
        }
        if (integ.contains("mala")) {
            if (!integ["mala"].is_boolean())
                throw ConfigError("integrator.mala must be a boolean");
            cfg.integrator.mala_adjust = integ["mala"].get<bool>();
        }
        if (integ.contains("steps"))
            cfg.steps = require_int(integ["steps"], "integrator.steps", 1, 1L << 40);
        if (integ.contains("burn_in"))
            cfg.integrator.burn_in_steps = require_int(integ["burn_in"], "integrator.burn_in", 0, 1L << 40);
        if (integ.contains("thin"))
            cfg.integrator.thin_stride = require_int(integ["thin"], "integrator.thin", 1, 1L << 30);
    }
    if (j.contains("observables")) {
        if (!j["observables"].is_array())
            throw ConfigError("observables must be an array of ids");
        cfg.observables.clear();
        for (const json& v : j["observables"]) {
            if (!v.is_string())
                throw ConfigError("observables entries must be strings");
            const std::string id = v.get<std::string>();
            if (!known_observable(id))
                throw ConfigError("observables: unknown observable id \"" + id + "\"");
            cfg.observables.push_back(id);
        }
        if (cfg.observables.empty())
            throw ConfigError("observables must not be empty");
    }
    if (j.contains("displacements")) {
        if (!j["displacements"].is_array() || j["displacements"].empty())
            throw ConfigError("displacements must be a nonempty array of [dx, dy] pairs");
        cfg.displacements.clear();
        for (size_t i = 0; i < j["displacements"].size(); ++i) {
            const json& d = j["displacements"][i];
            std::ostringstream path;
            path << "displacements[" << i << "]";
            if (!d.is_array() || d.size() != 2)
                throw ConfigError(path.str() + " must be a [dx, dy] pair");
            const int dx = static_cast<int>(require_int(d[0], path.str() + "[0]", -4096, 4096));
            const int dy = static_cast<int>(require_int(d[1], path.str() + "[1]", -4096, 4096));
            cfg.displacements.push_back({dx, dy});
        }
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            throw ConfigError("seed must be a nonnegative integer");
        if (j["seed"].is_number_integer() && j["seed"].get<long long>() < 0)
            throw ConfigError("seed must be a nonnegative integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("output_dir")) {
        if (!j["output_dir"].is_string() || j["output_dir"].get<std::string>().empty())
            throw ConfigError("output_dir must be a nonempty string");
        cfg.output_dir = j["output_dir"].get<std::string>();
    }
    if (j.contains("threads"))
        cfg.threads = static_cast<int>(require_int(j["threads"], "threads", 1, 256));
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    json j;
    j["lattice"] = {{"M", cfg.M}, {"m", cfg.mass}};
    j["model"] = {{"N_list", cfg.N_values}};
    j["integrator"] = {
        {"dt", cfg.integrator.dt},
        {"scheme", scheme_to_string(cfg.integrator.scheme)},
        {"mala", cfg.integrator.mala_adjust},
        {"steps", cfg.steps},
        {"burn_in", cfg.integrator.burn_in_steps},
        {"thin", cfg.integrator.thin_stride},
    };
    j["observables"] = cfg.observables;
    json disp = json::array();
    for (const auto& d : cfg.displacements)
        disp.push_back({d[0], d[1]});
    j["displacements"] = disp;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    j["threads"] = cfg.threads;
    return j;
}

std::string config_fingerprint(const RunConfig& cfg) {
    const std::string text = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace phi4n
