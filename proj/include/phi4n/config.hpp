#pragma once

#include "phi4n/dynamics.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace phi4n {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Full description of a run: lattice geometry, component counts, integrator
 * settings, which observables to record at which displacements, and output
 * placement. Parsed strictly; unknown or ill-typed keys are rejected with
 * the dotted path of the offending entry.
 */
struct RunConfig {
    int M = 4;
    double mass = 5.0;
    std::vector<int> N_values = {8};
    IntegratorConfig integrator;
    long steps = 10000; // retained snapshots after thinning
    std::vector<std::string> observables = {"Q1", "Q2"};
    std::vector<std::array<int, 2>> displacements = {{{0, 0}}, {{1, 0}}, {{2, 0}}};
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    int threads = 1;
};

/** Observable ids the runner understands. */
bool known_observable(const std::string& id);

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/** Canonical JSON image of the config, key-sorted, for manifests. */
nlohmann::json config_to_json(const RunConfig& cfg);

/** FNV-1a hash of the canonical serialization, as fixed-width hex. */
std::string config_fingerprint(const RunConfig& cfg);

} // namespace phi4n
