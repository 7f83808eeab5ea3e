#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "axon/controller.hpp"
#include "axon/diagnostics.hpp"
#include "axon/kernels.hpp"
#include "axon/params.hpp"
#include "axon/simulator.hpp"

namespace axon {

/// One sweep axis: a dotted parameter key swept linearly over [lo, hi].
struct SweepAxis {
    std::string key;
    double lo = 0.0;
    double hi = 0.0;
    int count = 1;
};

/**
 * Full scenario description, assembled from flat [section] key = value text.
 * Every key is addressable as "section.key" for --override and sweep axes.
 */
struct ScenarioConfig {
    PhysicalParams physical;
    SimConfig sim;
    std::optional<GainVector> gains;  ///< absent: default rule from the matrices
    KernelGridSettings kernels;
    DiagnosticsConfig diagnostics;
    std::vector<SweepAxis> sweep;
    int workers = 1;
    std::string out_dir = ".";

    /// Canonical flat key/value form (sorted), the basis of the config hash.
    std::map<std::string, std::string> flat() const;
    /// FNV-1a hash of the canonical form, as fixed-width hex.
    std::string hash() const;
};

/// Parses the INI-style text. Unknown keys are errors (catches typos in
/// sweeps); missing keys keep their defaults.
ScenarioConfig parse_config(const std::string& text);

/// Reads a config file; empty path yields the built-in defaults.
ScenarioConfig load_config(const std::string& path);

/// Applies one "section.key=value" override.
void apply_override(ScenarioConfig& cfg, const std::string& spec);

/// Sets a single dotted key (used by sweep axes); throws on unknown keys.
void set_key(ScenarioConfig& cfg, const std::string& key, double value);

}  // namespace axon
