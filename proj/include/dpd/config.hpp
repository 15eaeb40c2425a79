// Run configuration: a flat key = value format shared by config files,
// command-line flags and run manifests.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpd/meanfield.hpp"
#include "dpd/model.hpp"
#include "dpd/sweep.hpp"

namespace dpd::cli {

enum class Mode { Spatial, Ghost, MeanfieldEnsemble, MeanfieldMaster, Linearized, Sweep };

const char* to_string(Mode mode);

struct RunConfig {
    Mode mode = Mode::Spatial;
    std::string preset = "none";
    std::uint64_t seed = 1;
    std::string out; // empty: $DPD_OUT_DIR, else ./dpd_out
    std::uint64_t stride = 1;

    // spatial, ghost, sweep
    SimParams params;
    PayoffMatrix payoffs;
    bool strict = true;
    sweep::InitialTemplate initial;
    std::uint64_t events = 10000;
    std::optional<double> max_time;
    std::vector<std::string> observables = {"born", "coop_alive", "def_alive", "coop_wealth", "def_wealth"};

    // sweep
    std::vector<double> r_grid = {3.0};
    std::vector<double> s_grid = {2.0};
    std::uint64_t batch = 100;
    double t_offset = 1.0;
    double p_offset = -1.0;
    unsigned parallelism = 1;
    bool event_logs = false;

    // mean field and linearized
    double beta0 = 0.5;
    double rho0 = 0.5;
    std::vector<std::pair<double, double>> m0 = {{10.0, 1.0}};
    bool half_rate = false;
    double t_end = 5.0;
    double dt = 0.01;
    meanfield::Scheme scheme = meanfield::Scheme::RK4;
    std::uint64_t ensemble_size = 100000;
    double sample_dt = 0.5;
    double q0 = 10.0;
    std::uint64_t paths = 10000;
    std::vector<double> times = {1.0, 10.0, 50.0};
    std::vector<double> etas = {2.0, 3.0, 5.0};
    std::vector<double> horizons = {10.0, 100.0, 1000.0};

    bool operator==(const RunConfig&) const = default;
};

// A key = value pair and where it came from, for diagnostics.
struct Entry {
    std::string key;
    std::string value;
    std::string origin; // "flag", "<file>:<line>", ...
};

// Parses "key = value" lines; '#' starts a comment. Throws ParseError with
// the line number on malformed lines or repeated keys.
std::vector<Entry> parse_entries(const std::string& text, const std::string& source);

// Reads a config file. A .json file is read as a run manifest and yields
// its config echo.
std::vector<Entry> read_entries(const std::string& path);

// Builds a config from defaults, the preset, `base_mode`, then `file`
// entries, then `flags` (flags win). Throws UnknownKey or ParseError.
RunConfig parse_config(const std::vector<Entry>& file, const std::vector<Entry>& flags,
                       std::optional<Mode> base_mode = std::nullopt);

// Every key with its value; parse_config(emit_entries(c), {}) == c.
std::vector<std::pair<std::string, std::string>> emit_entries(const RunConfig& config);
std::string emit_config(const RunConfig& config);

const std::vector<std::string>& config_keys();
bool is_config_key(const std::string& key);

// Applies the figure2 preset values to `config`.
void apply_figure2(RunConfig& config);

// Mode-specific parameter objects.
SimParams sim_params(const RunConfig& config);
meanfield::MFParams mf_params(const RunConfig& config);
sweep::SweepSpec sweep_spec(const RunConfig& config, const std::string& event_log_dir = {});

// Checks everything the selected mode will use. Throws ConstraintViolation.
void validate_config(const RunConfig& config);

} // namespace dpd::cli
