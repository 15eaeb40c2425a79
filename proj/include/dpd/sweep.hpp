// Batch harness for the (R, S) survival phase diagram.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dpd/model.hpp"
#include "dpd/observables.hpp"

namespace dpd::sweep {

// Initial population: cooperators occupy slots [0, cooperators), defectors
// the following slots, all with the same wealth. Without explicit
// placements every particle lands uniformly on the torus (x then y, one
// below(m) each, in slot order).
struct InitialTemplate {
    std::uint64_t cooperators = 10;
    std::uint64_t defectors = 10;
    double wealth = 10.0;
    std::vector<Site> placements;

    bool operator==(const InitialTemplate&) const = default;
};

Configuration initial_configuration(const SimParams& params, const InitialTemplate& initial, Rng& rng);

struct Preset {
    SimParams params;
    InitialTemplate initial;
    std::uint64_t event_budget = 10000;
};

// m=7, 10+10 individuals at wealth 10, d=v=b=5, wc=10, w0=3, K=10^7,
// 10^4 events, alive addressing.
Preset figure2_preset();

struct SweepSpec {
    std::vector<double> R_values;
    std::vector<double> S_values;
    std::uint64_t batch_size = 100;
    SimParams params;
    InitialTemplate initial;
    std::uint64_t event_budget = 10000;
    double t_offset = 1.0;  // T = R + t_offset
    double p_offset = -1.0; // P = S + p_offset
    std::uint64_t master_seed = 1;
    // When set, every run writes its event log here.
    std::optional<std::filesystem::path> event_log_dir;
    std::vector<std::string> event_log_keys = {"coop_alive", "def_alive"};
};

PayoffMatrix cell_payoffs(double R, double S, const SweepSpec& spec);

// Seed of one run: derive_seed(master, {label("cell"), bits(R), bits(S), run}).
// Keyed by values, so it does not depend on grid layout or scheduling.
std::uint64_t run_seed(std::uint64_t master, double R, double S, std::uint64_t run);

// One run: placement from derive_seed(seed, {label("placement")}), events from
// derive_seed(seed, {label("events")}); survival counts after the budget.
SurvivalCounts run_once(double R, double S, const SweepSpec& spec, std::uint64_t run);

struct CellResult {
    double R = 0.0;
    double S = 0.0;
    double mean_coop = 0.0;
    double mean_def = 0.0;
    std::vector<SurvivalCounts> runs;
    double runtime_seconds = 0.0;
};

CellResult run_cell(double R, double S, const SweepSpec& spec);

struct SweepGrid {
    std::uint64_t batch_size = 0;
    std::vector<CellResult> cells; // ascending R, then S
};

// Runs every (cell, run) pair on `parallelism` threads; results are gathered
// by key, so the grid is identical for any thread count.
SweepGrid run_grid(const SweepSpec& spec, unsigned parallelism);

std::string long_csv(const SweepGrid& grid);
std::string matrix_csv(const SweepGrid& grid);

// Writes the long CSV (R,S,mean_coop,mean_def,batch_size) and the dense
// mean_coop matrix (rows R, columns S).
void emit_heatmap(const SweepGrid& grid, const std::filesystem::path& long_path,
                  const std::filesystem::path& matrix_path);

} // namespace dpd::sweep
