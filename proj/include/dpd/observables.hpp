// Quantities derived from configurations and trajectories: photographs,
// cooperator wealth, survival counts and first-passage stopping times.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpd/engine.hpp"
#include "dpd/model.hpp"

namespace dpd {

struct PhotoKey {
    Site site;
    Strategy strategy = Strategy::Cooperator;

    auto operator<=>(const PhotoKey&) const = default;
};

// Per (site, strategy) count of individuals with positive wealth. Keys with
// zero count are absent, so equality is equality of equivalence classes.
struct Photograph {
    std::map<PhotoKey, std::uint64_t> counts;

    std::uint64_t total() const;
    bool operator==(const Photograph&) const = default;
};

Photograph photograph(const Configuration& config);

// Signed sum over all cooperators, dead ones included.
Wealth total_cooperator_wealth(const Configuration& config);

struct SurvivalCounts {
    std::uint64_t cooperators = 0;
    std::uint64_t defectors = 0;

    bool operator==(const SurvivalCounts&) const = default;
};

SurvivalCounts survival_counts(const Configuration& config);

enum class Group { Cooperators, Defectors, All };

// Minimum wealth over the born members of the group. Throws Error(EmptyGroup).
Wealth min_wealth(const Configuration& config, Group group);

enum class StoppingKind { FirstCDGame, PerCooperatorFirstCCGame, PerDefectorFirstCDGame };

// A stopping time in event ordinals; an empty tau means it did not happen
// within the observed trajectory.
struct StoppingTimeRecord {
    StoppingKind kind = StoppingKind::FirstCDGame;
    std::uint64_t slot = 0; // the tracked individual for per-individual kinds
    std::optional<std::uint64_t> tau;

    bool infinite() const { return !tau.has_value(); }
};

// series[n] is the observed value after event n (series[0] is the initial
// state). Returns the first n >= 1 with series[n] < series[n-1] (resp. >),
// shifted by `offset`, or nothing.
std::optional<std::uint64_t> first_decrease(std::span<const Wealth> series, std::uint64_t offset = 0);
std::optional<std::uint64_t> first_increase(std::span<const Wealth> series, std::uint64_t offset = 0);

// First event at which total cooperator wealth strictly drops, from a series
// of total_cooperator_wealth values.
StoppingTimeRecord first_cd_game_time(std::span<const Wealth> cooperator_wealth);

// First strict increase of one individual's wealth series: a cooperator's
// first game with a cooperator, or a defector's first game with a cooperator.
StoppingTimeRecord first_gain_time(StoppingKind kind, std::uint64_t slot, std::span<const Wealth> wealth);

// tau_1 < tau_2 < ... : successive strict decreases of total cooperator
// wealth, each found by restarting first_cd_game_time at the previous one.
std::vector<std::uint64_t> cumulative_cd_game_times(std::span<const Wealth> cooperator_wealth);

// Named scalar observables usable as trajectory columns.
const std::vector<std::string>& observable_keys();
bool is_observable_key(const std::string& key);
// Wealth-valued observables are reported in user units.
double evaluate_observable(const std::string& key, const EngineState& state);

// Columnar event log: seq, clock, kind, applied, then one column per key.
// The initial state is row seq 0; afterwards every `stride`-th event.
class EventLog {
public:
    EventLog(std::vector<std::string> keys, std::uint64_t stride);

    void observe(const EngineState& state, const Event* event);
    Observer observer();

    std::size_t rows() const { return rows_.size(); }
    std::string to_csv() const;

private:
    struct Row {
        std::uint64_t seq;
        double clock;
        std::string kind;
        bool applied;
        std::vector<double> values;
    };

    std::vector<std::string> keys_;
    std::uint64_t stride_;
    std::vector<Row> rows_;
};

} // namespace dpd
