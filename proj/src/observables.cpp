#include "dpd/observables.hpp"

#include <algorithm>
#include <limits>

#include "dpd/csv.hpp"
#include "dpd/error.hpp"

namespace dpd {

std::uint64_t Photograph::total() const {
    std::uint64_t n = 0;
    for (const auto& [key, count] : counts) {
        n += count;
    }
    return n;
}

Photograph photograph(const Configuration& config) {
    Photograph photo;
    for (const Particle& p : config.born()) {
        if (p.alive()) {
            ++photo.counts[PhotoKey{p.position, p.strategy}];
        }
    }
    return photo;
}

Wealth total_cooperator_wealth(const Configuration& config) {
    Wealth total = 0;
    for (const Particle& p : config.born()) {
        if (p.strategy == Strategy::Cooperator) {
            total += p.wealth;
        }
    }
    return total;
}

SurvivalCounts survival_counts(const Configuration& config) {
    return SurvivalCounts{config.alive_count(Strategy::Cooperator), config.alive_count(Strategy::Defector)};
}

Wealth min_wealth(const Configuration& config, Group group) {
    std::optional<Wealth> best;
    for (const Particle& p : config.born()) {
        const bool member = group == Group::All ||
                            (group == Group::Cooperators && p.strategy == Strategy::Cooperator) ||
                            (group == Group::Defectors && p.strategy == Strategy::Defector);
        if (member) {
            best = best ? std::min(*best, p.wealth) : p.wealth;
        }
    }
    if (!best) {
        throw Error(ErrorCategory::EmptyGroup, "min_wealth over an empty group");
    }
    return *best;
}

std::optional<std::uint64_t> first_decrease(std::span<const Wealth> series, std::uint64_t offset) {
    for (std::size_t n = 1; n < series.size(); ++n) {
        if (series[n] < series[n - 1]) {
            return offset + n;
        }
    }
    return std::nullopt;
}

std::optional<std::uint64_t> first_increase(std::span<const Wealth> series, std::uint64_t offset) {
    for (std::size_t n = 1; n < series.size(); ++n) {
        if (series[n] > series[n - 1]) {
            return offset + n;
        }
    }
    return std::nullopt;
}

StoppingTimeRecord first_cd_game_time(std::span<const Wealth> cooperator_wealth) {
    return StoppingTimeRecord{StoppingKind::FirstCDGame, 0, first_decrease(cooperator_wealth)};
}

StoppingTimeRecord first_gain_time(StoppingKind kind, std::uint64_t slot, std::span<const Wealth> wealth) {
    return StoppingTimeRecord{kind, slot, first_increase(wealth)};
}

std::vector<std::uint64_t> cumulative_cd_game_times(std::span<const Wealth> cooperator_wealth) {
    std::vector<std::uint64_t> taus;
    std::uint64_t start = 0;
    while (start < cooperator_wealth.size()) {
        const auto tau = first_cd_game_time(cooperator_wealth.subspan(start)).tau;
        if (!tau) {
            break;
        }
        start += *tau;
        taus.push_back(start);
    }
    return taus;
}

namespace {

const std::vector<std::string> kKeys = {
    "born", "coop_alive", "def_alive", "coop_wealth", "def_wealth", "total_wealth", "photo_sites",
};

} // namespace

const std::vector<std::string>& observable_keys() { return kKeys; }

bool is_observable_key(const std::string& key) {
    return std::find(kKeys.begin(), kKeys.end(), key) != kKeys.end();
}

double evaluate_observable(const std::string& key, const EngineState& state) {
    const Configuration& c = state.config;
    const auto units = static_cast<double>(state.params.quanta_per_unit);
    auto wealth_of = [&](auto pred) {
        Wealth w = 0;
        for (const Particle& p : c.born()) {
            if (pred(p)) {
                w += p.wealth;
            }
        }
        return static_cast<double>(w) / units;
    };
    if (key == "born") {
        return static_cast<double>(c.born_count());
    }
    if (key == "coop_alive") {
        return static_cast<double>(c.alive_count(Strategy::Cooperator));
    }
    if (key == "def_alive") {
        return static_cast<double>(c.alive_count(Strategy::Defector));
    }
    if (key == "coop_wealth") {
        return wealth_of([](const Particle& p) { return p.strategy == Strategy::Cooperator; });
    }
    if (key == "def_wealth") {
        return wealth_of([](const Particle& p) { return p.strategy == Strategy::Defector; });
    }
    if (key == "total_wealth") {
        return wealth_of([](const Particle&) { return true; });
    }
    if (key == "photo_sites") {
        return static_cast<double>(photograph(c).counts.size());
    }
    throw Error(ErrorCategory::UnknownKey, "unknown observable '" + key + "'");
}

EventLog::EventLog(std::vector<std::string> keys, std::uint64_t stride)
    : keys_(std::move(keys)), stride_(std::max<std::uint64_t>(stride, 1)) {
    for (const auto& k : keys_) {
        if (!is_observable_key(k)) {
            throw Error(ErrorCategory::UnknownKey, "unknown observable '" + k + "'");
        }
    }
}

void EventLog::observe(const EngineState& state, const Event* event) {
    if (event != nullptr && event->seq % stride_ != 0) {
        return;
    }
    Row row{state.event_count, state.clock, event ? to_string(event->kind) : "init",
            event ? event->applied : false, {}};
    row.values.reserve(keys_.size());
    for (const auto& k : keys_) {
        row.values.push_back(evaluate_observable(k, state));
    }
    rows_.push_back(std::move(row));
}

Observer EventLog::observer() {
    return [this](const EngineState& s, const Event* e) { observe(s, e); };
}

std::string EventLog::to_csv() const {
    std::vector<std::string> header = {"seq", "clock", "kind", "applied"};
    header.insert(header.end(), keys_.begin(), keys_.end());
    std::string out = csv_row(header);
    for (const Row& r : rows_) {
        std::vector<std::string> cells = {format_number(r.seq), format_number(r.clock), r.kind,
                                          r.applied ? "1" : "0"};
        for (double v : r.values) {
            cells.push_back(format_number(v));
        }
        out += csv_row(cells);
    }
    return out;
}

} // namespace dpd
