#include "dpd/engine.hpp"

#include <algorithm>
#include <cmath>

#include "dpd/error.hpp"

namespace dpd {

const char* to_string(Direction d) {
    switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
    }
    return "?";
}

const char* to_string(EventKind k) {
    switch (k) {
    case EventKind::Move: return "move";
    case EventKind::Game: return "game";
    case EventKind::Birth: return "birth";
    }
    return "?";
}

Site step_towards(Site s, Direction d) {
    switch (d) {
    case Direction::Up: return {s.x, s.y + 1};
    case Direction::Down: return {s.x, s.y - 1};
    case Direction::Left: return {s.x - 1, s.y};
    case Direction::Right: return {s.x + 1, s.y};
    }
    return s;
}

EngineState make_state(Configuration config, const SimParams& params, const PayoffMatrix& payoffs,
                       std::uint64_t seed) {
    return EngineState{std::move(config), params, quantize(payoffs, params), 0.0, 0, Rng(seed)};
}

std::uint64_t addressed_population(const EngineState& state) {
    switch (state.params.addressing) {
    case EventAddressing::AllSlots: return state.config.capacity();
    case EventAddressing::Born: return state.config.born_count();
    case EventAddressing::Alive: return state.config.alive_count();
    }
    return 0;
}

RateBreakdown rates(const SimParams& params, std::uint64_t population) {
    const auto n = static_cast<double>(population);
    const double pairs = population < 2 ? 0.0 : n * (n - 1.0) / 2.0;
    return RateBreakdown{n * params.d, pairs * params.v, n * params.b};
}

std::pair<std::uint64_t, std::uint64_t> decode_pair(std::uint64_t p) {
    auto tri = [](std::uint64_t j) { return j * (j - 1) / 2; };
    auto j = static_cast<std::uint64_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(p))) / 2.0);
    j = std::max<std::uint64_t>(j, 1);
    while (tri(j) > p) {
        --j;
    }
    while (tri(j + 1) <= p) {
        ++j;
    }
    return {p - tri(j), j};
}

namespace {

std::uint64_t resolve_target(const EngineState& state, std::uint64_t k) {
    const Configuration& c = state.config;
    switch (state.params.addressing) {
    case EventAddressing::AllSlots: return k;
    case EventAddressing::Born: return c.born_at(k).slot;
    case EventAddressing::Alive: return c.born_at(c.alive_at(k)).slot;
    }
    return k;
}

} // namespace

Event next_event(EngineState& state) {
    const std::uint64_t n = addressed_population(state);
    const RateBreakdown r = rates(state.params, n);
    const double total = r.total();
    if (!(total > 0.0)) {
        throw Error(ErrorCategory::ZeroRate, "total event rate is zero");
    }
    Rng& rng = state.rng;
    Event ev;
    ev.dt = rng.exponential(total);
    const double u = rng.uniform01() * total;
    if (u < r.move) {
        ev.kind = EventKind::Move;
        ev.slot = resolve_target(state, rng.below(n));
        ev.direction = static_cast<Direction>(rng.below(4));
    } else if (u < r.move + r.game) {
        ev.kind = EventKind::Game;
        ev.pair_index = rng.below(n * (n - 1) / 2);
        const auto [i, j] = decode_pair(ev.pair_index);
        ev.slot = resolve_target(state, i);
        ev.other = resolve_target(state, j);
    } else {
        ev.kind = EventKind::Birth;
        ev.slot = resolve_target(state, rng.below(n));
    }
    return ev;
}

bool apply_move(Configuration& config, std::uint64_t slot, Direction direction) {
    const auto idx = config.index_of(slot);
    if (!idx) {
        return false;
    }
    config.move_to(*idx, step_towards(config.born_at(*idx).position, direction));
    return true;
}

bool can_play(const Configuration& config, std::uint64_t slot_i, std::uint64_t slot_j, Flavor flavor) {
    const auto a = config.index_of(slot_i);
    const auto b = config.index_of(slot_j);
    if (!a || !b || *a == *b) {
        return false;
    }
    const Particle& pi = config.born_at(*a);
    const Particle& pj = config.born_at(*b);
    if (pi.position != pj.position) {
        return false;
    }
    return flavor == Flavor::Ghost || (pi.wealth > 0 && pj.wealth > 0);
}

std::optional<GameOutcome> apply_game(Configuration& config, std::uint64_t slot_i, std::uint64_t slot_j,
                                      bool coin, Flavor flavor, const GameRules& rules) {
    if (!can_play(config, slot_i, slot_j, flavor)) {
        return std::nullopt;
    }
    const std::size_t a = *config.index_of(slot_i);
    const std::size_t b = *config.index_of(slot_j);
    const GameOutcome out =
        resolve_game(config.born_at(a).strategy, config.born_at(b).strategy, coin, rules);
    config.add_wealth(a, out.delta_i);
    config.add_wealth(b, out.delta_j);
    return out;
}

bool can_give_birth(const Configuration& config, std::uint64_t parent, Flavor flavor, const GameRules& rules) {
    const auto idx = config.index_of(parent);
    if (!idx || config.born_count() >= config.capacity()) {
        return false;
    }
    const Particle& p = config.born_at(*idx);
    if (flavor == Flavor::Ghost && p.strategy != Strategy::Defector) {
        return false;
    }
    return p.wealth > rules.wc;
}

std::optional<std::uint64_t> apply_birth(Configuration& config, std::uint64_t parent, Flavor flavor,
                                         const GameRules& rules, Rng& rng) {
    if (!can_give_birth(config, parent, flavor, rules)) {
        return std::nullopt;
    }
    const std::size_t idx = *config.index_of(parent);
    const std::uint64_t child = config.unborn_slot(rng.below(config.capacity() - config.born_count()));
    const Particle p = config.born_at(idx);
    config.add(child, p.position, rules.w0, p.strategy);
    if (flavor == Flavor::True) {
        config.add_wealth(idx, -rules.w0);
    }
    return child;
}

void apply_ghost_decrement(Configuration& config, const SimParams& params, const GameRules& rules,
                           std::initializer_list<std::uint64_t> exempt) {
    for (std::size_t i = 0; i < config.born_count(); ++i) {
        const Particle& p = config.born_at(i);
        if (params.ghost_decrement == GhostDecrement::Cooperators && p.strategy != Strategy::Cooperator) {
            continue;
        }
        if (std::find(exempt.begin(), exempt.end(), p.slot) != exempt.end()) {
            continue;
        }
        config.add_wealth(i, -rules.w0);
    }
}

void apply_event(EngineState& state, Event& ev) {
    Configuration& config = state.config;
    const Flavor flavor = state.params.flavor;
    switch (ev.kind) {
    case EventKind::Move:
        ev.applied = apply_move(config, ev.slot, ev.direction);
        break;
    case EventKind::Game:
        if (can_play(config, ev.slot, ev.other, flavor)) {
            const bool dd = config.at(ev.slot).strategy == Strategy::Defector &&
                            config.at(ev.other).strategy == Strategy::Defector;
            const bool coin = dd ? state.rng.bit() : false;
            if (dd) {
                ev.coin = coin;
            }
            ev.outcome = *apply_game(config, ev.slot, ev.other, coin, flavor, state.rules);
            ev.applied = true;
        }
        break;
    case EventKind::Birth:
        if (auto child = apply_birth(config, ev.slot, flavor, state.rules, state.rng)) {
            ev.other = *child;
            ev.applied = true;
        }
        break;
    }
    if (flavor == Flavor::Ghost) {
        // The newborn starts at w0; neither it nor its parent pays this event.
        if (ev.kind == EventKind::Birth && ev.applied) {
            apply_ghost_decrement(config, state.params, state.rules, {ev.slot, ev.other});
        } else {
            apply_ghost_decrement(config, state.params, state.rules, {});
        }
    }
    state.clock += ev.dt;
    ++state.event_count;
    ev.seq = state.event_count;
    ev.time = state.clock;
}

Event step(EngineState& state) {
    Event ev = next_event(state);
    apply_event(state, ev);
    return ev;
}

RunSummary run(EngineState& state, const StopCondition& stop, const Observer& observer) {
    if (!(rates(state.params, state.config.capacity()).total() > 0.0)) {
        throw Error(ErrorCategory::ZeroRate, "parameters give a zero total event rate");
    }
    if (observer) {
        observer(state, nullptr);
    }
    RunSummary summary;
    while (true) {
        if (stop.max_events && summary.events >= *stop.max_events) {
            summary.reason = StopReason::MaxEvents;
            break;
        }
        if (stop.max_time && state.clock >= *stop.max_time) {
            summary.reason = StopReason::MaxTime;
            break;
        }
        if (stop.predicate && stop.predicate(state)) {
            summary.reason = StopReason::Predicate;
            break;
        }
        if (!(rates(state.params, addressed_population(state)).total() > 0.0)) {
            summary.reason = StopReason::Absorbed;
            break;
        }
        Event ev = next_event(state);
        if (stop.max_time && state.clock + ev.dt > *stop.max_time) {
            state.clock = *stop.max_time;
            summary.reason = StopReason::MaxTime;
            break;
        }
        apply_event(state, ev);
        ++summary.events;
        if (observer) {
            observer(state, &ev);
        }
    }
    return summary;
}

} // namespace dpd
