#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <map>

#include "dpd/engine.hpp"
#include "dpd/error.hpp"
#include "dpd/observables.hpp"
#include "dpd/sweep.hpp"
#include "helpers.hpp"

using namespace dpd;
using dpd::test::binomial_z;
using dpd::test::make_config;

namespace {

SimParams params_with(std::uint64_t K, double d, double v, double b, std::int64_t m = 1) {
    SimParams p;
    p.m = m;
    p.K = K;
    p.d = d;
    p.v = v;
    p.b = b;
    return p;
}

EngineState figure2_state(double R, double S, std::uint64_t seed) {
    const sweep::Preset preset = sweep::figure2_preset();
    Rng placement(derive_seed(seed, {1}));
    return make_state(sweep::initial_configuration(preset.params, preset.initial, placement), preset.params,
                      PayoffMatrix{R + 1, R, S, S - 1}, derive_seed(seed, {2}));
}

} // namespace

TEST_CASE("category rates") {
    const RateBreakdown r = rates(params_with(2, 1, 2, 1), 2);
    CHECK(r.move == 2.0);
    CHECK(r.game == 2.0);
    CHECK(r.birth == 2.0);
    CHECK(r.move / r.total() == doctest::Approx(2.0 / 6));

    CHECK(rates(params_with(1, 1, 7, 1), 1).game == 0.0);

    const RateBreakdown f = rates(params_with(10, 5, 5, 5), 10);
    CHECK(f.move == 50.0);
    CHECK(f.game == 225.0);
    CHECK(f.birth == 50.0);
    CHECK(f.total() == 10 * (5 + 5) + 45 * 5);
}

TEST_CASE("next_event draws categories, targets and directions with the stated probabilities") {
    EngineState s = make_state(make_config(1, 2, {{0, {0, 0}, 5, Strategy::Cooperator}}), params_with(2, 1, 2, 1),
                               {4, 3, 2, 1}, 11);
    const std::uint64_t n = 60000;
    std::map<EventKind, std::uint64_t> kinds;
    std::array<std::uint64_t, 2> targets{};
    std::array<std::uint64_t, 4> dirs{};
    std::uint64_t moves = 0;
    double total_dt = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const Event e = next_event(s);
        ++kinds[e.kind];
        total_dt += e.dt;
        if (e.kind == EventKind::Move) {
            ++targets[e.slot];
            ++dirs[static_cast<int>(e.direction)];
            ++moves;
        }
        if (e.kind == EventKind::Game) {
            REQUIRE(e.slot == 0);
            REQUIRE(e.other == 1);
        }
    }
    for (EventKind k : {EventKind::Move, EventKind::Game, EventKind::Birth}) {
        CHECK(binomial_z(kinds[k], n, 1.0 / 3) < 4.0);
    }
    CHECK(binomial_z(targets[0], moves, 0.5) < 4.0);
    for (std::uint64_t c : dirs) {
        CHECK(binomial_z(c, moves, 0.25) < 4.0);
    }
    // holding times are Exponential(6)
    CHECK(std::abs(total_dt / n - 1.0 / 6) < 4 * (1.0 / 6) / std::sqrt(n));
}

TEST_CASE("next_event throws ZeroRate when nothing can happen") {
    EngineState s = make_state(Configuration(1, 1), params_with(1, 0, 5, 0), {4, 3, 2, 1}, 1);
    CHECK_THROWS_AS(next_event(s), Error);
    try {
        next_event(s);
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::ZeroRate);
    }
    CHECK_THROWS_AS(run(s, StopCondition{10, {}, {}}), Error);
}

TEST_CASE("decode_pair is the inverse of j(j-1)/2 + i") {
    std::uint64_t p = 0;
    for (std::uint64_t j = 1; j < 300; ++j) {
        for (std::uint64_t i = 0; i < j; ++i, ++p) {
            REQUIRE(decode_pair(p) == std::pair{i, j});
        }
    }
    const std::uint64_t K = 10'000'000;
    const std::uint64_t last = K * (K - 1) / 2 - 1;
    CHECK(decode_pair(last) == std::pair{K - 2, K - 1});
    CHECK(decode_pair(last - (K - 2)) == std::pair<std::uint64_t, std::uint64_t>{0, K - 1});
}

TEST_CASE("apply_move wraps and ignores unborn slots") {
    Configuration c = make_config(7, 3, {{0, {6, 0}, 5, Strategy::Cooperator}});
    CHECK(apply_move(c, 0, Direction::Right));
    CHECK(c.born_at(0).position == Site{0, 0});
    CHECK(apply_move(c, 0, Direction::Down));
    CHECK(c.born_at(0).position == Site{0, 6});
    CHECK(c.born_at(0).wealth == 5);
    const Configuration before = c;
    CHECK_FALSE(apply_move(c, 2, Direction::Up));
    CHECK(c == before);

    Configuration one = make_config(1, 1, {{0, {0, 0}, 1, Strategy::Defector}});
    for (Direction d : {Direction::Up, Direction::Down, Direction::Left, Direction::Right}) {
        apply_move(one, 0, d);
        CHECK(one.born_at(0).position == Site{0, 0});
    }
}

TEST_CASE("apply_game, true flavor") {
    const GameRules r = test::rules_of({4, 3, 2, 1});
    Configuration c = make_config(7, 4,
                                  {{0, {1, 1}, 5, Strategy::Cooperator},
                                   {1, {1, 1}, 3, Strategy::Defector},
                                   {2, {1, 1}, 0, Strategy::Defector},
                                   {3, {2, 1}, 9, Strategy::Cooperator}});
    CHECK(apply_game(c, 0, 1, false, Flavor::True, r) == GameOutcome{-2, 4});
    CHECK(c.at(0).wealth == 3);
    CHECK(c.at(1).wealth == 7);
    const Configuration before = c;
    CHECK_FALSE(apply_game(c, 0, 2, false, Flavor::True, r).has_value()); // dead partner
    CHECK_FALSE(apply_game(c, 0, 3, false, Flavor::True, r).has_value()); // not co-located
    Configuration sparse = make_config(7, 4, {{0, {0, 0}, 5, Strategy::Cooperator}});
    CHECK_FALSE(apply_game(sparse, 0, 1, false, Flavor::True, r).has_value()); // unborn partner
    CHECK(c == before);
}

TEST_CASE("apply_game, ghost flavor plays with nonpositive wealth") {
    const GameRules r = test::rules_of({4, 3, 2, 1});
    Configuration c = make_config(7, 2, {{0, {0, 0}, -1, Strategy::Cooperator}, {1, {0, 0}, 3, Strategy::Defector}});
    CHECK(apply_game(c, 0, 1, false, Flavor::Ghost, r) == GameOutcome{-2, 4});
    CHECK(c.at(0).wealth == -3);
    CHECK(c.at(1).wealth == 7);
}

TEST_CASE("apply_birth, true flavor") {
    const GameRules r = test::rules_of({4, 3, 2, 1}, 3, 10);
    Rng rng(5);
    Configuration c = make_config(7, 5, {{2, {3, 4}, 11, Strategy::Defector}, {0, {0, 0}, 10, Strategy::Cooperator}});
    const auto child = apply_birth(c, 2, Flavor::True, r, rng);
    REQUIRE(child.has_value());
    CHECK(*child != 2);
    CHECK(*child != 0);
    CHECK(c.at(*child).wealth == 3);
    CHECK(c.at(*child).position == Site{3, 4});
    CHECK(c.at(*child).strategy == Strategy::Defector);
    CHECK(c.at(2).wealth == 8);
    CHECK(test::total_wealth(c) == 21);
    // wealth == wc is not enough
    CHECK_FALSE(apply_birth(c, 0, Flavor::True, r, rng).has_value());
    // unborn parent
    CHECK_FALSE(apply_birth(c, 4 == *child ? 3 : 4, Flavor::True, r, rng).has_value());

    Configuration full = make_config(7, 1, {{0, {0, 0}, 50, Strategy::Cooperator}});
    CHECK_FALSE(apply_birth(full, 0, Flavor::True, r, rng).has_value());
}

TEST_CASE("apply_birth picks the child slot uniformly among unborn slots") {
    const GameRules r = test::rules_of({4, 3, 2, 1}, 3, 10);
    Rng rng(9);
    std::map<std::uint64_t, std::uint64_t> counts;
    const std::uint64_t n = 40000;
    for (std::uint64_t i = 0; i < n; ++i) {
        Configuration c = make_config(1, 6, {{1, {0, 0}, 20, Strategy::Cooperator}, {4, {0, 0}, 1, Strategy::Defector}});
        ++counts[*apply_birth(c, 1, Flavor::True, r, rng)];
    }
    CHECK(counts.size() == 4);
    for (std::uint64_t slot : {0, 2, 3, 5}) {
        CHECK(binomial_z(counts[slot], n, 0.25) < 4.0);
    }
}

TEST_CASE("apply_birth, ghost flavor") {
    const GameRules r = test::rules_of({4, 3, 2, 1}, 3, 10);
    Rng rng(5);
    Configuration c = make_config(1, 5, {{0, {0, 0}, 20, Strategy::Cooperator}, {1, {0, 0}, 11, Strategy::Defector}});
    CHECK_FALSE(apply_birth(c, 0, Flavor::Ghost, r, rng).has_value());
    const auto child = apply_birth(c, 1, Flavor::Ghost, r, rng);
    REQUIRE(child.has_value());
    CHECK(c.at(1).wealth == 11);
    CHECK(c.at(*child).wealth == 3);
}

TEST_CASE("ghost decrement hits cooperators, spares the parent and the newborn") {
    SimParams p = params_with(6, 0, 0, 1);
    p.flavor = Flavor::Ghost;
    const GameRules r = test::rules_of({4, 3, 2, 1}, 3, 10);
    Configuration c = make_config(1, 6,
                                  {{0, {0, 0}, 5, Strategy::Cooperator},
                                   {1, {0, 0}, -2, Strategy::Cooperator},
                                   {2, {0, 0}, 5, Strategy::Defector}});
    apply_ghost_decrement(c, p, r, {});
    CHECK(c.at(0).wealth == 2);
    CHECK(c.at(1).wealth == -5);
    CHECK(c.at(2).wealth == 5);
    apply_ghost_decrement(c, p, r, {0});
    CHECK(c.at(0).wealth == 2);
    CHECK(c.at(1).wealth == -8);
    p.ghost_decrement = GhostDecrement::Everyone;
    apply_ghost_decrement(c, p, r, {1});
    CHECK(c.at(0).wealth == -1);
    CHECK(c.at(1).wealth == -8);
    CHECK(c.at(2).wealth == 2);
}

TEST_CASE("ghost step: a free defector birth, cooperators pay w0 every event") {
    SimParams p = params_with(3, 0, 0, 1);
    p.flavor = Flavor::Ghost;
    EngineState s = make_state(make_config(1, 3, {{0, {0, 0}, 20, Strategy::Defector}, {1, {0, 0}, 7, Strategy::Cooperator}}),
                                p, {4, 3, 2, 1}, 3);
    while (s.config.born_count() == 2) {
        const Wealth coop_before = s.config.at(1).wealth;
        const Event e = step(s);
        CHECK(s.config.at(1).wealth == coop_before - 3);
        CHECK(s.config.at(0).wealth == 20);
        if (e.applied) {
            CHECK(e.kind == EventKind::Birth);
            CHECK(e.slot == 0);
            CHECK(e.other == 2);
            CHECK(s.config.at(2).wealth == 3);
            CHECK(s.config.at(2).strategy == Strategy::Defector);
        }
    }
}

TEST_CASE("step is a deterministic function of the state") {
    EngineState a = figure2_state(3, 2, 77);
    EngineState b = figure2_state(3, 2, 77);
    for (int i = 0; i < 500; ++i) {
        const Event ea = step(a);
        const Event eb = step(b);
        REQUIRE(ea == eb);
    }
    CHECK(a.config == b.config);
    CHECK(a.clock == b.clock);
    CHECK(a.event_count == 500);
}

TEST_CASE("an all-dead configuration is frozen") {
    SimParams p = params_with(6, 1, 1, 1, 2);
    EngineState s = make_state(make_config(2, 6,
                                           {{0, {0, 0}, 0, Strategy::Cooperator},
                                            {1, {0, 0}, -4, Strategy::Defector},
                                            {3, {1, 1}, -1, Strategy::Defector}}),
                               p, {4, 3, 2, 1}, 8);
    std::vector<Wealth> before;
    for (const Particle& q : s.config.born()) {
        before.push_back(q.wealth);
    }
    double last_clock = 0.0;
    for (int i = 0; i < 2000; ++i) {
        step(s);
        REQUIRE(s.clock >= last_clock);
        last_clock = s.clock;
    }
    CHECK(s.config.born_count() == 3);
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(s.config.born_at(i).wealth == before[i]);
    }
}

TEST_CASE("two particles on a single site with only games: every event is their game") {
    EngineState s = make_state(make_config(1, 2, {{0, {0, 0}, 50, Strategy::Cooperator}, {1, {0, 0}, 50, Strategy::Cooperator}}),
                               params_with(2, 0, 1, 0), {4, 3, 2, 1}, 4);
    for (int i = 1; i <= 10; ++i) {
        const Event e = step(s);
        CHECK(e.kind == EventKind::Game);
        CHECK(e.applied);
        CHECK(s.config.at(0).wealth == 50 + 3 * i);
    }
}

TEST_CASE("run stops on events, time and predicates") {
    EngineState s = figure2_state(3, 2, 1);
    const Configuration initial = s.config;
    RunSummary r = run(s, StopCondition{0, {}, {}});
    CHECK(r.events == 0);
    CHECK(s.config == initial);
    CHECK(s.clock == 0.0);

    r = run(s, StopCondition{10000, {}, {}});
    CHECK(r.events == 10000);
    CHECK(s.event_count == 10000);
    CHECK(r.reason == StopReason::MaxEvents);

    EngineState t = figure2_state(3, 2, 2);
    r = run(t, StopCondition{{}, 0.25, {}});
    CHECK(r.reason == StopReason::MaxTime);
    CHECK(t.clock == 0.25);

    EngineState u = figure2_state(0, 100, 3);
    StopCondition extinct;
    extinct.max_events = 10'000'000;
    extinct.predicate = [](const EngineState& st) { return st.config.alive_count(Strategy::Cooperator) == 0; };
    r = run(u, extinct);
    CHECK(r.reason == StopReason::Predicate);
    CHECK(u.config.alive_count(Strategy::Cooperator) == 0);
}

TEST_CASE("observer sees the initial state and every event") {
    EngineState s = figure2_state(3, 2, 5);
    std::uint64_t calls = 0;
    std::uint64_t initial_calls = 0;
    run(s, StopCondition{250, {}, {}}, [&](const EngineState& st, const Event* e) {
        ++calls;
        if (!e) {
            ++initial_calls;
        } else {
            CHECK(e->seq == st.event_count);
        }
    });
    CHECK(initial_calls == 1);
    CHECK(calls == 251);
}

TEST_CASE("a single walker moves like a simple symmetric random walk") {
    SimParams p = params_with(1, 1, 0, 0, 11);
    EngineState s = make_state(make_config(11, 1, {{0, {5, 5}, 1, Strategy::Cooperator}}), p, {4, 3, 2, 1}, 21);
    std::map<std::pair<int, int>, std::uint64_t> steps;
    const std::uint64_t n = 40000;
    Site prev = s.config.born_at(0).position;
    for (std::uint64_t i = 0; i < n; ++i) {
        step(s);
        const Site now = s.config.born_at(0).position;
        int dx = static_cast<int>((now.x - prev.x + 11) % 11);
        int dy = static_cast<int>((now.y - prev.y + 11) % 11);
        dx = dx > 5 ? dx - 11 : dx;
        dy = dy > 5 ? dy - 11 : dy;
        REQUIRE(std::abs(dx) + std::abs(dy) == 1);
        ++steps[{dx, dy}];
        prev = now;
    }
    CHECK(steps.size() == 4);
    for (const auto& [delta, count] : steps) {
        CHECK(binomial_z(count, n, 0.25) < 4.0);
    }
}

TEST_CASE("addressing modes agree on the law of the first real event") {
    // K=6 slots, two co-located individuals, m=1, d=v=1, b=0. The first
    // applied event is a move with probability 2/3 and happens at rate 3.
    for (EventAddressing mode : {EventAddressing::AllSlots, EventAddressing::Born, EventAddressing::Alive}) {
        SimParams p = params_with(6, 1, 1, 0);
        p.addressing = mode;
        const std::uint64_t n = 30000;
        std::uint64_t moves = 0;
        double time = 0.0;
        for (std::uint64_t k = 0; k < n; ++k) {
            EngineState s = make_state(
                make_config(1, 6, {{1, {0, 0}, 50, Strategy::Cooperator}, {4, {0, 0}, 50, Strategy::Defector}}), p,
                {4, 3, 2, 1}, derive_seed(31, {k}));
            while (true) {
                const Event e = step(s);
                if (e.applied) {
                    moves += e.kind == EventKind::Move;
                    time += s.clock;
                    break;
                }
            }
        }
        CHECK(binomial_z(moves, n, 2.0 / 3) < 4.0);
        CHECK(std::abs(time / n - 1.0 / 3) < 4 * (1.0 / 3) / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("alive addressing ignores the dead, born addressing does not") {
    SimParams p = params_with(10, 1, 1, 1, 3);
    Configuration c = make_config(3, 10, {{0, {0, 0}, 5, Strategy::Cooperator}, {5, {0, 0}, 0, Strategy::Defector}});
    p.addressing = EventAddressing::Alive;
    EngineState a = make_state(c, p, {4, 3, 2, 1}, 1);
    CHECK(addressed_population(a) == 1);
    for (int i = 0; i < 200; ++i) {
        const Event e = step(a);
        if (e.kind == EventKind::Move) {
            CHECK(e.slot == 0);
        }
    }
    p.addressing = EventAddressing::Born;
    EngineState b = make_state(c, p, {4, 3, 2, 1}, 1);
    CHECK(addressed_population(b) == 2);
    p.addressing = EventAddressing::AllSlots;
    EngineState s = make_state(c, p, {4, 3, 2, 1}, 1);
    CHECK(addressed_population(s) == 10);
}

TEST_CASE("alive addressing: an empty population is absorbing") {
    SimParams p = params_with(4, 1, 1, 1, 2);
    p.addressing = EventAddressing::Alive;
    EngineState s = make_state(make_config(2, 4, {{0, {0, 0}, 0, Strategy::Cooperator}}), p, {4, 3, 2, 1}, 1);
    const RunSummary r = run(s, StopCondition{100, {}, {}});
    CHECK(r.reason == StopReason::Absorbed);
    CHECK(r.events == 0);
}

TEST_CASE("trajectory invariants: wealth balance, defector persistence, dead stay out") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const double R = static_cast<double>(seed * 5 % 101);
        const double S = static_cast<double>(seed * 37 % 101);
        EngineState s = figure2_state(R, S, seed);
        std::map<std::uint64_t, Wealth> dead;
        Wealth total = test::total_wealth(s.config);
        for (int i = 0; i < 3000; ++i) {
            const Event e = step(s);
            const Wealth now = test::total_wealth(s.config);
            Wealth expected = 0;
            if (e.kind == EventKind::Game && e.applied) {
                expected = e.outcome.delta_i + e.outcome.delta_j;
            }
            REQUIRE(now - total == expected);
            total = now;
            REQUIRE(s.config.alive_count(Strategy::Defector) >= 1);
            for (const auto& [slot, w] : dead) {
                REQUIRE(s.config.at(slot).wealth == w);
            }
            for (const Particle& q : s.config.born()) {
                if (q.wealth <= 0) {
                    dead.emplace(q.slot, q.wealth);
                }
            }
        }
    }
}
