#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "dpd/error.hpp"
#include "dpd/observables.hpp"
#include "dpd/sweep.hpp"
#include "helpers.hpp"

using namespace dpd;
using dpd::test::make_config;

namespace {

Configuration sample_config() {
    return make_config(5, 10,
                       {{0, {1, 1}, 5, Strategy::Cooperator},
                        {3, {1, 1}, 2, Strategy::Defector},
                        {4, {2, 3}, 7, Strategy::Cooperator},
                        {8, {1, 1}, 1, Strategy::Cooperator}});
}

} // namespace

TEST_CASE("photograph ignores indices and positive wealth magnitudes") {
    const Configuration a = sample_config();
    // same individuals, other slots and insertion order
    const Configuration b = make_config(5, 10,
                                        {{9, {1, 1}, 1, Strategy::Cooperator},
                                         {2, {2, 3}, 7, Strategy::Cooperator},
                                         {6, {1, 1}, 2, Strategy::Defector},
                                         {1, {1, 1}, 5, Strategy::Cooperator}});
    CHECK(photograph(a) == photograph(b));

    Configuration richer = a;
    richer.add_wealth(0, 2); // 5 -> 7
    CHECK(photograph(richer) == photograph(a));

    Configuration dead = a;
    dead.add_wealth(0, -6); // 5 -> -1
    CHECK_FALSE(photograph(dead) == photograph(a));

    const Photograph p = photograph(a);
    CHECK(p.total() == 4);
    CHECK(p.counts.at(PhotoKey{{1, 1}, Strategy::Cooperator}) == 2);
    CHECK(p.counts.at(PhotoKey{{1, 1}, Strategy::Defector}) == 1);
    CHECK(photograph(dead).total() == 3);
}

TEST_CASE("total cooperator wealth is a signed sum") {
    CHECK(total_cooperator_wealth(make_config(3, 3, {{0, {0, 0}, 5, Strategy::Defector}})) == 0);
    CHECK(total_cooperator_wealth(
              make_config(3, 3, {{0, {0, 0}, 3, Strategy::Cooperator}, {1, {0, 0}, -2, Strategy::Cooperator}})) == 1);
    const sweep::Preset f = sweep::figure2_preset();
    Rng rng(1);
    const Configuration init = sweep::initial_configuration(f.params, f.initial, rng);
    CHECK(total_cooperator_wealth(init) == 100);
    CHECK(survival_counts(init) == SurvivalCounts{10, 10});
}

TEST_CASE("survival counts use strict positivity") {
    CHECK(survival_counts(make_config(3, 3, {{0, {0, 0}, 0, Strategy::Defector}, {1, {0, 0}, -1, Strategy::Cooperator}})) ==
          SurvivalCounts{0, 0});
    CHECK(survival_counts(sample_config()) == SurvivalCounts{3, 1});
}

TEST_CASE("min_wealth") {
    const Configuration c = make_config(3, 5,
                                        {{0, {0, 0}, 3, Strategy::Cooperator},
                                         {1, {0, 0}, -2, Strategy::Cooperator},
                                         {2, {0, 0}, 7, Strategy::Cooperator},
                                         {3, {0, 0}, 5, Strategy::Defector}});
    CHECK(min_wealth(c, Group::Cooperators) == -2);
    CHECK(min_wealth(c, Group::Defectors) == 5);
    CHECK(min_wealth(c, Group::All) == -2);
    const Configuration only_coop = make_config(3, 5, {{0, {0, 0}, 3, Strategy::Cooperator}});
    try {
        min_wealth(only_coop, Group::Defectors);
        FAIL("expected EmptyGroup");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::EmptyGroup);
    }
}

TEST_CASE("first decrease and increase of a series") {
    const std::vector<Wealth> s = {10, 10, 12, 12, 9, 15};
    CHECK(first_decrease(s) == 4u);
    CHECK(first_increase(s) == 2u);
    CHECK(first_decrease(s, 100) == 104u);
    const std::vector<Wealth> flat = {3, 3, 3};
    CHECK_FALSE(first_decrease(flat).has_value());
    const StoppingTimeRecord r = first_cd_game_time(flat);
    CHECK(r.infinite());
    CHECK(r.kind == StoppingKind::FirstCDGame);
}

TEST_CASE("cumulative CD game times restart at each previous one") {
    const std::vector<Wealth> s = {10, 8, 9, 9, 7, 7, 5, 6};
    const std::vector<std::uint64_t> taus = cumulative_cd_game_times(s);
    CHECK(taus == std::vector<std::uint64_t>{1, 4, 6});
    // composition: tau_2 is tau_1 applied to the suffix starting at tau_1
    const auto tau1 = *first_cd_game_time(s).tau;
    const std::span<const Wealth> suffix(s.data() + tau1, s.size() - tau1);
    CHECK(tau1 + *first_cd_game_time(suffix).tau == taus[1]);
}

TEST_CASE("first gain time of one individual") {
    const std::vector<Wealth> w = {5, 5, 2, 2, 5};
    const StoppingTimeRecord r = first_gain_time(StoppingKind::PerCooperatorFirstCCGame, 7, w);
    CHECK(r.slot == 7);
    CHECK(r.tau == 4u);
}

namespace {

std::vector<Wealth> coop_wealth_series(EngineState& s, std::uint64_t events) {
    std::vector<Wealth> series = {total_cooperator_wealth(s.config)};
    for (std::uint64_t i = 0; i < events; ++i) {
        step(s);
        series.push_back(total_cooperator_wealth(s.config));
    }
    return series;
}

SimParams small_params(std::int64_t m, double d, double v, double b) {
    SimParams p;
    p.m = m;
    p.K = 2;
    p.d = d;
    p.v = v;
    p.b = b;
    return p;
}

} // namespace

TEST_CASE("no defectors: tau_1 never happens") {
    EngineState s = make_state(make_config(2, 2, {{0, {0, 0}, 5, Strategy::Cooperator}, {1, {0, 0}, 5, Strategy::Cooperator}}),
                               small_params(2, 1, 1, 0), {4, 3, 2, 1}, 3);
    CHECK(first_cd_game_time(coop_wealth_series(s, 500)).infinite());
}

TEST_CASE("co-located cooperator and defector with only games: tau_1 = 1") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        EngineState s = make_state(
            make_config(1, 2, {{0, {0, 0}, 5, Strategy::Cooperator}, {1, {0, 0}, 5, Strategy::Defector}}),
            small_params(1, 0, 1, 0), {4, 3, 2, 1}, seed);
        CHECK(first_cd_game_time(coop_wealth_series(s, 3)).tau == 1u);
    }
}

TEST_CASE("tail of tau_1 decays geometrically") {
    // One cooperator and one defector walking on a 3x3 torus. Survival
    // function of tau_1 sampled at multiples of M events.
    const std::uint64_t runs = 20000;
    const std::uint64_t M = 6;
    const std::uint64_t k_max = 5;
    std::vector<std::uint64_t> beyond(k_max + 1, 0);
    for (std::uint64_t k = 0; k < runs; ++k) {
        EngineState s = make_state(
            make_config(3, 2, {{0, {0, 0}, 50, Strategy::Cooperator}, {1, {1, 1}, 50, Strategy::Defector}}),
            small_params(3, 1, 1, 0), {4, 3, 2, 1}, derive_seed(17, {k}));
        const auto tau = first_cd_game_time(coop_wealth_series(s, M * k_max)).tau;
        for (std::uint64_t j = 0; j <= k_max; ++j) {
            if (!tau || *tau > j * M) {
                ++beyond[j];
            }
        }
    }
    CHECK(beyond[0] == runs);
    double worst_ratio = 0.0;
    for (std::uint64_t j = 1; j + 1 <= k_max; ++j) {
        REQUIRE(beyond[j] > 100);
        worst_ratio = std::max(worst_ratio, static_cast<double>(beyond[j + 1]) / static_cast<double>(beyond[j]));
    }
    INFO("worst ratio " << worst_ratio);
    CHECK(worst_ratio < 0.9);
}

TEST_CASE("ghost running minimum: a calibrated floor holds on fresh runs") {
    // L is the 10% quantile of the running minimum over a calibration batch;
    // an independent batch must stay above L with frequency >= 0.9 up to noise.
    const double p = 0.1;
    const std::uint64_t batch = 400;
    auto running_min = [](std::uint64_t seed) {
        sweep::Preset f = sweep::figure2_preset();
        f.params.flavor = Flavor::Ghost;
        f.params.addressing = EventAddressing::Born;
        Rng placement(derive_seed(seed, {1}));
        EngineState s = make_state(sweep::initial_configuration(f.params, f.initial, placement), f.params,
                                   {101, 100, 2, 1}, derive_seed(seed, {2}));
        Wealth lowest = min_wealth(s.config, Group::All);
        for (int i = 0; i < 300; ++i) {
            step(s);
            lowest = std::min(lowest, min_wealth(s.config, Group::All));
        }
        return lowest;
    };
    std::vector<Wealth> calib;
    for (std::uint64_t k = 0; k < batch; ++k) {
        calib.push_back(running_min(derive_seed(1, {k})));
    }
    std::sort(calib.begin(), calib.end());
    const Wealth L = calib[static_cast<std::size_t>(p * batch)] - 1;
    std::uint64_t above = 0;
    for (std::uint64_t k = 0; k < batch; ++k) {
        above += running_min(derive_seed(2, {k})) > L;
    }
    const double se = std::sqrt(p * (1 - p) / batch);
    CHECK(static_cast<double>(above) / batch >= 1 - p - 4 * se);
}

TEST_CASE("event log columns and stride") {
    const sweep::Preset f = sweep::figure2_preset();
    Rng rng(3);
    EngineState s = make_state(sweep::initial_configuration(f.params, f.initial, rng), f.params, {4, 3, 2, 1}, 4);
    EventLog log({"born", "coop_alive", "coop_wealth"}, 10);
    run(s, StopCondition{35, {}, {}}, log.observer());
    CHECK(log.rows() == 4); // init, 10, 20, 30
    const std::string csv = log.to_csv();
    CHECK(csv.rfind("seq,clock,kind,applied,born,coop_alive,coop_wealth\n0,0,init,0,20,10,100\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(csv.find("\n30,") != std::string::npos);
}

TEST_CASE("observable keys") {
    for (const std::string& k : observable_keys()) {
        CHECK(is_observable_key(k));
    }
    CHECK_FALSE(is_observable_key("wealths"));
    const sweep::Preset f = sweep::figure2_preset();
    Rng rng(3);
    SimParams params = f.params;
    params.quanta_per_unit = 4;
    EngineState s = make_state(sweep::initial_configuration(params, f.initial, rng), params, {4, 3, 2, 1}, 4);
    CHECK(evaluate_observable("coop_wealth", s) == 100.0);
    CHECK(evaluate_observable("def_wealth", s) == 100.0);
    CHECK(evaluate_observable("total_wealth", s) == 200.0);
    CHECK(evaluate_observable("def_alive", s) == 10.0);
    CHECK_THROWS_AS(evaluate_observable("wealths", s), Error);
}

TEST_CASE("cooperator wealth changes only at games with a cooperator") {
    const sweep::Preset f = sweep::figure2_preset();
    Rng rng(8);
    EngineState s = make_state(sweep::initial_configuration(f.params, f.initial, rng), f.params, {11, 10, 5, 4}, 9);
    Wealth before = total_cooperator_wealth(s.config);
    for (int i = 0; i < 5000; ++i) {
        const Event e = step(s);
        const Wealth now = total_cooperator_wealth(s.config);
        if (now != before) {
            REQUIRE(e.kind == EventKind::Game);
            REQUIRE(e.applied);
            const bool has_coop = s.config.at(e.slot).strategy == Strategy::Cooperator ||
                                  s.config.at(e.other).strategy == Strategy::Cooperator;
            REQUIRE(has_coop);
        }
        before = now;
    }
}
