// Event-driven simulation of the spatial model through a single Poisson clock.
//
// Per step the clock rate is
//     Lambda = N (b + d) + N (N - 1) / 2 * v
// where N is the size of the addressed population (K for AllSlots). One step
// consumes generator words in this order:
//   1. holding time              exponential(Lambda)
//   2. category                  uniform01() * Lambda against [N d | pairs v | N b]
//   3. target                    move: below(N) then direction below(4)
//                                game: below(N (N - 1) / 2), decoded to i < j
//                                birth: below(N)
//   4. coin (games only)         bit(), drawn only when two defectors actually play
//   5. child slot (births only)  below(K - born), drawn only when the birth happens
#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <utility>

#include "dpd/model.hpp"
#include "dpd/rng.hpp"

namespace dpd {

enum class Direction : std::uint8_t { Up, Down, Left, Right };
enum class EventKind : std::uint8_t { Move, Game, Birth };

const char* to_string(Direction d);
const char* to_string(EventKind k);

Site step_towards(Site s, Direction d);

struct Event {
    EventKind kind = EventKind::Move;
    std::uint64_t seq = 0;   // 1-based ordinal in the induced chain
    double time = 0.0;       // clock after the event
    double dt = 0.0;         // holding time before the event
    std::uint64_t slot = 0;  // mover, first player, or parent
    std::uint64_t other = 0; // second player, or child slot when a birth happened
    std::uint64_t pair_index = 0;
    Direction direction = Direction::Up;
    std::optional<bool> coin;
    bool applied = false;     // false when the transition was a no-op
    GameOutcome outcome;      // wealth deltas of a game that was played

    bool operator==(const Event&) const = default;
};

struct EngineState {
    Configuration config;
    SimParams params;
    GameRules rules;
    double clock = 0.0;
    std::uint64_t event_count = 0;
    Rng rng;
};

// Quantizes the payoffs; does not validate (call validate() first).
EngineState make_state(Configuration config, const SimParams& params, const PayoffMatrix& payoffs,
                       std::uint64_t seed);

// Size of the population the clock addresses.
std::uint64_t addressed_population(const EngineState& state);

struct RateBreakdown {
    double move = 0.0;
    double game = 0.0;
    double birth = 0.0;
    double total() const { return move + game + birth; }
};

RateBreakdown rates(const SimParams& params, std::uint64_t population);

// Draws the next event (steps 1-3 above) without touching the configuration.
// Throws Error(ZeroRate) when Lambda == 0.
Event next_event(EngineState& state);

// Decodes a pair index p in [0, n (n - 1) / 2) into (i, j), i < j, with
// p = j (j - 1) / 2 + i.
std::pair<std::uint64_t, std::uint64_t> decode_pair(std::uint64_t p);

// Moves a born particle one step; Unborn slots are left untouched. Returns
// whether a born particle moved.
bool apply_move(Configuration& config, std::uint64_t slot, Direction direction);

// Whether slots i and j would play: both born and co-located, and in the
// true flavor both with positive wealth.
bool can_play(const Configuration& config, std::uint64_t slot_i, std::uint64_t slot_j, Flavor flavor);

// Plays the game if can_play(); returns the applied deltas. The ghost
// per-event decrement is not part of this transition (see step()).
std::optional<GameOutcome> apply_game(Configuration& config, std::uint64_t slot_i, std::uint64_t slot_j,
                                      bool coin, Flavor flavor, const GameRules& rules);

bool can_give_birth(const Configuration& config, std::uint64_t parent, Flavor flavor, const GameRules& rules);

// Gives birth if can_give_birth(); the child slot is drawn uniformly among
// Unborn slots from `rng`. Returns the child slot.
std::optional<std::uint64_t> apply_birth(Configuration& config, std::uint64_t parent, Flavor flavor,
                                         const GameRules& rules, Rng& rng);

// Ghost dynamics: after each event, lower the wealth of every cooperator (or
// every born individual) by w0, sparing `exempt` slots.
void apply_ghost_decrement(Configuration& config, const SimParams& params, const GameRules& rules,
                           std::initializer_list<std::uint64_t> exempt);

// Applies a drawn event and advances clock and event count.
void apply_event(EngineState& state, Event& event);

Event step(EngineState& state);

struct StopCondition {
    std::optional<std::uint64_t> max_events;
    std::optional<double> max_time;
    std::function<bool(const EngineState&)> predicate;
};

enum class StopReason { MaxEvents, MaxTime, Predicate, Absorbed };

struct RunSummary {
    std::uint64_t events = 0;
    StopReason reason = StopReason::MaxEvents;
};

// Called once before the first step with no event, then after every step.
using Observer = std::function<void(const EngineState&, const Event*)>;

// Steps until a stop condition holds; conditions are checked before each
// step. With max_time the event that would cross the horizon is drawn but
// not applied, and the clock is set to the horizon. Under Born or Alive
// addressing an empty population is absorbing and ends the run; a parameter
// set that can never produce an event throws ZeroRate.
RunSummary run(EngineState& state, const StopCondition& stop, const Observer& observer = {});

} // namespace dpd
