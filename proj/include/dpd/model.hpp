// Domain types for the spatial demographic prisoner's dilemma: strategies,
// payoffs, simulation parameters, particles and configurations.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dpd {

// Wealth is an integer count of payoff quanta (see SimParams::quanta_per_unit).
using Wealth = std::int64_t;

enum class Strategy : std::int8_t { Unborn = -1, Cooperator = 0, Defector = 1 };

const char* to_string(Strategy s);

// Payoffs in user units. S is the sucker loss magnitude, P half the
// defector-defector punishment magnitude.
struct PayoffMatrix {
    double T = 4.0;
    double R = 3.0;
    double S = 2.0;
    double P = 1.0;

    bool operator==(const PayoffMatrix&) const = default;
};

enum class Flavor { True, Ghost };

// Which individuals the per-event w0 decrement of the ghost dynamics hits.
// Cooperators: every cooperator at every event. Everyone: every born
// individual except the one that just gave birth.
enum class GhostDecrement { Cooperators, Everyone };

// Population over which the unified Poisson clock draws move/birth targets
// and game pairs.
//   AllSlots: all K slots, constant total rate; events on Unborn slots are no-ops.
//   Born:     individuals present on the torus (dead ones included).
//   Alive:    individuals with positive wealth (true dynamics only).
// All three simulate the same continuous-time process; they differ only in
// how many no-op events the induced chain contains.
enum class EventAddressing { AllSlots, Born, Alive };

struct SimParams {
    std::int64_t m = 7;       // torus side
    std::uint64_t K = 20;     // capacity
    double d = 1.0;           // move rate per individual
    double v = 1.0;           // game rate per pair
    double b = 1.0;           // birth attempt rate per individual
    double w0 = 3.0;          // birth wealth
    double wc = 10.0;         // birth threshold
    Flavor flavor = Flavor::True;
    GhostDecrement ghost_decrement = GhostDecrement::Cooperators;
    EventAddressing addressing = EventAddressing::AllSlots;
    std::int64_t quanta_per_unit = 1; // wealth resolution: 1 quantum = 1/quanta_per_unit

    bool operator==(const SimParams&) const = default;
};

// Throws Error(ConstraintViolation) naming the first violated inequality.
// Strict mode enforces T>R>0 and S>P>0 on top of the checks common to both
// modes (positive m and K, finite nonnegative rates, 0<w0<wc, finite payoffs).
void validate(const SimParams& params, const PayoffMatrix& payoffs, bool strict);

// Payoffs and birth thresholds converted to wealth quanta.
struct GameRules {
    Wealth T = 0;
    Wealth R = 0;
    Wealth S = 0;
    Wealth P = 0;
    Wealth w0 = 0;
    Wealth wc = 0;

    bool operator==(const GameRules&) const = default;
};

// Throws ConstraintViolation when a value is not an integer number of quanta.
GameRules quantize(const PayoffMatrix& payoffs, const SimParams& params);
Wealth to_quanta(double value, std::int64_t quanta_per_unit, const char* name);

struct GameOutcome {
    Wealth delta_i = 0;
    Wealth delta_j = 0;

    bool operator==(const GameOutcome&) const = default;
};

// One game between players i and j. heads=true sends the defector-defector
// punishment to player i, false to player j; the coin is ignored otherwise.
// Throws Error(UnbornPlayer) if either strategy is Unborn.
GameOutcome resolve_game(Strategy si, Strategy sj, bool heads, const GameRules& rules);

struct Site {
    std::int64_t x = 0;
    std::int64_t y = 0;

    auto operator<=>(const Site&) const = default;
};

struct Particle {
    std::uint64_t slot = 0;
    Site position;
    Wealth wealth = 0;
    Strategy strategy = Strategy::Unborn;

    bool born() const { return strategy != Strategy::Unborn; }
    bool alive() const { return born() && wealth > 0; }

    bool operator==(const Particle&) const = default;
};

// K particle slots on the m x m torus. Unborn slots are virtual: only born
// particles are stored (in birth order), so memory follows the population
// rather than the capacity. Slots are never freed.
class Configuration {
public:
    Configuration(std::int64_t m, std::uint64_t capacity);

    std::int64_t side() const { return m_; }
    std::uint64_t capacity() const { return capacity_; }

    std::size_t born_count() const { return born_.size(); }
    std::size_t alive_count() const { return alive_.size(); }
    std::size_t alive_count(Strategy s) const;

    // Born particles in birth order; indices are stable.
    std::span<const Particle> born() const { return born_; }
    const Particle& born_at(std::size_t index) const { return born_[index]; }

    // Born index of the k-th alive particle, k < alive_count(). The order of
    // the alive list depends on history but is deterministic.
    std::size_t alive_at(std::size_t k) const { return alive_[k]; }

    std::optional<std::size_t> index_of(std::uint64_t slot) const;

    // Particle in `slot`, or an Unborn placeholder at (0,0).
    Particle at(std::uint64_t slot) const;

    // The r-th Unborn slot in increasing slot order, r < capacity - born_count.
    std::uint64_t unborn_slot(std::uint64_t r) const;

    // Fills an Unborn slot. Throws ConstraintViolation on an occupied or
    // out-of-range slot or an Unborn strategy. Returns the new born index.
    std::size_t add(std::uint64_t slot, Site position, Wealth wealth, Strategy strategy);

    // Position is reduced modulo m in each coordinate.
    void move_to(std::size_t index, Site position);
    void add_wealth(std::size_t index, Wealth delta);

    Site wrap(Site s) const;

    bool operator==(const Configuration& other) const;

private:
    void update_alive(std::size_t index);

    std::int64_t m_;
    std::uint64_t capacity_;
    std::vector<Particle> born_;
    std::vector<std::pair<std::uint64_t, std::size_t>> by_slot_; // sorted by slot
    std::vector<std::size_t> alive_;
    std::vector<std::ptrdiff_t> alive_pos_; // per born index, -1 when not alive
    std::size_t alive_coop_ = 0;
};

} // namespace dpd
