// Mean-field companion of the spatial model.
//
//  * Nonlinear process: a typical cooperator and a typical defector whose
//    wealth jumps at rate v, with jump law depending on the current
//    probabilities that each is alive. Simulated by an interacting ensemble
//    (plug-in of the ensemble's alive fractions) and, independently, by
//    integrating the master equations for both wealth laws on the integer
//    wealth lattice.
//  * Linearized process: the cooperator wealth as a compound Poisson process
//    with interaction probabilities frozen at (beta0, rho0) and no absorption,
//    with closed-form drift/variance, Chebyshev bands and survival estimates.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "dpd/model.hpp"
#include "dpd/rng.hpp"

namespace dpd::meanfield {

struct MFParams {
    double beta0 = 0.5;
    double rho0 = 0.5;
    double v = 1.0;
    PayoffMatrix payoffs;
    // Initial wealth law as (wealth, probability) atoms.
    std::vector<std::pair<double, double>> m0 = {{10.0, 1.0}};
    // Use v/2 as the clock intensity instead of v.
    bool half_rate = false;

    double rate() const { return half_rate ? v / 2.0 : v; }
};

// beta0, rho0 in [0,1] with beta0 + rho0 = 1; v >= 0 finite; m0 nonempty,
// nonnegative, summing to 1. Throws ConstraintViolation.
void validate(const MFParams& params);

// ---------------------------------------------------------------- ensemble

struct Ensemble {
    std::vector<double> coop;
    std::vector<double> def;
    double clock = 0.0;
    std::size_t coop_alive = 0;
    std::size_t def_alive = 0;

    double beta() const { return coop.empty() ? 0.0 : static_cast<double>(coop_alive) / coop.size(); }
    double rho() const { return def.empty() ? 0.0 : static_cast<double>(def_alive) / def.size(); }
};

// n cooperator and n defector samples drawn from m0 by inversion
// (cooperators first, one uniform each).
Ensemble make_ensemble(const MFParams& params, std::size_t n, Rng& rng);

// One event of the 2n independent rate-v clocks: exponential holding time,
// a uniform sample index (cooperators first), then, if that sample is alive,
// one uniform for its jump. Dead samples never change.
void ensemble_step(Ensemble& ens, const MFParams& params, Rng& rng);

// Steps until the next event would pass t_end; the clock ends at t_end.
// `on_event` (optional) is called after every event.
void ensemble_run(Ensemble& ens, const MFParams& params, double t_end, Rng& rng,
                  const std::function<void(const Ensemble&)>& on_event = {});

// ---------------------------------------------------------- master equation

// Masses on the integer points lo, lo+1, ..., hi. Mass pushed outside the
// window is kept in the overflow accumulators (frozen).
struct WealthLattice {
    std::int64_t lo = 0;
    std::vector<double> masses;
    double below = 0.0;
    double above = 0.0;

    std::int64_t hi() const { return lo + static_cast<std::int64_t>(masses.size()) - 1; }
    double mass_at(std::int64_t y) const;
    double total() const;
    // Mass with positive wealth, overflow included where it lies above 0.
    double positive_mass() const;
};

struct MasterState {
    WealthLattice coop;
    WealthLattice def;
    double t = 0.0;
};

// Both lattices start from m0. The window holds every point reachable by the
// integration horizon except for jump counts with Poisson tail probability
// below `tail` (upper side); the lower side is exact because absorbed mass
// never moves. Requires integer payoffs and m0 support.
MasterState make_master_state(const MFParams& params, double t_horizon, double tail = 1e-14);

struct MasterDerivative {
    WealthLattice coop;
    WealthLattice def;
};

// Time derivative of both laws. Only mass at y > 0 moves:
//   cooperator at y:  -> y + R at rate v beta0 beta_t,  -> y - S at rate v rho0 rho_t
//   defector at y:    -> y + T at rate v beta0 beta_t,  -> y - 2P at rate v rho0 rho_t / 2
// with beta_t, rho_t the positive masses of the two laws.
MasterDerivative master_rhs(const MasterState& state, const MFParams& params);

enum class Scheme { RK4, Euler };

struct MasterOptions {
    double dt = 0.01;
    Scheme scheme = Scheme::RK4;
    double negative_tolerance = 1e-12; // NegativeMass below -tolerance
    double overflow_tolerance = 1e-10; // WindowOverflow above this
};

struct MasterSample {
    double t = 0.0;
    double beta = 0.0;
    double rho = 0.0;
};

// Integrates to t_end (the last step is shortened to land on it) and returns
// (t, beta_t, rho_t) at every step, the initial state included.
std::vector<MasterSample> integrate_master(MasterState& state, const MFParams& params, double t_end,
                                           const MasterOptions& options = {});

// 1/2 sum |p_lattice(y) - p_samples(y)| over all wealth values, overflow
// masses counted as unmatched.
double total_variation(const WealthLattice& lattice, std::span<const double> samples);

// ---------------------------------------------------------- linearized

struct LinearizedPath {
    std::vector<double> times;  // 0, then jump times
    std::vector<double> values; // value right after each time
};

// Compound Poisson path on [0, t_end]: rate-v clock, jumps -S w.p. rho0,
// +R w.p. beta0, 0 otherwise. No absorbing boundary.
LinearizedPath linearized_trajectory(double q0, const MFParams& params, double t_end, std::uint64_t seed);

// Walks one linearized path forward in time. Per jump: exponential holding
// time, then one uniform for the mark.
class LinearizedWalker {
public:
    LinearizedWalker(double q0, const MFParams& params, Rng& rng);

    // Value at time t >= previous t. Tracks the running minimum over [0, t].
    double advance_to(double t);
    double value() const { return value_; }
    double running_min() const { return min_; }
    std::uint64_t jumps() const { return jumps_; }

private:
    void draw_next();

    const MFParams* params_;
    Rng* rng_;
    double rate_;
    double value_;
    double min_;
    double next_time_;
    std::uint64_t jumps_ = 0;
};

enum class VarianceConvention {
    WithRate,    // sigma^2 = v (beta0 R^2 + rho0 S^2)
    WithoutRate, // sigma^2 = beta0 R^2 + rho0 S^2
};

struct Moments {
    double drift = 0.0;         // v (beta0 R - rho0 S)
    double variance_rate = 0.0; // per the convention
    double mean = 0.0;          // q0 + drift t
    double variance = 0.0;      // variance_rate t
};

Moments analytic_moments(const MFParams& params, double q0, double t,
                         VarianceConvention convention = VarianceConvention::WithRate);

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
    double coverage = 1.0; // guaranteed lower bound on the probability
};

// [q0 + m t - eta sqrt(sigma^2 t), q0 + m t + eta sqrt(sigma^2 t)], covered
// with probability >= 1 - eta^-2 (reported as 1 when t = 0, floored at 0).
Interval chebyshev_interval(const MFParams& params, double q0, double t, double eta);

enum class ThresholdFormula {
    DriftDenominator, // q0 - eta^2 sigma^2 / (4 m)
    // q0 - eta^2 v (beta0 R^2 + rho0 S^2) / (4 (beta0 R - rho0 S)): the
    // minimum of q0 + t (beta0 R - rho0 S) - eta sqrt(v (...) t) over t.
    UnscaledDrift,
};

// Supremum of tau with P(cbar(t) > tau) >= 1 - eta^-2 for every t.
// Throws Error(NonpositiveDrift) when the drift is <= 0.
double survival_threshold(const MFParams& params, double q0, double eta,
                          ThresholdFormula formula = ThresholdFormula::DriftDenominator);

struct SurvivalEstimate {
    double horizon = 0.0;
    std::uint64_t survived = 0;
    std::uint64_t paths = 0;
    double estimate = 0.0;
    double ci_lower = 0.0; // 95% Wilson score interval
    double ci_upper = 0.0;
};

// Fraction of paths whose running minimum stays > 0 on [0, T] for every T in
// `horizons` (sorted ascending), all from the same paths so the estimates are
// nonincreasing in T. Path k uses seed derive_seed(seed, {k}).
std::vector<SurvivalEstimate> survival_probability_estimate(const MFParams& params, double q0,
                                                            std::span<const double> horizons,
                                                            std::uint64_t n_paths, std::uint64_t seed);

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

} // namespace dpd::meanfield
