// Small builders shared by the unit tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dpd/engine.hpp"
#include "dpd/model.hpp"

namespace dpd::test {

struct Seed {
    std::uint64_t slot;
    Site site;
    Wealth wealth;
    Strategy strategy;
};

inline Configuration make_config(std::int64_t m, std::uint64_t K, const std::vector<Seed>& seeds) {
    Configuration c(m, K);
    for (const Seed& s : seeds) {
        c.add(s.slot, s.site, s.wealth, s.strategy);
    }
    return c;
}

inline GameRules rules_of(const PayoffMatrix& p, double w0 = 3, double wc = 10) {
    SimParams params;
    params.w0 = w0;
    params.wc = wc;
    return quantize(p, params);
}

inline Wealth total_wealth(const Configuration& c) {
    Wealth total = 0;
    for (const Particle& p : c.born()) {
        total += p.wealth;
    }
    return total;
}

// |observed - n p| / sqrt(n p (1 - p))
inline double binomial_z(std::uint64_t observed, std::uint64_t n, double p) {
    const double mean = static_cast<double>(n) * p;
    return std::abs(static_cast<double>(observed) - mean) / std::sqrt(mean * (1.0 - p));
}

} // namespace dpd::test
