#include "dpd/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpd/error.hpp"

namespace dpd {

const char* to_string(Strategy s) {
    switch (s) {
    case Strategy::Unborn: return "unborn";
    case Strategy::Cooperator: return "cooperator";
    case Strategy::Defector: return "defector";
    }
    return "?";
}

namespace {

void require(bool ok, const char* inequality) {
    if (!ok) {
        throw Error(ErrorCategory::ConstraintViolation, inequality);
    }
}

bool finite_nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

} // namespace

void validate(const SimParams& params, const PayoffMatrix& payoffs, bool strict) {
    require(std::isfinite(payoffs.T) && std::isfinite(payoffs.R) && std::isfinite(payoffs.S) &&
                std::isfinite(payoffs.P),
            "finite payoffs");
    if (strict) {
        require(payoffs.T > payoffs.R, "T>R");
        require(payoffs.R > 0.0, "R>0");
        require(payoffs.S > payoffs.P, "S>P");
        require(payoffs.P > 0.0, "P>0");
    }
    require(params.m > 0, "m>0");
    require(params.K > 0, "K>0");
    require(finite_nonnegative(params.d), "d>=0");
    require(finite_nonnegative(params.v), "v>=0");
    require(finite_nonnegative(params.b), "b>=0");
    require(std::isfinite(params.w0) && params.w0 > 0.0, "0<w0");
    require(std::isfinite(params.wc) && params.w0 < params.wc, "w0<wc");
    require(params.quanta_per_unit > 0, "quanta_per_unit>0");
    require(params.flavor == Flavor::True || params.addressing != EventAddressing::Alive,
            "alive addressing requires the true flavor");
    const double k = static_cast<double>(params.K);
    require(std::isfinite(k * (params.b + params.d) + k * (k - 1.0) / 2.0 * params.v),
            "finite total rate");
}

Wealth to_quanta(double value, std::int64_t quanta_per_unit, const char* name) {
    const double scaled = value * static_cast<double>(quanta_per_unit);
    const double rounded = std::round(scaled);
    if (!std::isfinite(scaled) || std::abs(rounded) > 9.0e15 ||
        std::abs(scaled - rounded) > 1e-9 * std::max(1.0, std::abs(scaled))) {
        throw Error(ErrorCategory::ConstraintViolation,
                    std::string(name) + " is not a whole number of wealth quanta");
    }
    return static_cast<Wealth>(rounded);
}

GameRules quantize(const PayoffMatrix& payoffs, const SimParams& params) {
    const std::int64_t q = params.quanta_per_unit;
    return GameRules{
        to_quanta(payoffs.T, q, "T"),  to_quanta(payoffs.R, q, "R"),
        to_quanta(payoffs.S, q, "S"),  to_quanta(payoffs.P, q, "P"),
        to_quanta(params.w0, q, "w0"), to_quanta(params.wc, q, "wc"),
    };
}

GameOutcome resolve_game(Strategy si, Strategy sj, bool heads, const GameRules& rules) {
    if (si == Strategy::Unborn || sj == Strategy::Unborn) {
        throw Error(ErrorCategory::UnbornPlayer, "game with an unborn player");
    }
    const bool ci = si == Strategy::Cooperator;
    const bool cj = sj == Strategy::Cooperator;
    if (ci && cj) {
        return {rules.R, rules.R};
    }
    if (ci) {
        return {-rules.S, rules.T};
    }
    if (cj) {
        return {rules.T, -rules.S};
    }
    return heads ? GameOutcome{-2 * rules.P, 0} : GameOutcome{0, -2 * rules.P};
}

Configuration::Configuration(std::int64_t m, std::uint64_t capacity) : m_(m), capacity_(capacity) {
    if (m <= 0) {
        throw Error(ErrorCategory::ConstraintViolation, "m>0");
    }
    if (capacity == 0) {
        throw Error(ErrorCategory::ConstraintViolation, "K>0");
    }
}

std::size_t Configuration::alive_count(Strategy s) const {
    switch (s) {
    case Strategy::Cooperator: return alive_coop_;
    case Strategy::Defector: return alive_.size() - alive_coop_;
    case Strategy::Unborn: return 0;
    }
    return 0;
}

std::optional<std::size_t> Configuration::index_of(std::uint64_t slot) const {
    auto it = std::lower_bound(by_slot_.begin(), by_slot_.end(), slot,
                               [](const auto& entry, std::uint64_t s) { return entry.first < s; });
    if (it == by_slot_.end() || it->first != slot) {
        return std::nullopt;
    }
    return it->second;
}

Particle Configuration::at(std::uint64_t slot) const {
    if (auto idx = index_of(slot)) {
        return born_[*idx];
    }
    return Particle{slot, Site{}, 0, Strategy::Unborn};
}

std::uint64_t Configuration::unborn_slot(std::uint64_t r) const {
    std::uint64_t candidate = r;
    for (const auto& [slot, index] : by_slot_) {
        if (slot > candidate) {
            break;
        }
        ++candidate;
    }
    return candidate;
}

std::size_t Configuration::add(std::uint64_t slot, Site position, Wealth wealth, Strategy strategy) {
    if (strategy == Strategy::Unborn) {
        throw Error(ErrorCategory::ConstraintViolation, "cannot place an unborn particle");
    }
    if (slot >= capacity_) {
        throw Error(ErrorCategory::ConstraintViolation, "slot out of range");
    }
    auto it = std::lower_bound(by_slot_.begin(), by_slot_.end(), slot,
                               [](const auto& entry, std::uint64_t s) { return entry.first < s; });
    if (it != by_slot_.end() && it->first == slot) {
        throw Error(ErrorCategory::ConstraintViolation, "slot already occupied");
    }
    const std::size_t index = born_.size();
    by_slot_.insert(it, {slot, index});
    born_.push_back(Particle{slot, wrap(position), wealth, strategy});
    alive_pos_.push_back(-1);
    update_alive(index);
    return index;
}

void Configuration::move_to(std::size_t index, Site position) {
    born_[index].position = wrap(position);
}

void Configuration::add_wealth(std::size_t index, Wealth delta) {
    born_[index].wealth += delta;
    update_alive(index);
}

Site Configuration::wrap(Site s) const {
    auto mod = [this](std::int64_t a) { return ((a % m_) + m_) % m_; };
    return Site{mod(s.x), mod(s.y)};
}

void Configuration::update_alive(std::size_t index) {
    const Particle& p = born_[index];
    const bool listed = alive_pos_[index] >= 0;
    const bool coop = p.strategy == Strategy::Cooperator;
    if (p.alive() && !listed) {
        alive_pos_[index] = static_cast<std::ptrdiff_t>(alive_.size());
        alive_.push_back(index);
        alive_coop_ += coop ? 1 : 0;
    } else if (!p.alive() && listed) {
        const auto pos = static_cast<std::size_t>(alive_pos_[index]);
        const std::size_t last = alive_.back();
        alive_[pos] = last;
        alive_pos_[last] = static_cast<std::ptrdiff_t>(pos);
        alive_.pop_back();
        alive_pos_[index] = -1;
        alive_coop_ -= coop ? 1 : 0;
    }
}

bool Configuration::operator==(const Configuration& other) const {
    return m_ == other.m_ && capacity_ == other.capacity_ && born_ == other.born_;
}

} // namespace dpd
