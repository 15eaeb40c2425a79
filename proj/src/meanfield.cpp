#include "dpd/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "dpd/error.hpp"

namespace dpd::meanfield {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw Error(ErrorCategory::ConstraintViolation, what);
    }
}

std::int64_t as_integer(double x, const char* name) {
    const double r = std::round(x);
    require(std::isfinite(x) && std::abs(x - r) < 1e-9 && std::abs(r) < 1e15,
            std::string(name) + " must be an integer for the lattice");
    return static_cast<std::int64_t>(r);
}

} // namespace

void validate(const MFParams& params) {
    require(params.beta0 >= 0.0 && params.beta0 <= 1.0, "0<=beta0<=1");
    require(params.rho0 >= 0.0 && params.rho0 <= 1.0, "0<=rho0<=1");
    require(std::abs(params.beta0 + params.rho0 - 1.0) < 1e-9, "beta0+rho0=1");
    require(std::isfinite(params.v) && params.v >= 0.0, "v>=0");
    require(!params.m0.empty(), "m0 nonempty");
    double total = 0.0;
    for (const auto& [w, p] : params.m0) {
        require(std::isfinite(w) && std::isfinite(p) && p >= 0.0, "m0 atoms finite and nonnegative");
        total += p;
    }
    require(std::abs(total - 1.0) < 1e-9, "m0 sums to 1");
}

// ---------------------------------------------------------------- ensemble

namespace {

double draw_from_m0(const MFParams& params, Rng& rng) {
    const double u = rng.uniform01();
    double cdf = 0.0;
    for (const auto& [w, p] : params.m0) {
        cdf += p;
        if (u < cdf) {
            return w;
        }
    }
    return params.m0.back().first;
}

void apply_ensemble_event(Ensemble& ens, const MFParams& params, Rng& rng) {
    const std::size_t n_coop = ens.coop.size();
    const std::uint64_t k = rng.below(n_coop + ens.def.size());
    const double beta = ens.beta();
    const double rho = ens.rho();
    const PayoffMatrix& pm = params.payoffs;
    if (k < n_coop) {
        double& w = ens.coop[k];
        if (w <= 0.0) {
            return;
        }
        const double u = rng.uniform01();
        if (u < params.rho0 * rho) {
            w -= pm.S;
        } else if (u < params.rho0 * rho + params.beta0 * beta) {
            w += pm.R;
        }
        if (w <= 0.0) {
            --ens.coop_alive;
        }
    } else {
        double& w = ens.def[k - n_coop];
        if (w <= 0.0) {
            return;
        }
        const double u = rng.uniform01();
        if (u < 0.5 * params.rho0 * rho) {
            w -= 2.0 * pm.P;
        } else if (u < 0.5 * params.rho0 * rho + params.beta0 * beta) {
            w += pm.T;
        }
        if (w <= 0.0) {
            --ens.def_alive;
        }
    }
}

} // namespace

Ensemble make_ensemble(const MFParams& params, std::size_t n, Rng& rng) {
    validate(params);
    Ensemble ens;
    ens.coop.reserve(n);
    ens.def.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ens.coop.push_back(draw_from_m0(params, rng));
    }
    for (std::size_t i = 0; i < n; ++i) {
        ens.def.push_back(draw_from_m0(params, rng));
    }
    ens.coop_alive = static_cast<std::size_t>(std::count_if(ens.coop.begin(), ens.coop.end(), [](double w) { return w > 0.0; }));
    ens.def_alive = static_cast<std::size_t>(std::count_if(ens.def.begin(), ens.def.end(), [](double w) { return w > 0.0; }));
    return ens;
}

void ensemble_step(Ensemble& ens, const MFParams& params, Rng& rng) {
    const double total = params.rate() * static_cast<double>(ens.coop.size() + ens.def.size());
    if (!(total > 0.0)) {
        return;
    }
    ens.clock += rng.exponential(total);
    apply_ensemble_event(ens, params, rng);
}

void ensemble_run(Ensemble& ens, const MFParams& params, double t_end, Rng& rng,
                  const std::function<void(const Ensemble&)>& on_event) {
    const double total = params.rate() * static_cast<double>(ens.coop.size() + ens.def.size());
    if (!(total > 0.0)) {
        ens.clock = std::max(ens.clock, t_end);
        return;
    }
    while (true) {
        const double dt = rng.exponential(total);
        if (ens.clock + dt > t_end) {
            ens.clock = std::max(ens.clock, t_end);
            return;
        }
        ens.clock += dt;
        apply_ensemble_event(ens, params, rng);
        if (on_event) {
            on_event(ens);
        }
    }
}

// ---------------------------------------------------------- master equation

double WealthLattice::mass_at(std::int64_t y) const {
    if (y < lo || y > hi()) {
        return 0.0;
    }
    return masses[static_cast<std::size_t>(y - lo)];
}

double WealthLattice::total() const {
    double s = below + above;
    for (double m : masses) {
        s += m;
    }
    return s;
}

double WealthLattice::positive_mass() const {
    double s = hi() >= 0 ? above : 0.0;
    for (std::int64_t y = std::max<std::int64_t>(lo, 1); y <= hi(); ++y) {
        s += masses[static_cast<std::size_t>(y - lo)];
    }
    return s;
}

namespace {

struct Jumps {
    std::int64_t up;   // +R or +T
    std::int64_t down; // -S or -2P
};

// Smallest q with P(Poisson(lambda) > q) < tail.
std::int64_t poisson_quantile(double lambda, double tail) {
    if (lambda <= 0.0) {
        return 0;
    }
    if (lambda > 500.0) {
        return static_cast<std::int64_t>(std::ceil(lambda + 12.0 * std::sqrt(lambda) + 40.0));
    }
    double p = std::exp(-lambda);
    double cdf = p;
    std::int64_t k = 0;
    while (1.0 - cdf >= tail && k < 100000) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cdf += p;
    }
    return k + 1;
}

WealthLattice initial_lattice(const MFParams& params, Jumps jumps, std::int64_t max_jumps) {
    std::int64_t smin = std::numeric_limits<std::int64_t>::max();
    std::int64_t smax = std::numeric_limits<std::int64_t>::min();
    for (const auto& [w, p] : params.m0) {
        const std::int64_t y = as_integer(w, "m0 support");
        smin = std::min(smin, y);
        smax = std::max(smax, y);
    }
    const std::int64_t lowest_step = std::min<std::int64_t>({0, jumps.up, jumps.down});
    const std::int64_t highest_step = std::max<std::int64_t>({0, jumps.up, jumps.down});
    WealthLattice lat;
    lat.lo = std::min(smin, 1 + lowest_step);
    const std::int64_t hi = std::max<std::int64_t>(smax + highest_step * max_jumps, 1);
    lat.masses.assign(static_cast<std::size_t>(hi - lat.lo + 1), 0.0);
    for (const auto& [w, p] : params.m0) {
        lat.masses[static_cast<std::size_t>(as_integer(w, "m0 support") - lat.lo)] += p;
    }
    return lat;
}

Jumps coop_jumps(const MFParams& params) {
    return {as_integer(params.payoffs.R, "R"), -as_integer(params.payoffs.S, "S")};
}

Jumps def_jumps(const MFParams& params) {
    return {as_integer(params.payoffs.T, "T"), -2 * as_integer(params.payoffs.P, "P")};
}

// Flat layout used by the integrator: coop masses, def masses, then
// coop below/above and def below/above.
struct Layout {
    std::int64_t coop_lo;
    std::size_t nc;
    std::int64_t def_lo;
    std::size_t nd;
    std::size_t size() const { return nc + nd + 4; }
};

Layout layout_of(const MasterState& s) {
    return Layout{s.coop.lo, s.coop.masses.size(), s.def.lo, s.def.masses.size()};
}

std::vector<double> flatten(const MasterState& s) {
    std::vector<double> x;
    x.reserve(s.coop.masses.size() + s.def.masses.size() + 4);
    x.insert(x.end(), s.coop.masses.begin(), s.coop.masses.end());
    x.insert(x.end(), s.def.masses.begin(), s.def.masses.end());
    x.push_back(s.coop.below);
    x.push_back(s.coop.above);
    x.push_back(s.def.below);
    x.push_back(s.def.above);
    return x;
}

void unflatten(const std::vector<double>& x, const Layout& L, MasterState& s) {
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(L.nc), s.coop.masses.begin());
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(L.nc),
              x.begin() + static_cast<std::ptrdiff_t>(L.nc + L.nd), s.def.masses.begin());
    s.coop.below = x[L.nc + L.nd];
    s.coop.above = x[L.nc + L.nd + 1];
    s.def.below = x[L.nc + L.nd + 2];
    s.def.above = x[L.nc + L.nd + 3];
}

double positive_of(const std::vector<double>& x, std::size_t offset, std::size_t n, std::int64_t lo,
                   double above) {
    const std::int64_t hi = lo + static_cast<std::int64_t>(n) - 1;
    double s = hi >= 0 ? above : 0.0;
    for (std::int64_t y = std::max<std::int64_t>(lo, 1); y <= hi; ++y) {
        s += x[offset + static_cast<std::size_t>(y - lo)];
    }
    return s;
}

// Moves mass from alive points of one lattice along its two jumps.
void transfer(const std::vector<double>& x, std::vector<double>& dx, std::size_t offset, std::size_t n,
              std::int64_t lo, Jumps jumps, double rate_up, double rate_down, std::size_t below_idx,
              std::size_t above_idx) {
    const std::int64_t hi = lo + static_cast<std::int64_t>(n) - 1;
    auto deposit = [&](std::int64_t y, double amount) {
        if (y < lo) {
            dx[below_idx] += amount;
        } else if (y > hi) {
            dx[above_idx] += amount;
        } else {
            dx[offset + static_cast<std::size_t>(y - lo)] += amount;
        }
    };
    for (std::int64_t y = std::max<std::int64_t>(lo, 1); y <= hi; ++y) {
        const double p = x[offset + static_cast<std::size_t>(y - lo)];
        if (p == 0.0) {
            continue;
        }
        const double up = rate_up * p;
        const double down = rate_down * p;
        dx[offset + static_cast<std::size_t>(y - lo)] -= up + down;
        deposit(y + jumps.up, up);
        deposit(y + jumps.down, down);
    }
}

std::vector<double> derivative(const std::vector<double>& x, const Layout& L, const MFParams& params,
                               Jumps cj, Jumps dj) {
    std::vector<double> dx(x.size(), 0.0);
    const std::size_t base = L.nc + L.nd;
    const double beta = positive_of(x, 0, L.nc, L.coop_lo, x[base + 1]);
    const double rho = positive_of(x, L.nc, L.nd, L.def_lo, x[base + 3]);
    const double v = params.rate();
    const double meet_coop = v * params.beta0 * beta;
    const double meet_def = v * params.rho0 * rho;
    transfer(x, dx, 0, L.nc, L.coop_lo, cj, meet_coop, meet_def, base, base + 1);
    transfer(x, dx, L.nc, L.nd, L.def_lo, dj, meet_coop, 0.5 * meet_def, base + 2, base + 3);
    return dx;
}

void axpy(std::vector<double>& out, const std::vector<double>& x, double a, const std::vector<double>& y) {
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x[i] + a * y[i];
    }
}

} // namespace

MasterState make_master_state(const MFParams& params, double t_horizon, double tail) {
    validate(params);
    const std::int64_t q = poisson_quantile(params.rate() * std::max(t_horizon, 0.0), tail);
    return MasterState{initial_lattice(params, coop_jumps(params), q),
                       initial_lattice(params, def_jumps(params), q), 0.0};
}

MasterDerivative master_rhs(const MasterState& state, const MFParams& params) {
    const Layout L = layout_of(state);
    const std::vector<double> dx = derivative(flatten(state), L, params, coop_jumps(params), def_jumps(params));
    MasterState tmp = state;
    unflatten(dx, L, tmp);
    return MasterDerivative{std::move(tmp.coop), std::move(tmp.def)};
}

std::vector<MasterSample> integrate_master(MasterState& state, const MFParams& params, double t_end,
                                           const MasterOptions& options) {
    validate(params);
    require(options.dt > 0.0, "dt>0");
    const Layout L = layout_of(state);
    const Jumps cj = coop_jumps(params);
    const Jumps dj = def_jumps(params);
    std::vector<MasterSample> samples;
    samples.push_back({state.t, state.coop.positive_mass(), state.def.positive_mass()});

    std::vector<double> x = flatten(state);
    std::vector<double> tmp(x.size());
    std::vector<double> next(x.size());
    const double eps = 1e-12 * std::max(1.0, std::abs(t_end));
    while (state.t < t_end - eps) {
        const double h = std::min(options.dt, t_end - state.t);
        const std::vector<double> k1 = derivative(x, L, params, cj, dj);
        if (options.scheme == Scheme::Euler) {
            axpy(next, x, h, k1);
        } else {
            axpy(tmp, x, h / 2.0, k1);
            const std::vector<double> k2 = derivative(tmp, L, params, cj, dj);
            axpy(tmp, x, h / 2.0, k2);
            const std::vector<double> k3 = derivative(tmp, L, params, cj, dj);
            axpy(tmp, x, h, k3);
            const std::vector<double> k4 = derivative(tmp, L, params, cj, dj);
            for (std::size_t i = 0; i < x.size(); ++i) {
                next[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        x.swap(next);
        state.t += h;
        for (double m : x) {
            if (m < -options.negative_tolerance) {
                throw Error(ErrorCategory::NegativeMass, "negative mass at t=" + std::to_string(state.t));
            }
        }
        const std::size_t base = L.nc + L.nd;
        if (x[base] + x[base + 1] > options.overflow_tolerance ||
            x[base + 2] + x[base + 3] > options.overflow_tolerance) {
            throw Error(ErrorCategory::WindowOverflow, "mass left the wealth window at t=" + std::to_string(state.t));
        }
        unflatten(x, L, state);
        samples.push_back({state.t, state.coop.positive_mass(), state.def.positive_mass()});
    }
    state.t = std::max(state.t, t_end);
    return samples;
}

double total_variation(const WealthLattice& lattice, std::span<const double> samples) {
    std::map<std::int64_t, double> empirical;
    const double weight = samples.empty() ? 0.0 : 1.0 / static_cast<double>(samples.size());
    for (double w : samples) {
        empirical[std::llround(w)] += weight;
    }
    double diff = lattice.below + lattice.above;
    for (std::int64_t y = lattice.lo; y <= lattice.hi(); ++y) {
        auto it = empirical.find(y);
        const double e = it == empirical.end() ? 0.0 : it->second;
        diff += std::abs(lattice.mass_at(y) - e);
        if (it != empirical.end()) {
            empirical.erase(it);
        }
    }
    for (const auto& [y, e] : empirical) {
        diff += e;
    }
    return 0.5 * diff;
}

// ---------------------------------------------------------- linearized

namespace {

double linearized_mark(const MFParams& params, double u) {
    if (u < params.rho0) {
        return -params.payoffs.S;
    }
    if (u < params.rho0 + params.beta0) {
        return params.payoffs.R;
    }
    return 0.0;
}

} // namespace

LinearizedPath linearized_trajectory(double q0, const MFParams& params, double t_end, std::uint64_t seed) {
    Rng rng(seed);
    LinearizedPath path{{0.0}, {q0}};
    const double rate = params.rate();
    if (!(rate > 0.0)) {
        return path;
    }
    double t = 0.0;
    double value = q0;
    while (true) {
        t += rng.exponential(rate);
        if (t > t_end) {
            break;
        }
        value += linearized_mark(params, rng.uniform01());
        path.times.push_back(t);
        path.values.push_back(value);
    }
    return path;
}

LinearizedWalker::LinearizedWalker(double q0, const MFParams& params, Rng& rng)
    : params_(&params), rng_(&rng), rate_(params.rate()), value_(q0), min_(q0),
      next_time_(std::numeric_limits<double>::infinity()) {
    if (rate_ > 0.0) {
        next_time_ = rng_->exponential(rate_);
    }
}

void LinearizedWalker::draw_next() {
    value_ += linearized_mark(*params_, rng_->uniform01());
    min_ = std::min(min_, value_);
    ++jumps_;
    next_time_ += rng_->exponential(rate_);
}

double LinearizedWalker::advance_to(double t) {
    while (next_time_ <= t) {
        draw_next();
    }
    return value_;
}

Moments analytic_moments(const MFParams& params, double q0, double t, VarianceConvention convention) {
    require(t >= 0.0, "t>=0");
    const PayoffMatrix& pm = params.payoffs;
    const double v = params.rate();
    const double second = params.beta0 * pm.R * pm.R + params.rho0 * pm.S * pm.S;
    Moments m;
    m.drift = v * (params.beta0 * pm.R - params.rho0 * pm.S);
    m.variance_rate = convention == VarianceConvention::WithRate ? v * second : second;
    m.mean = q0 + m.drift * t;
    m.variance = m.variance_rate * t;
    return m;
}

Interval chebyshev_interval(const MFParams& params, double q0, double t, double eta) {
    require(eta > 0.0, "eta>0");
    const Moments m = analytic_moments(params, q0, t);
    const double half = eta * std::sqrt(m.variance);
    const double coverage = t == 0.0 ? 1.0 : std::max(0.0, 1.0 - 1.0 / (eta * eta));
    return Interval{m.mean - half, m.mean + half, coverage};
}

double survival_threshold(const MFParams& params, double q0, double eta, ThresholdFormula formula) {
    require(eta > 0.0, "eta>0");
    const Moments m = analytic_moments(params, q0, 0.0);
    if (!(m.drift > 0.0)) {
        throw Error(ErrorCategory::NonpositiveDrift, "survival threshold needs beta0 R - rho0 S > 0");
    }
    if (formula == ThresholdFormula::DriftDenominator) {
        return q0 - eta * eta * m.variance_rate / (4.0 * m.drift);
    }
    const PayoffMatrix& pm = params.payoffs;
    return q0 - eta * eta * m.variance_rate / (4.0 * (params.beta0 * pm.R - params.rho0 * pm.S));
}

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
    if (trials == 0) {
        return {0.0, 1.0};
    }
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
    // the bounds are exactly 0 and 1 at the extremes; rounding must not move them
    const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
    const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
    return {lo, hi};
}

std::vector<SurvivalEstimate> survival_probability_estimate(const MFParams& params, double q0,
                                                            std::span<const double> horizons,
                                                            std::uint64_t n_paths, std::uint64_t seed) {
    require(n_paths >= 1, "n_paths>=1");
    require(std::is_sorted(horizons.begin(), horizons.end()), "horizons sorted ascending");
    std::vector<std::uint64_t> survived(horizons.size(), 0);
    for (std::uint64_t k = 0; k < n_paths; ++k) {
        Rng rng(derive_seed(seed, {k}));
        LinearizedWalker walker(q0, params, rng);
        for (std::size_t h = 0; h < horizons.size(); ++h) {
            walker.advance_to(horizons[h]);
            if (walker.running_min() <= 0.0) {
                break;
            }
            ++survived[h];
        }
    }
    std::vector<SurvivalEstimate> out;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        const auto [lo, hi] = wilson_interval(survived[h], n_paths);
        out.push_back(SurvivalEstimate{horizons[h], survived[h], n_paths,
                                       static_cast<double>(survived[h]) / static_cast<double>(n_paths), lo, hi});
    }
    return out;
}

} // namespace dpd::meanfield
