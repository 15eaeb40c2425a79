#include "dpd/dispatch.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <map>

#include <json.hpp>

#include "dpd/csv.hpp"
#include "dpd/engine.hpp"
#include "dpd/error.hpp"
#include "dpd/meanfield.hpp"
#include "dpd/observables.hpp"
#include "dpd/sweep.hpp"

namespace dpd::cli {

namespace fs = std::filesystem;

namespace {

const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::MaxEvents:
        return "max_events";
    case StopReason::MaxTime:
        return "max_time";
    case StopReason::Predicate:
        return "predicate";
    case StopReason::Absorbed:
        return "absorbed";
    }
    return "?";
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;
};

MeanVar sample_moments(const std::vector<double>& xs) {
    MeanVar mv;
    if (xs.empty()) {
        return mv;
    }
    for (double x : xs) {
        mv.mean += x;
    }
    mv.mean /= static_cast<double>(xs.size());
    for (double x : xs) {
        mv.var += (x - mv.mean) * (x - mv.mean);
    }
    mv.var /= static_cast<double>(xs.size());
    return mv;
}

MeanVar lattice_moments(const meanfield::WealthLattice& lattice) {
    MeanVar mv;
    double mass = 0.0;
    for (std::size_t i = 0; i < lattice.masses.size(); ++i) {
        const double y = static_cast<double>(lattice.lo + static_cast<std::int64_t>(i));
        mass += lattice.masses[i];
        mv.mean += y * lattice.masses[i];
    }
    if (mass <= 0.0) {
        return {};
    }
    mv.mean /= mass;
    for (std::size_t i = 0; i < lattice.masses.size(); ++i) {
        const double y = static_cast<double>(lattice.lo + static_cast<std::int64_t>(i));
        mv.var += (y - mv.mean) * (y - mv.mean) * lattice.masses[i];
    }
    mv.var /= mass;
    return mv;
}

std::vector<double> sample_times(double t_end, double every) {
    std::vector<double> ts = {0.0};
    for (std::uint64_t k = 1;; ++k) {
        const double t = static_cast<double>(k) * every;
        if (t >= t_end - 1e-12 * std::max(1.0, t_end)) {
            break;
        }
        ts.push_back(t);
    }
    if (t_end > 0.0) {
        ts.push_back(t_end);
    }
    return ts;
}

std::string histogram_csv(const std::vector<double>& xs) {
    std::map<double, std::uint64_t> counts;
    for (double x : xs) {
        ++counts[x + 0.0];
    }
    std::string out = csv_row({"wealth", "mass"});
    for (const auto& [w, n] : counts) {
        out += csv_row({format_number(w), format_number(static_cast<double>(n) / static_cast<double>(xs.size()))});
    }
    return out;
}

std::string lattice_csv(const meanfield::WealthLattice& lattice) {
    std::string out = csv_row({"wealth", "mass"});
    for (std::size_t i = 0; i < lattice.masses.size(); ++i) {
        out += csv_row({format_number(lattice.lo + static_cast<std::int64_t>(i)), format_number(lattice.masses[i])});
    }
    return out;
}

class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& contents) {
        write_file(dir_ / name, contents);
        names_.push_back(name);
    }

    const fs::path& dir() const { return dir_; }
    std::vector<std::string> names() const { return names_; }

private:
    fs::path dir_;
    std::vector<std::string> names_;
};

void run_spatial(const RunConfig& config, Outputs& out) {
    const SimParams params = sim_params(config);
    Rng placement(derive_seed(config.seed, {label("placement")}));
    EngineState state = make_state(sweep::initial_configuration(params, config.initial, placement), params,
                                   config.payoffs, derive_seed(config.seed, {label("events")}));
    EventLog log(config.observables, config.stride);
    StopCondition stop;
    stop.max_events = config.events;
    stop.max_time = config.max_time;
    const RunSummary summary = run(state, stop, log.observer());
    out.write("events.csv", log.to_csv());
    const SurvivalCounts counts = survival_counts(state.config);
    std::string csv = csv_row({"events", "clock", "stop_reason", "born", "coop_alive", "def_alive"});
    csv += csv_row({format_number(summary.events), format_number(state.clock), to_string(summary.reason),
                    format_number(static_cast<std::uint64_t>(state.config.born_count())),
                    format_number(counts.cooperators), format_number(counts.defectors)});
    out.write("summary.csv", csv);
}

void run_sweep(const RunConfig& config, Outputs& out) {
    const sweep::SweepSpec spec = sweep_spec(config, (out.dir() / "event_logs").string());
    const sweep::SweepGrid grid = sweep::run_grid(spec, config.parallelism);
    out.write("heatmap_long.csv", sweep::long_csv(grid));
    out.write("heatmap_matrix.csv", sweep::matrix_csv(grid));
}

void run_master(const RunConfig& config, Outputs& out) {
    const meanfield::MFParams p = mf_params(config);
    meanfield::MasterState state = meanfield::make_master_state(p, config.t_end);
    meanfield::MasterOptions options;
    options.dt = config.dt;
    options.scheme = config.scheme;
    std::string csv = csv_row({"t", "beta", "rho", "coop_mean", "coop_var", "def_mean", "def_var", "mass_error"});
    for (double t : sample_times(config.t_end, config.sample_dt)) {
        meanfield::integrate_master(state, p, t, options);
        const MeanVar c = lattice_moments(state.coop);
        const MeanVar d = lattice_moments(state.def);
        const double err = std::max(std::abs(state.coop.total() - 1.0), std::abs(state.def.total() - 1.0));
        csv += csv_row({format_number(state.t), format_number(state.coop.positive_mass()),
                        format_number(state.def.positive_mass()), format_number(c.mean), format_number(c.var),
                        format_number(d.mean), format_number(d.var), format_number(err)});
    }
    out.write("timeseries.csv", csv);
    out.write("coop_lattice.csv", lattice_csv(state.coop));
    out.write("def_lattice.csv", lattice_csv(state.def));
}

void run_ensemble(const RunConfig& config, Outputs& out) {
    const meanfield::MFParams p = mf_params(config);
    Rng rng(derive_seed(config.seed, {label("ensemble")}));
    meanfield::Ensemble ens = meanfield::make_ensemble(p, config.ensemble_size, rng);
    std::string csv = csv_row({"t", "beta", "rho", "coop_mean", "coop_var", "def_mean", "def_var"});
    for (double t : sample_times(config.t_end, config.sample_dt)) {
        meanfield::ensemble_run(ens, p, t, rng);
        const MeanVar c = sample_moments(ens.coop);
        const MeanVar d = sample_moments(ens.def);
        csv += csv_row({format_number(ens.clock), format_number(ens.beta()), format_number(ens.rho()),
                        format_number(c.mean), format_number(c.var), format_number(d.mean), format_number(d.var)});
    }
    out.write("timeseries.csv", csv);
    out.write("coop_histogram.csv", histogram_csv(ens.coop));
    out.write("def_histogram.csv", histogram_csv(ens.def));
}

void run_linearized(const RunConfig& config, Outputs& out) {
    const meanfield::MFParams p = mf_params(config);
    std::vector<double> times = config.times;
    std::sort(times.begin(), times.end());
    // sums[t] over paths of value and value^2; hits[t][eta] inside the interval
    std::vector<double> sum(times.size(), 0.0);
    std::vector<double> sum2(times.size(), 0.0);
    std::vector<std::vector<std::uint64_t>> hits(times.size(), std::vector<std::uint64_t>(config.etas.size(), 0));
    std::vector<std::vector<meanfield::Interval>> intervals(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        for (double eta : config.etas) {
            intervals[i].push_back(meanfield::chebyshev_interval(p, config.q0, times[i], eta));
        }
    }
    for (std::uint64_t k = 0; k < config.paths; ++k) {
        Rng rng(derive_seed(config.seed, {label("linearized"), k}));
        meanfield::LinearizedWalker walker(config.q0, p, rng);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double x = walker.advance_to(times[i]);
            sum[i] += x;
            sum2[i] += x * x;
            for (std::size_t e = 0; e < config.etas.size(); ++e) {
                if (x >= intervals[i][e].lower && x <= intervals[i][e].upper) {
                    ++hits[i][e];
                }
            }
        }
    }
    const auto n = static_cast<double>(config.paths);
    std::vector<std::string> header = {"t", "mean", "mean_analytic", "variance", "variance_analytic"};
    for (double eta : config.etas) {
        header.push_back("coverage_eta" + format_number(eta));
        header.push_back("bound_eta" + format_number(eta));
    }
    std::string csv = csv_row(header);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const meanfield::Moments m = meanfield::analytic_moments(p, config.q0, times[i]);
        const double mean = sum[i] / n;
        const double var = config.paths > 1 ? (sum2[i] - n * mean * mean) / (n - 1.0) : 0.0;
        std::vector<std::string> row = {format_number(times[i]), format_number(mean), format_number(m.mean),
                                        format_number(var), format_number(m.variance)};
        for (std::size_t e = 0; e < config.etas.size(); ++e) {
            row.push_back(format_number(static_cast<double>(hits[i][e]) / n));
            row.push_back(format_number(intervals[i][e].coverage));
        }
        csv += csv_row(row);
    }
    out.write("moments.csv", csv);

    const auto estimates = meanfield::survival_probability_estimate(p, config.q0, config.horizons, config.paths,
                                                                     derive_seed(config.seed, {label("survival")}));
    std::string surv = csv_row({"horizon", "survived", "paths", "estimate", "ci_lower", "ci_upper"});
    for (const auto& s : estimates) {
        surv += csv_row({format_number(s.horizon), format_number(s.survived), format_number(s.paths),
                         format_number(s.estimate), format_number(s.ci_lower), format_number(s.ci_upper)});
    }
    out.write("survival.csv", surv);
}

// Header values are for reading, not for reuse: 12 significant digits.
std::string display(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

} // namespace

fs::path output_dir(const RunConfig& config) {
    if (!config.out.empty()) {
        return config.out;
    }
    if (const char* env = std::getenv("DPD_OUT_DIR"); env && *env) {
        return env;
    }
    return "dpd_out";
}

std::string run_header(const RunConfig& config) {
    std::string h = std::string("# dpd ") + version + " mode=" + to_string(config.mode) +
                    " seed=" + format_number(config.seed) + "\n";
    if (config.mode == Mode::Linearized || config.mode == Mode::MeanfieldEnsemble ||
        config.mode == Mode::MeanfieldMaster) {
        const meanfield::MFParams p = mf_params(config);
        const meanfield::Moments m = meanfield::analytic_moments(p, config.q0, 1.0);
        const meanfield::Moments bare =
            meanfield::analytic_moments(p, config.q0, 1.0, meanfield::VarianceConvention::WithoutRate);
        h += "# drift = " + display(m.drift) + "\n";
        h += "# variance rate = " + display(m.variance_rate) + " (v-scaled), " +
             display(bare.variance_rate) + " (unscaled)\n";
        if (config.mode == Mode::Linearized && m.drift > 0.0) {
            for (double eta : config.etas) {
                h += "# survival threshold eta=" + format_number(eta) + ": " +
                     display(meanfield::survival_threshold(p, config.q0, eta)) + " (sigma^2/4m), " +
                     display(meanfield::survival_threshold(p, config.q0, eta,
                                                           meanfield::ThresholdFormula::UnscaledDrift)) +
                     " (unscaled drift)\n";
            }
        }
    }
    return h;
}

DispatchResult dispatch(const RunConfig& config, std::ostream& log) {
    validate_config(config);
    const auto start = std::chrono::steady_clock::now();
    log << run_header(config) << std::flush;
    Outputs out(output_dir(config));
    switch (config.mode) {
    case Mode::Spatial:
    case Mode::Ghost:
        run_spatial(config, out);
        break;
    case Mode::Sweep:
        run_sweep(config, out);
        break;
    case Mode::MeanfieldMaster:
        run_master(config, out);
        break;
    case Mode::MeanfieldEnsemble:
        run_ensemble(config, out);
        break;
    case Mode::Linearized:
        run_linearized(config, out);
        break;
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    nlohmann::ordered_json manifest;
    manifest["tool"] = "dpd";
    manifest["version"] = version;
    manifest["mode"] = to_string(config.mode);
    manifest["seed"] = config.seed;
    manifest["config"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : emit_entries(config)) {
        manifest["config"][k] = v;
    }
    manifest["outputs"] = out.names();
    manifest["wall_time_seconds"] = elapsed.count();
    write_file(out.dir() / "manifest.json", manifest.dump(2) + "\n");

    for (const std::string& name : out.names()) {
        log << "# wrote " << (out.dir() / name).string() << "\n";
    }
    return DispatchResult{out.dir(), out.names(), elapsed.count()};
}

} // namespace dpd::cli
