#include "dpd/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "dpd/csv.hpp"
#include "dpd/engine.hpp"
#include "dpd/error.hpp"

namespace dpd::sweep {

Configuration initial_configuration(const SimParams& params, const InitialTemplate& initial, Rng& rng) {
    const std::uint64_t n = initial.cooperators + initial.defectors;
    if (n > params.K) {
        throw Error(ErrorCategory::ConstraintViolation, "initial population exceeds K");
    }
    if (!initial.placements.empty() && initial.placements.size() != n) {
        throw Error(ErrorCategory::ConstraintViolation, "placements must list every initial particle");
    }
    const Wealth wealth = to_quanta(initial.wealth, params.quanta_per_unit, "initial wealth");
    Configuration config(params.m, params.K);
    const auto m = static_cast<std::uint64_t>(params.m);
    for (std::uint64_t slot = 0; slot < n; ++slot) {
        Site site;
        if (initial.placements.empty()) {
            site.x = static_cast<std::int64_t>(rng.below(m));
            site.y = static_cast<std::int64_t>(rng.below(m));
        } else {
            site = initial.placements[slot];
        }
        config.add(slot, site, wealth, slot < initial.cooperators ? Strategy::Cooperator : Strategy::Defector);
    }
    return config;
}

Preset figure2_preset() {
    Preset p;
    p.params.m = 7;
    p.params.K = 10'000'000;
    p.params.d = 5.0;
    p.params.v = 5.0;
    p.params.b = 5.0;
    p.params.w0 = 3.0;
    p.params.wc = 10.0;
    p.params.flavor = Flavor::True;
    p.params.addressing = EventAddressing::Alive;
    p.initial = InitialTemplate{10, 10, 10.0, {}};
    p.event_budget = 10000;
    return p;
}

PayoffMatrix cell_payoffs(double R, double S, const SweepSpec& spec) {
    return PayoffMatrix{R + spec.t_offset, R, S, S + spec.p_offset};
}

std::uint64_t run_seed(std::uint64_t master, double R, double S, std::uint64_t run) {
    // + 0.0 folds -0 into +0
    return derive_seed(master, {label("cell"), std::bit_cast<std::uint64_t>(R + 0.0),
                                std::bit_cast<std::uint64_t>(S + 0.0), run});
}

SurvivalCounts run_once(double R, double S, const SweepSpec& spec, std::uint64_t index) {
    const PayoffMatrix payoffs = cell_payoffs(R, S, spec);
    validate(spec.params, payoffs, false);
    const std::uint64_t seed = run_seed(spec.master_seed, R, S, index);
    Rng placement(derive_seed(seed, {label("placement")}));
    EngineState state = make_state(initial_configuration(spec.params, spec.initial, placement), spec.params,
                                   payoffs, derive_seed(seed, {label("events")}));
    StopCondition stop;
    stop.max_events = spec.event_budget;
    if (spec.event_log_dir) {
        EventLog log(spec.event_log_keys, 1);
        run(state, stop, log.observer());
        const std::string name = "events_R" + format_number(R) + "_S" + format_number(S) + "_run" +
                                 format_number(index) + ".csv";
        write_file(*spec.event_log_dir / name, log.to_csv());
    } else {
        run(state, stop);
    }
    return survival_counts(state.config);
}

namespace {

CellResult aggregate(double R, double S, std::vector<SurvivalCounts> runs, double seconds) {
    CellResult cell{R, S, 0.0, 0.0, std::move(runs), seconds};
    std::uint64_t coop = 0;
    std::uint64_t def = 0;
    for (const SurvivalCounts& c : cell.runs) {
        coop += c.cooperators;
        def += c.defectors;
    }
    const auto n = static_cast<double>(cell.runs.size());
    cell.mean_coop = static_cast<double>(coop) / n;
    cell.mean_def = static_cast<double>(def) / n;
    return cell;
}

void check_spec(const SweepSpec& spec) {
    if (spec.batch_size < 1) {
        throw Error(ErrorCategory::ConstraintViolation, "batch_size>=1");
    }
    if (spec.R_values.empty() || spec.S_values.empty()) {
        throw Error(ErrorCategory::ConstraintViolation, "sweep grid is empty");
    }
    for (double R : spec.R_values) {
        for (double S : spec.S_values) {
            validate(spec.params, cell_payoffs(R, S, spec), false);
        }
    }
}

} // namespace

CellResult run_cell(double R, double S, const SweepSpec& spec) {
    if (spec.batch_size < 1) {
        throw Error(ErrorCategory::ConstraintViolation, "batch_size>=1");
    }
    validate(spec.params, cell_payoffs(R, S, spec), false);
    const auto start = std::chrono::steady_clock::now();
    std::vector<SurvivalCounts> runs;
    runs.reserve(spec.batch_size);
    for (std::uint64_t k = 0; k < spec.batch_size; ++k) {
        runs.push_back(run_once(R, S, spec, k));
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    return aggregate(R, S, std::move(runs), elapsed.count());
}

SweepGrid run_grid(const SweepSpec& spec, unsigned parallelism) {
    check_spec(spec);
    const std::set<double> rs(spec.R_values.begin(), spec.R_values.end());
    const std::set<double> ss(spec.S_values.begin(), spec.S_values.end());
    std::vector<std::pair<double, double>> cells;
    for (double R : rs) {
        for (double S : ss) {
            cells.emplace_back(R, S);
        }
    }
    const std::uint64_t batch = spec.batch_size;
    const std::uint64_t jobs = cells.size() * batch;
    std::vector<SurvivalCounts> results(jobs);
    std::vector<double> seconds(jobs, 0.0);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        while (true) {
            const std::uint64_t job = next.fetch_add(1);
            if (job >= jobs) {
                return;
            }
            const auto& [R, S] = cells[job / batch];
            const auto start = std::chrono::steady_clock::now();
            try {
                results[job] = run_once(R, S, spec, job % batch);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(jobs);
                return;
            }
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            seconds[job] = elapsed.count();
        }
    };

    const unsigned threads = std::max(1u, parallelism);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    SweepGrid grid;
    grid.batch_size = batch;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto first = static_cast<std::ptrdiff_t>(c * batch);
        std::vector<SurvivalCounts> runs(results.begin() + first, results.begin() + first + static_cast<std::ptrdiff_t>(batch));
        double total = 0.0;
        for (std::uint64_t k = 0; k < batch; ++k) {
            total += seconds[c * batch + k];
        }
        grid.cells.push_back(aggregate(cells[c].first, cells[c].second, std::move(runs), total));
    }
    return grid;
}

std::string long_csv(const SweepGrid& grid) {
    std::string out = csv_row({"R", "S", "mean_coop", "mean_def", "batch_size"});
    for (const CellResult& c : grid.cells) {
        out += csv_row({format_number(c.R), format_number(c.S), format_number(c.mean_coop), format_number(c.mean_def),
                        format_number(grid.batch_size)});
    }
    return out;
}

std::string matrix_csv(const SweepGrid& grid) {
    std::set<double> rs;
    std::set<double> ss;
    for (const CellResult& c : grid.cells) {
        rs.insert(c.R);
        ss.insert(c.S);
    }
    std::vector<std::string> header = {"R/S"};
    for (double S : ss) {
        header.push_back(format_number(S));
    }
    std::string out = csv_row(header);
    for (double R : rs) {
        std::vector<std::string> row = {format_number(R)};
        for (double S : ss) {
            auto it = std::find_if(grid.cells.begin(), grid.cells.end(),
                                   [&](const CellResult& c) { return c.R == R && c.S == S; });
            row.push_back(it == grid.cells.end() ? "" : format_number(it->mean_coop));
        }
        out += csv_row(row);
    }
    return out;
}

void emit_heatmap(const SweepGrid& grid, const std::filesystem::path& long_path,
                  const std::filesystem::path& matrix_path) {
    write_file(long_path, long_csv(grid));
    write_file(matrix_path, matrix_csv(grid));
}

} // namespace dpd::sweep
