#include "dpd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dpd/csv.hpp"
#include "dpd/error.hpp"
#include "dpd/observables.hpp"

namespace dpd::cli {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw Error(ErrorCategory::ParseError, "key '" + key + "': expected " + expected + ", got '" + value + "'");
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    if (trim(s).empty()) {
        return parts;
    }
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, sep)) {
        parts.push_back(trim(part));
    }
    if (!s.empty() && s.back() == sep) {
        parts.emplace_back();
    }
    return parts;
}

template <typename T>
bool parse_integer(const std::string& s, T& out) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty();
}

bool parse_real(const std::string& s, double& out) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty() && std::isfinite(out);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    if (!parse_integer(v, x)) {
        bad_value(key, v, "a nonnegative integer");
    }
    return x;
}

std::int64_t to_i64(const std::string& key, const std::string& v) {
    std::int64_t x = 0;
    if (!parse_integer(v, x)) {
        bad_value(key, v, "an integer");
    }
    return x;
}

double to_real(const std::string& key, const std::string& v) {
    double x = 0.0;
    if (!parse_real(v, x)) {
        bad_value(key, v, "a finite number");
    }
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true") {
        return true;
    }
    if (v == "false") {
        return false;
    }
    bad_value(key, v, "true or false");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

// Comma list of numbers; an element "a:b:step" expands to a, a+step, ..., b.
std::vector<double> to_reals(const std::string& key, const std::string& v, bool ranges) {
    std::vector<double> out;
    for (const std::string& item : split(v, ',')) {
        const auto fields = split(item, ':');
        if (ranges && fields.size() == 3) {
            const double a = to_real(key, fields[0]);
            const double b = to_real(key, fields[1]);
            const double step = to_real(key, fields[2]);
            if (!(step > 0.0) || b < a) {
                bad_value(key, item, "a range start:stop:step with step>0 and stop>=start");
            }
            const auto n = static_cast<std::int64_t>(std::floor((b - a) / step + 1e-9));
            for (std::int64_t k = 0; k <= n; ++k) {
                out.push_back(a + static_cast<double>(k) * step);
            }
        } else {
            out.push_back(to_real(key, item));
        }
    }
    return out;
}

std::string from_reals(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        s += (i ? "," : "") + format_number(xs[i]);
    }
    return s;
}

template <typename E>
struct EnumName {
    E value;
    const char* name;
};

constexpr EnumName<Mode> mode_names[] = {
    {Mode::Spatial, "spatial"},
    {Mode::Ghost, "ghost"},
    {Mode::MeanfieldEnsemble, "meanfield-ensemble"},
    {Mode::MeanfieldMaster, "meanfield-master"},
    {Mode::Linearized, "linearized"},
    {Mode::Sweep, "sweep"},
};
constexpr EnumName<EventAddressing> addressing_names[] = {
    {EventAddressing::AllSlots, "all-slots"},
    {EventAddressing::Born, "born"},
    {EventAddressing::Alive, "alive"},
};
constexpr EnumName<GhostDecrement> decrement_names[] = {
    {GhostDecrement::Cooperators, "cooperators"},
    {GhostDecrement::Everyone, "everyone"},
};
constexpr EnumName<meanfield::Scheme> scheme_names[] = {
    {meanfield::Scheme::RK4, "rk4"},
    {meanfield::Scheme::Euler, "euler"},
};

template <typename E, std::size_t N>
E to_enum(const std::string& key, const std::string& v, const EnumName<E> (&names)[N]) {
    for (const auto& n : names) {
        if (v == n.name) {
            return n.value;
        }
    }
    std::string expected = "one of";
    for (const auto& n : names) {
        expected += std::string(" ") + n.name;
    }
    bad_value(key, v, expected.c_str());
}

template <typename E, std::size_t N>
std::string from_enum(E value, const EnumName<E> (&names)[N]) {
    for (const auto& n : names) {
        if (n.value == value) {
            return n.name;
        }
    }
    return "?";
}

struct KeyDef {
    const char* name;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define DPD_U64(field)                                                                      \
    [](RunConfig& c, const std::string& k, const std::string& v) { c.field = to_u64(k, v); }, \
        [](const RunConfig& c) { return format_number(static_cast<std::uint64_t>(c.field)); }
#define DPD_REAL(field)                                                                      \
    [](RunConfig& c, const std::string& k, const std::string& v) { c.field = to_real(k, v); }, \
        [](const RunConfig& c) { return format_number(c.field); }
#define DPD_BOOL(field)                                                                      \
    [](RunConfig& c, const std::string& k, const std::string& v) { c.field = to_bool(k, v); }, \
        [](const RunConfig& c) { return from_bool(c.field); }
#define DPD_REALS(field, ranges)                                                                        \
    [](RunConfig& c, const std::string& k, const std::string& v) { c.field = to_reals(k, v, ranges); }, \
        [](const RunConfig& c) { return from_reals(c.field); }

const std::vector<KeyDef>& key_table() {
    static const std::vector<KeyDef> table = {
        {"mode", [](RunConfig& c, const std::string& k, const std::string& v) { c.mode = to_enum(k, v, mode_names); },
         [](const RunConfig& c) { return from_enum(c.mode, mode_names); }},
        {"preset",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v != "none" && v != "figure2") {
                 bad_value(k, v, "none or figure2");
             }
             c.preset = v;
         },
         [](const RunConfig& c) { return c.preset; }},
        {"seed", DPD_U64(seed)},
        {"out", [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; },
         [](const RunConfig& c) { return c.out; }},
        {"stride",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.stride = to_u64(k, v);
             if (c.stride == 0) {
                 bad_value(k, v, "a positive integer");
             }
         },
         [](const RunConfig& c) { return format_number(c.stride); }},
        {"m", [](RunConfig& c, const std::string& k, const std::string& v) { c.params.m = to_i64(k, v); },
         [](const RunConfig& c) { return format_number(c.params.m); }},
        {"K", DPD_U64(params.K)},
        {"d", DPD_REAL(params.d)},
        {"v", DPD_REAL(params.v)},
        {"b", DPD_REAL(params.b)},
        {"w0", DPD_REAL(params.w0)},
        {"wc", DPD_REAL(params.wc)},
        {"T", DPD_REAL(payoffs.T)},
        {"R", DPD_REAL(payoffs.R)},
        {"S", DPD_REAL(payoffs.S)},
        {"P", DPD_REAL(payoffs.P)},
        {"strict", DPD_BOOL(strict)},
        {"addressing",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.params.addressing = to_enum(k, v, addressing_names);
         },
         [](const RunConfig& c) { return from_enum(c.params.addressing, addressing_names); }},
        {"ghost_decrement",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.params.ghost_decrement = to_enum(k, v, decrement_names);
         },
         [](const RunConfig& c) { return from_enum(c.params.ghost_decrement, decrement_names); }},
        {"quanta", [](RunConfig& c, const std::string& k, const std::string& v) { c.params.quanta_per_unit = to_i64(k, v); },
         [](const RunConfig& c) { return format_number(c.params.quanta_per_unit); }},
        {"events", DPD_U64(events)},
        {"max_time",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "none") {
                 c.max_time.reset();
             } else {
                 c.max_time = to_real(k, v);
             }
         },
         [](const RunConfig& c) { return c.max_time ? format_number(*c.max_time) : std::string("none"); }},
        {"cooperators", DPD_U64(initial.cooperators)},
        {"defectors", DPD_U64(initial.defectors)},
        {"initial_wealth", DPD_REAL(initial.wealth)},
        {"placements",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.initial.placements.clear();
             for (const std::string& item : split(v, ',')) {
                 const auto xy = split(item, ':');
                 if (xy.size() != 2) {
                     bad_value(k, item, "x:y");
                 }
                 c.initial.placements.push_back(Site{to_i64(k, xy[0]), to_i64(k, xy[1])});
             }
         },
         [](const RunConfig& c) {
             std::string s;
             for (std::size_t i = 0; i < c.initial.placements.size(); ++i) {
                 const Site& p = c.initial.placements[i];
                 s += (i ? "," : "") + format_number(p.x) + ":" + format_number(p.y);
             }
             return s;
         }},
        {"observables",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.observables = split(v, ',');
             for (const std::string& o : c.observables) {
                 if (!is_observable_key(o)) {
                     bad_value(k, o, "an observable key");
                 }
             }
         },
         [](const RunConfig& c) {
             std::string s;
             for (std::size_t i = 0; i < c.observables.size(); ++i) {
                 s += (i ? "," : "") + c.observables[i];
             }
             return s;
         }},
        {"r_grid", DPD_REALS(r_grid, true)},
        {"s_grid", DPD_REALS(s_grid, true)},
        {"batch", DPD_U64(batch)},
        {"t_offset", DPD_REAL(t_offset)},
        {"p_offset", DPD_REAL(p_offset)},
        {"parallelism",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             const std::uint64_t p = to_u64(k, v);
             if (p < 1 || p > 1024) {
                 bad_value(k, v, "an integer in [1, 1024]");
             }
             c.parallelism = static_cast<unsigned>(p);
         },
         [](const RunConfig& c) { return format_number(static_cast<std::uint64_t>(c.parallelism)); }},
        {"event_logs", DPD_BOOL(event_logs)},
        {"beta0", DPD_REAL(beta0)},
        {"rho0", DPD_REAL(rho0)},
        {"m0",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.m0.clear();
             for (const std::string& item : split(v, ',')) {
                 const auto wp = split(item, ':');
                 if (wp.size() != 2) {
                     bad_value(k, item, "wealth:probability");
                 }
                 c.m0.emplace_back(to_real(k, wp[0]), to_real(k, wp[1]));
             }
         },
         [](const RunConfig& c) {
             std::string s;
             for (std::size_t i = 0; i < c.m0.size(); ++i) {
                 s += (i ? "," : "") + format_number(c.m0[i].first) + ":" + format_number(c.m0[i].second);
             }
             return s;
         }},
        {"half_rate", DPD_BOOL(half_rate)},
        {"t_end", DPD_REAL(t_end)},
        {"dt", DPD_REAL(dt)},
        {"scheme", [](RunConfig& c, const std::string& k, const std::string& v) { c.scheme = to_enum(k, v, scheme_names); },
         [](const RunConfig& c) { return from_enum(c.scheme, scheme_names); }},
        {"ensemble_size", DPD_U64(ensemble_size)},
        {"sample_dt", DPD_REAL(sample_dt)},
        {"q0", DPD_REAL(q0)},
        {"paths", DPD_U64(paths)},
        {"times", DPD_REALS(times, false)},
        {"etas", DPD_REALS(etas, false)},
        {"horizons", DPD_REALS(horizons, false)},
    };
    return table;
}

#undef DPD_U64
#undef DPD_REAL
#undef DPD_BOOL
#undef DPD_REALS

const KeyDef& find_key(const Entry& e) {
    for (const KeyDef& k : key_table()) {
        if (e.key == k.name) {
            return k;
        }
    }
    throw Error(ErrorCategory::UnknownKey, "unknown key '" + e.key + "' (" + e.origin + ")");
}

void apply(RunConfig& config, const Entry& e) {
    try {
        find_key(e).set(config, e.key, e.value);
    } catch (const Error& err) {
        if (err.category() == ErrorCategory::ParseError) {
            throw Error(ErrorCategory::ParseError, e.origin + ": " + err.what());
        }
        throw;
    }
}

} // namespace

const char* to_string(Mode mode) {
    for (const auto& n : mode_names) {
        if (n.value == mode) {
            return n.name;
        }
    }
    return "?";
}

std::vector<Entry> parse_entries(const std::string& text, const std::string& source) {
    std::vector<Entry> entries;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string origin = source + ":" + std::to_string(number);
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        if (trim(line).empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCategory::ParseError, origin + ": expected 'key = value'");
        }
        Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), origin};
        if (e.key.empty()) {
            throw Error(ErrorCategory::ParseError, origin + ": missing key");
        }
        if (!seen.insert(e.key).second) {
            throw Error(ErrorCategory::ParseError, origin + ": key '" + e.key + "' repeated");
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

std::vector<Entry> read_entries(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCategory::Io, "cannot read config '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
        std::vector<Entry> entries;
        try {
            const nlohmann::json manifest = nlohmann::json::parse(buffer.str());
            for (const auto& [key, value] : manifest.at("config").items()) {
                entries.push_back(Entry{key, value.get<std::string>(), path + ": config." + key});
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCategory::ParseError, path + ": not a run manifest (" + e.what() + ")");
        }
        return entries;
    }
    return parse_entries(buffer.str(), path);
}

RunConfig parse_config(const std::vector<Entry>& file, const std::vector<Entry>& flags, std::optional<Mode> base_mode) {
    for (const Entry& e : file) {
        find_key(e);
    }
    for (const Entry& e : flags) {
        find_key(e);
    }
    RunConfig config;
    // The preset is resolved first so every explicit key overrides it.
    std::optional<Entry> preset;
    for (const auto* list : {&file, &flags}) {
        for (const Entry& e : *list) {
            if (e.key == "preset") {
                preset = e;
            }
        }
    }
    if (preset) {
        apply(config, *preset);
        if (config.preset == "figure2") {
            apply_figure2(config);
        }
    }
    if (base_mode) {
        config.mode = *base_mode;
    }
    for (const auto* list : {&file, &flags}) {
        for (const Entry& e : *list) {
            apply(config, e);
        }
    }
    return config;
}

std::vector<std::pair<std::string, std::string>> emit_entries(const RunConfig& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const KeyDef& k : key_table()) {
        out.emplace_back(k.name, k.get(config));
    }
    return out;
}

std::string emit_config(const RunConfig& config) {
    std::string text;
    for (const auto& [k, v] : emit_entries(config)) {
        text += k + " = " + v + "\n";
    }
    return text;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> ks;
        for (const KeyDef& k : key_table()) {
            ks.emplace_back(k.name);
        }
        return ks;
    }();
    return keys;
}

bool is_config_key(const std::string& key) {
    const auto& keys = config_keys();
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

void apply_figure2(RunConfig& config) {
    const sweep::Preset p = sweep::figure2_preset();
    config.params = p.params;
    config.initial = p.initial;
    config.events = p.event_budget;
    config.strict = false;
    config.t_offset = 1.0;
    config.p_offset = -1.0;
    config.r_grid = to_reals("r_grid", "0:100:1", true);
    config.s_grid = config.r_grid;
    config.batch = 100;
    config.payoffs = PayoffMatrix{4.0, 3.0, 2.0, 1.0};
}

SimParams sim_params(const RunConfig& config) {
    SimParams p = config.params;
    p.flavor = config.mode == Mode::Ghost ? Flavor::Ghost : Flavor::True;
    return p;
}

meanfield::MFParams mf_params(const RunConfig& config) {
    meanfield::MFParams p;
    p.beta0 = config.beta0;
    p.rho0 = config.rho0;
    p.v = config.params.v;
    p.payoffs = config.payoffs;
    p.m0 = config.m0;
    p.half_rate = config.half_rate;
    return p;
}

sweep::SweepSpec sweep_spec(const RunConfig& config, const std::string& event_log_dir) {
    sweep::SweepSpec spec;
    spec.R_values = config.r_grid;
    spec.S_values = config.s_grid;
    spec.batch_size = config.batch;
    spec.params = sim_params(config);
    spec.initial = config.initial;
    spec.event_budget = config.events;
    spec.t_offset = config.t_offset;
    spec.p_offset = config.p_offset;
    spec.master_seed = config.seed;
    if (config.event_logs && !event_log_dir.empty()) {
        spec.event_log_dir = event_log_dir;
        spec.event_log_keys = config.observables;
    }
    return spec;
}

void validate_config(const RunConfig& config) {
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw Error(ErrorCategory::ConstraintViolation, what);
        }
    };
    switch (config.mode) {
    case Mode::Spatial:
    case Mode::Ghost:
        validate(sim_params(config), config.payoffs, config.strict);
        quantize(config.payoffs, sim_params(config));
        require(config.initial.cooperators + config.initial.defectors <= config.params.K,
                "initial population exceeds K");
        require(!config.max_time || *config.max_time >= 0.0, "max_time>=0");
        break;
    case Mode::Sweep: {
        require(config.batch >= 1, "batch>=1");
        require(!config.r_grid.empty() && !config.s_grid.empty(), "sweep grid is empty");
        const sweep::SweepSpec spec = sweep_spec(config);
        for (double R : spec.R_values) {
            for (double S : spec.S_values) {
                const PayoffMatrix pm = sweep::cell_payoffs(R, S, spec);
                validate(spec.params, pm, false);
                quantize(pm, spec.params);
            }
        }
        break;
    }
    case Mode::MeanfieldEnsemble:
    case Mode::MeanfieldMaster:
        meanfield::validate(mf_params(config));
        require(config.t_end >= 0.0, "t_end>=0");
        require(config.sample_dt > 0.0, "sample_dt>0");
        require(config.dt > 0.0, "dt>0");
        require(config.mode == Mode::MeanfieldMaster || config.ensemble_size >= 1, "ensemble_size>=1");
        break;
    case Mode::Linearized:
        meanfield::validate(mf_params(config));
        require(config.paths >= 1, "paths>=1");
        for (double t : config.times) {
            require(t >= 0.0, "times>=0");
        }
        for (double e : config.etas) {
            require(e > 0.0, "etas>0");
        }
        for (double h : config.horizons) {
            require(h >= 0.0, "horizons>=0");
        }
        break;
    }
}

} // namespace dpd::cli
