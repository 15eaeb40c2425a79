// dpd: command-line front end for the simulator and the mean-field tools.
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpd/config.hpp"
#include "dpd/dispatch.hpp"
#include "dpd/error.hpp"

using namespace dpd;
using namespace dpd::cli;

namespace {

struct Command {
    const char* name;
    const char* help;
    std::optional<Mode> base;
    std::set<Mode> allowed;
};

const std::vector<Command>& commands() {
    static const std::vector<Command> list = {
        {"run", "simulate the spatial model (mode spatial or ghost)", Mode::Spatial, {Mode::Spatial, Mode::Ghost}},
        {"sweep", "batch runs over an (R, S) grid", Mode::Sweep, {Mode::Sweep}},
        {"meanfield", "mean-field master equation or ensemble", Mode::MeanfieldMaster,
         {Mode::MeanfieldMaster, Mode::MeanfieldEnsemble}},
        {"linearized", "linearized process: moments, Chebyshev coverage, survival", Mode::Linearized,
         {Mode::Linearized}},
        {"validate", "check a config and print it in full", std::nullopt, {}},
    };
    return list;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatial demographic prisoner's dilemma: simulation, sweeps and mean-field analysis.\n"
                 "Every config key is also a flag: --key value. Flags override the --config file."};
    app.fallthrough();
    app.allow_extras();
    app.set_version_flag("--version", version);

    std::string config_path;
    app.add_option("--config", config_path, "key = value file, or a manifest.json from an earlier run");
    std::map<std::string, std::string> values;
    for (const std::string& key : config_keys()) {
        app.add_option("--" + key, values[key]);
    }
    std::vector<CLI::App*> subs;
    for (const Command& c : commands()) {
        subs.push_back(app.add_subcommand(c.name, c.help));
    }
    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code(ErrorCategory::ParseError);
    }

    try {
        std::vector<std::string> extras = app.remaining();
        for (CLI::App* sub : subs) {
            for (const std::string& x : sub->remaining()) {
                extras.push_back(x);
            }
        }
        for (const std::string& x : extras) {
            if (x.rfind("--", 0) == 0) {
                const std::string key = x.substr(2, x.find('=') == std::string::npos ? std::string::npos : x.find('=') - 2);
                throw Error(ErrorCategory::UnknownKey, "unknown key '" + key + "' (flag)");
            }
            throw Error(ErrorCategory::ParseError, "unexpected argument '" + x + "'");
        }

        const Command* command = nullptr;
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (subs[i]->parsed()) {
                command = &commands()[i];
            }
        }

        std::vector<Entry> file;
        if (!config_path.empty()) {
            file = read_entries(config_path);
        }
        std::vector<Entry> flags;
        for (const std::string& key : config_keys()) {
            if (app.count("--" + key) > 0) {
                flags.push_back(Entry{key, values[key], "flag --" + key});
            }
        }
        const RunConfig config = parse_config(file, flags, command ? command->base : std::nullopt);
        if (command && command->base && !command->allowed.contains(config.mode)) {
            throw Error(ErrorCategory::ParseError, std::string("mode '") + to_string(config.mode) +
                                                       "' does not belong to subcommand '" + command->name + "'");
        }
        if (command && !command->base) {
            validate_config(config);
            std::cout << emit_config(config);
            return 0;
        }
        dispatch(config, std::cout);
        return 0;
    } catch (const Error& e) {
        std::cerr << "error [" << category_name(e.category()) << "]: " << e.what() << "\n";
        return exit_code(e.category());
    }
}
