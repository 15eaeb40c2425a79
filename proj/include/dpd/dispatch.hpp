// Runs a RunConfig and writes its outputs plus a manifest.json.
#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "dpd/config.hpp"

namespace dpd::cli {

inline constexpr const char* version = "0.1.0";

// config.out, else $DPD_OUT_DIR, else ./dpd_out.
std::filesystem::path output_dir(const RunConfig& config);

// One line per fact, each starting with "# ". Linearized and mean-field
// modes report the drift of the linearized process.
std::string run_header(const RunConfig& config);

struct DispatchResult {
    std::filesystem::path out_dir;
    std::vector<std::string> outputs; // file names relative to out_dir
    double wall_seconds = 0.0;
};

// Validates, prints the header to `log`, runs the mode and writes the
// outputs. The manifest echoes the full config, so rerunning with
// --config <out>/manifest.json reproduces every CSV byte for byte.
DispatchResult dispatch(const RunConfig& config, std::ostream& log);

} // namespace dpd::cli
