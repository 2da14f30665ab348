#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "funess/params.hpp"
#include "funess/randomwalk.hpp"

namespace funess {

/// One run of the command-line tool, read from a JSON document.
///
/// Unknown keys are rejected. A manifest written by a previous run is also
/// accepted; its "config" member is used.
struct RunConfig {
    RawParams params{};
    std::optional<double> lambda;
    std::vector<double> tau_grid;       ///< strictly ascending, >= 0
    std::vector<double> q_list;         ///< initial probabilities of x1
    std::uint64_t seed = 20240607;
    std::size_t n_trajectories = 10000;
    std::string output_dir = "funess_out";
    double horizon = 10.0;              ///< simulated span after t0
    std::vector<double> walk_grid;      ///< read-out times for walks
    bool markov_reference = false;      ///< also emit curves for r = 1 - k
    std::optional<std::size_t> threads;
    std::size_t max_exported_paths = 1000;
    WalkReadout walk_readout = WalkReadout::Trajectory;
    bool quick = false;
    bool inject_fault = false;          ///< verify: use the broken-kernel fixture
};

/// The defaults used when no config file is given: k = 0.75, r = 0.5,
/// alpha = 2, x = (1, -1), q1 in {0.2, 0.5, 0.8}, tau in [0, 3].
RunConfig default_config();

/// Throws Error{ConfigError} on malformed JSON, unknown keys or wrong types,
/// and the validation errors of validate_config.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Checks the grids, q_list and parameters. Parameter errors keep their code
/// (OutOfRange, MemoryRegime); everything else is ConfigError.
void validate_config(const RunConfig& cfg);

/// Canonical JSON (sorted keys, two-space indent).
std::string dump_config(const RunConfig& cfg);

/// Worker count: cfg.threads if set, else hardware concurrency; FUNESS_THREADS caps either.
std::size_t resolve_threads(const RunConfig& cfg);

std::string_view to_string(WalkReadout readout);

}  // namespace funess
