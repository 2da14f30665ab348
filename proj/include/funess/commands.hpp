#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "funess/config.hpp"

namespace funess {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit statuses of the command-line tool.
enum ExitStatus : int {
    kExitOk = 0,
    kExitVerificationFailed = 1,
    kExitConfigError = 2,
};

struct CheckResult {
    std::string name;
    bool passed = false;
    double residual = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool all_passed() const;
};

/// Closed-form identities always; Monte Carlo law checks unless cfg.quick.
/// cfg.inject_fault swaps the composition check onto the broken-kernel fixture.
VerifyReport run_verification(const RunConfig& cfg);

/// Each command writes into cfg.output_dir, finishes with manifest.json and
/// returns an ExitStatus. Progress lines go to `log`.
int cmd_figures(const RunConfig& cfg, std::ostream& log);
int cmd_verify(const RunConfig& cfg, std::ostream& log);
int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_walk(const RunConfig& cfg, std::ostream& log);

/// Lowercase hex SHA-256 of a file's bytes. Throws IoFailure.
std::string sha256_file(const std::filesystem::path& path);

/// manifest.json with the command, version, seed, full config and the SHA-256
/// of every listed file (paths relative to `dir`).
void write_manifest(const std::filesystem::path& dir, const std::string& command, const RunConfig& cfg,
                    const std::vector<std::filesystem::path>& files);

}  // namespace funess
