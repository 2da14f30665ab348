// funess: figure data, verification and simulation drivers.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "funess/commands.hpp"
#include "funess/config.hpp"
#include "funess/error.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    bool quick = false;
    bool inject_fault = false;
};

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "base seed (overrides the config)");
    sub->add_option("--out", o.out, "output directory (overrides the config)");
    sub->add_flag("--quick", o.quick, "reduced workload");
}

funess::RunConfig resolve(const CLI::App* sub, const CommonOptions& o) {
    funess::RunConfig cfg = o.config_path.empty() ? funess::default_config() : funess::load_config(o.config_path);
    if (sub->count("--seed") > 0) cfg.seed = o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.quick) cfg.quick = true;
    if (o.inject_fault) cfg.inject_fault = true;
    funess::validate_config(cfg);
    return cfg;
}

bool is_config_error(funess::ErrorCode code) {
    using funess::ErrorCode;
    return code == ErrorCode::ConfigError || code == ErrorCode::OutOfRange || code == ErrorCode::MemoryRegime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-state first-event-memory process: figures, verification, simulation"};
    app.set_version_flag("--version", funess::kVersion);
    app.require_subcommand(1);

    CommonOptions opts;
    auto* figures = app.add_subcommand("figures", "write correlation and mutual-information curves");
    auto* verify = app.add_subcommand("verify", "run the identity and Monte Carlo check suite");
    auto* simulate = app.add_subcommand("simulate", "sample a trajectory ensemble");
    auto* walk = app.add_subcommand("walk", "sample the memory-driven random walk");
    for (auto* sub : {figures, verify, simulate, walk}) add_common(sub, opts);
    verify->add_flag("--inject-fault", opts.inject_fault, "run the composition check on a broken kernel");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : funess::kExitConfigError;
    }

    try {
        if (*figures) return funess::cmd_figures(resolve(figures, opts), std::cout);
        if (*verify) return funess::cmd_verify(resolve(verify, opts), std::cout);
        if (*simulate) return funess::cmd_simulate(resolve(simulate, opts), std::cout);
        if (*walk) return funess::cmd_walk(resolve(walk, opts), std::cout);
    } catch (const funess::Error& e) {
        std::cerr << "error [" << funess::to_string(e.code()) << "]: " << e.what() << '\n';
        return is_config_error(e.code()) ? funess::kExitConfigError : funess::kExitVerificationFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return funess::kExitVerificationFailed;
    }
    return funess::kExitOk;
}
