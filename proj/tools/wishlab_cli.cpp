#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "wishlab/experiment.hpp"

namespace {

void report(const std::string& kind, const std::string& message) {
    std::cerr << wishlab::Json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Renormalized Wishart matrices built from Gaussian process increments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    unsigned threads = 0;
    std::uint64_t seed = 0;

    for (const auto& name : wishlab::subcommands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON or key=value config file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "overrides run.seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report("usage", e.what());
        return 2;
    }

    const std::string subcommand = app.get_subcommands().front()->get_name();
    const auto* sub = app.get_subcommands().front();
    try {
        std::optional<std::uint64_t> seed_override;
        if (sub->count("--seed")) seed_override = seed;
        const wishlab::LoadedConfig loaded = wishlab::load_config(config_path, seed_override);
        const unsigned t = sub->count("--threads") ? threads : loaded.threads.value_or(wishlab::default_threads());
        const std::string dir = sub->count("--out") ? out_dir : loaded.out.value_or("out");
        wishlab::run_experiment(subcommand, loaded.config, dir, t);
    } catch (const std::exception& e) {
        report(wishlab::error_kind(e), e.what());
        return wishlab::exit_code_for(e);
    }
    return 0;
}
