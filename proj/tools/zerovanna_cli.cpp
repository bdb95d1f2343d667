// Batch runner: zero-vanna implied volatility vs. volatility-swap strike under rough volatility.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "zerovanna/experiment.hpp"

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zerovanna: volatility swaps vs. zero-vanna implied volatility under rough volatility"};
    app.set_version_flag("--version", zerovanna::version());

    std::string config_path;
    app.add_option("-c,--config", config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);

    // Flag -> config key. Flags override values from the config file.
    const std::vector<std::pair<std::string, std::string>> flag_keys{
        {"--sigma0", "sigma0"},   {"--nu", "nu"},         {"--rho", "rho"},
        {"--hurst", "hurst"},     {"--maturities", "maturities"}, {"--x0", "x0"},
        {"--steps", "n_steps"},   {"--paths", "n_paths"}, {"--seed", "seed"},
        {"--estimator", "estimator"}, {"--scheme", "scheme"}, {"--kernel", "kernel"},
        {"--control-variate", "control_variate"}, {"--block-size", "block_size"},
        {"--threads", "threads"}, {"--out", "output"},    {"--mode", "mode"}};
    std::vector<std::string> flag_values(flag_keys.size());
    for (std::size_t i = 0; i < flag_keys.size(); ++i) {
        app.add_option(flag_keys[i].first, flag_values[i], "Overrides config key '" + flag_keys[i].second + "'");
    }
    std::string dump_paths;
    app.add_option("--dump-paths", dump_paths, "Write one block of simulated paths (binary) for debugging");
    bool print_config = false;
    app.add_flag("--print-config", print_config, "Print the resolved config and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    zerovanna::ExperimentConfig config;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            std::stringstream text;
            text << in.rdbuf();
            config = zerovanna::parse_config(text.str());
        }
        for (std::size_t i = 0; i < flag_keys.size(); ++i) {
            if (app.count(flag_keys[i].first) > 0) zerovanna::set_config_value(config, flag_keys[i].second, flag_values[i]);
        }
    } catch (const zerovanna::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    if (print_config) {
        std::cout << zerovanna::format_config(config);
        return 0;
    }

    zerovanna::RunOptions options;
    options.timestamp = utc_timestamp();
    for (int i = 0; i < argc; ++i) options.command_line += (i ? " " : "") + std::string(argv[i]);
    if (!dump_paths.empty()) options.dump_paths = dump_paths;

    try {
        return zerovanna::run(config, options, std::cout);
    } catch (const zerovanna::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
