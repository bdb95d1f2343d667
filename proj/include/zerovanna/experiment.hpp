#pragma once

/**
 * @file experiment.hpp
 * @brief Batch runner for the (rho, H, T) grid and convergence studies.
 *
 * Config files are plain text, one `key = value` or `key = [v1, v2, ...]` per line,
 * with `#` starting a comment. Omitted keys keep their defaults.
 */

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zerovanna/errors.hpp"
#include "zerovanna/fbm.hpp"
#include "zerovanna/mc_pricer.hpp"
#include "zerovanna/swap_analysis.hpp"

namespace zerovanna {

enum class RunMode { tables, convergence, single };

/// Raised for malformed config text or flags; key() names the offending entry.
class ConfigError : public DomainError {
public:
    ConfigError(std::string key, const std::string& what) : DomainError(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

struct ExperimentConfig {
    double sigma0 = 0.2;
    double nu = 0.4;
    std::vector<double> rho{0.0, -0.8};
    std::vector<double> hurst{0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<double> maturities{0.25, 0.5, 1.0, 2.0, 3.0};
    double x0 = 0.0;
    std::size_t n_steps = 500;  // per year of simulated time
    std::size_t n_paths = 200'000;
    std::uint64_t seed = 20240101;
    Estimator estimator = Estimator::conditional_mixing;
    Scheme scheme = Scheme::convolution;
    KernelRule kernel = KernelRule::cell_exact;
    ControlVariate control_variate = ControlVariate::bs_terminal;
    std::size_t block_size = 1024;
    unsigned threads = 1;
    std::filesystem::path output = "zerovanna.csv";
    RunMode mode = RunMode::tables;

    McConfig mc_config() const;
};

/// Every recognised key, in the order used when serialising.
const std::vector<std::string>& config_keys();

ExperimentConfig parse_config(std::string_view text);

/// Sets one key from its textual value (lists accept "[a, b]" or "a, b"). Throws ConfigError.
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Round-trippable key = value text.
std::string format_config(const ExperimentConfig& config);

std::string to_string(Estimator e);
std::string to_string(Scheme s);
std::string to_string(KernelRule k);
std::string to_string(ControlVariate c);
std::string to_string(RunMode m);

struct CellResult {
    double hurst = 0.0;
    double maturity = 0.0;
    double rho = 0.0;
    std::optional<SwapReport> report;
    std::string error;
};

/// All (rho, H, T) cells, ordered by rho then H then T as listed in the config.
std::vector<CellResult> run_cells(const ExperimentConfig& config);

struct RateRow {
    double hurst = 0.0;
    double rho = 0.0;
    std::string series;
    RateFit fit;
};

/// One fit per (rho, H) and error series, from completed cells.
std::vector<RateRow> fit_rates(const ExperimentConfig& config, const std::vector<CellResult>& cells);

void write_cells_csv(std::ostream& os, const ExperimentConfig& config, const std::vector<CellResult>& cells);
void write_rates_csv(std::ostream& os, const std::vector<RateRow>& rows);
void write_summary(std::ostream& os, const std::vector<CellResult>& cells);

struct RunOptions {
    /// Written into the manifest; left out when empty.
    std::string timestamp;
    std::string command_line;
    std::optional<std::filesystem::path> dump_paths;
};

/// Executes the configured mode, writes CSV + manifest. Returns 0, or 1 if any cell failed.
int run(const ExperimentConfig& config, const RunOptions& options, std::ostream& log);

std::string version();

}  // namespace zerovanna
