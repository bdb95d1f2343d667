#include "zerovanna/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#ifndef ZEROVANNA_VERSION
#define ZEROVANNA_VERSION "0.0.0"
#endif

namespace zerovanna {

std::string version() { return ZEROVANNA_VERSION; }

McConfig ExperimentConfig::mc_config() const {
    McConfig mc;
    mc.n_paths = n_paths;
    mc.seed = seed;
    mc.scheme = scheme;
    mc.estimator = estimator;
    mc.control_variate = control_variate;
    mc.kernel = kernel;
    mc.block_size = block_size;
    mc.n_threads = threads;
    return mc;
}

std::string to_string(Estimator e) { return e == Estimator::direct_euler ? "direct_euler" : "conditional_mixing"; }
std::string to_string(Scheme s) { return s == Scheme::cholesky_oracle ? "cholesky_oracle" : "convolution"; }
std::string to_string(KernelRule k) { return k == KernelRule::midpoint ? "midpoint" : "cell_exact"; }
std::string to_string(ControlVariate c) { return c == ControlVariate::none ? "none" : "bs_terminal"; }
std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::convergence: return "convergence";
        case RunMode::single: return "single";
        case RunMode::tables: break;
    }
    return "tables";
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string unquote(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
        s = s.substr(1, s.size() - 2);
    }
    return std::string(s);
}

double parse_double(const std::string& key, std::string_view text) {
    const std::string s(trim(text));
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError(key, key + ": expected a number, got '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw ConfigError(key, key + ": expected a number, got '" + s + "'");
    return v;
}

std::uint64_t parse_unsigned(const std::string& key, std::string_view text, std::uint64_t min_value) {
    const std::string s(trim(text));
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError(key, key + ": expected a non-negative integer, got '" + s + "'");
    }
    if (v < min_value) throw ConfigError(key, key + ": must be at least " + std::to_string(min_value));
    return v;
}

std::vector<double> parse_list(const std::string& key, std::string_view text) {
    std::string_view s = trim(text);
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']') throw ConfigError(key, key + ": unterminated list");
        s = s.substr(1, s.size() - 2);
    }
    std::vector<double> out;
    if (trim(s).empty()) throw ConfigError(key, key + ": list must not be empty");
    while (true) {
        const auto comma = s.find(',');
        out.push_back(parse_double(key, s.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        s = s.substr(comma + 1);
    }
    return out;
}

template <typename Enum>
Enum parse_enum(const std::string& key, std::string_view text, std::initializer_list<std::pair<const char*, Enum>> options) {
    const std::string s = unquote(text);
    for (const auto& [name, value] : options) {
        if (s == name) return value;
    }
    std::string allowed;
    for (const auto& [name, value] : options) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    throw ConfigError(key, key + ": unknown value '" + s + "' (expected one of " + allowed + ")");
}

void check_range(const std::string& key, const std::vector<double>& values, double lo, double hi, bool open) {
    for (double v : values) {
        const bool inside = open ? (v > lo && v < hi) : (v >= lo && v <= hi);
        if (!inside) throw ConfigError(key, key + ": value out of range");
    }
}

// Shortest text that parses back to the same double.
std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_list(const std::vector<double>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + format_number(values[i]);
    return out + "]";
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "sigma0", "nu",     "rho",     "hurst",  "maturities",      "x0",         "n_steps", "n_paths", "seed",
        "estimator", "scheme", "kernel", "control_variate", "block_size", "threads",  "output",  "mode"};
    return keys;
}

void set_config_value(ExperimentConfig& c, std::string_view key_view, std::string_view value) {
    const std::string key(trim(key_view));
    if (key == "sigma0") {
        c.sigma0 = parse_double(key, value);
        if (!(c.sigma0 > 0.0)) throw ConfigError(key, "sigma0: must be positive");
    } else if (key == "nu") {
        c.nu = parse_double(key, value);
        if (c.nu < 0.0) throw ConfigError(key, "nu: must be non-negative");
    } else if (key == "rho") {
        c.rho = parse_list(key, value);
        check_range(key, c.rho, -1.0, 1.0, false);
    } else if (key == "hurst") {
        c.hurst = parse_list(key, value);
        check_range(key, c.hurst, 0.0, 1.0, true);
    } else if (key == "maturities") {
        c.maturities = parse_list(key, value);
        check_range(key, c.maturities, 0.0, INFINITY, true);
    } else if (key == "x0") {
        c.x0 = parse_double(key, value);
    } else if (key == "n_steps") {
        c.n_steps = parse_unsigned(key, value, 1);
    } else if (key == "n_paths") {
        c.n_paths = parse_unsigned(key, value, 1);
    } else if (key == "seed") {
        c.seed = parse_unsigned(key, value, 0);
    } else if (key == "estimator") {
        c.estimator = parse_enum<Estimator>(
            key, value, {{"conditional_mixing", Estimator::conditional_mixing}, {"direct_euler", Estimator::direct_euler}});
    } else if (key == "scheme") {
        c.scheme = parse_enum<Scheme>(key, value,
                                      {{"convolution", Scheme::convolution}, {"cholesky_oracle", Scheme::cholesky_oracle}});
    } else if (key == "kernel") {
        c.kernel = parse_enum<KernelRule>(key, value,
                                          {{"cell_exact", KernelRule::cell_exact}, {"midpoint", KernelRule::midpoint}});
    } else if (key == "control_variate") {
        c.control_variate = parse_enum<ControlVariate>(
            key, value, {{"none", ControlVariate::none}, {"bs_terminal", ControlVariate::bs_terminal}});
    } else if (key == "block_size") {
        c.block_size = parse_unsigned(key, value, 1);
    } else if (key == "threads") {
        c.threads = static_cast<unsigned>(parse_unsigned(key, value, 1));
    } else if (key == "output") {
        const std::string path = unquote(value);
        if (path.empty()) throw ConfigError(key, "output: path must not be empty");
        c.output = path;
    } else if (key == "mode") {
        c.mode = parse_enum<RunMode>(
            key, value, {{"tables", RunMode::tables}, {"convergence", RunMode::convergence}, {"single", RunMode::single}});
    } else {
        throw ConfigError(key, "unknown key '" + key + "'");
    }
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig config;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(line), "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        set_config_value(config, line.substr(0, eq), line.substr(eq + 1));
    }
    return config;
}

std::string format_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "sigma0 = " << format_number(c.sigma0) << '\n'
       << "nu = " << format_number(c.nu) << '\n'
       << "rho = " << format_list(c.rho) << '\n'
       << "hurst = " << format_list(c.hurst) << '\n'
       << "maturities = " << format_list(c.maturities) << '\n'
       << "x0 = " << format_number(c.x0) << '\n'
       << "n_steps = " << c.n_steps << '\n'
       << "n_paths = " << c.n_paths << '\n'
       << "seed = " << c.seed << '\n'
       << "estimator = " << to_string(c.estimator) << '\n'
       << "scheme = " << to_string(c.scheme) << '\n'
       << "kernel = " << to_string(c.kernel) << '\n'
       << "control_variate = " << to_string(c.control_variate) << '\n'
       << "block_size = " << c.block_size << '\n'
       << "threads = " << c.threads << '\n'
       << "output = \"" << c.output.string() << "\"\n"
       << "mode = " << to_string(c.mode) << '\n';
    return os.str();
}

std::vector<CellResult> run_cells(const ExperimentConfig& config) {
    std::vector<double> hursts = config.hurst;
    std::vector<double> rhos = config.rho;
    std::vector<double> maturities = config.maturities;
    if (config.mode == RunMode::single) {
        hursts.resize(1);
        rhos.resize(1);
        maturities.resize(1);
    }
    const McConfig mc = config.mc_config();
    const bool rho_free = mc.estimator == Estimator::conditional_mixing;

    // results[rho][hurst][maturity]
    std::vector<std::vector<std::vector<CellResult>>> results(
        rhos.size(), std::vector<std::vector<CellResult>>(hursts.size(), std::vector<CellResult>(maturities.size())));

    auto fail_cells = [&](std::size_t r_lo, std::size_t r_hi, std::size_t h, const std::string& what) {
        for (std::size_t r = r_lo; r < r_hi; ++r) {
            for (auto& cell : results[r][h]) cell.error = what;
        }
    };

    for (std::size_t h = 0; h < hursts.size(); ++h) {
        // The volatility path does not depend on rho, so the conditional estimator shares one simulation.
        const std::size_t n_sims = rho_free ? 1 : rhos.size();
        for (std::size_t s = 0; s < n_sims; ++s) {
            const std::size_t r_lo = rho_free ? 0 : s;
            const std::size_t r_hi = rho_free ? rhos.size() : s + 1;
            ModelParams params{config.sigma0, config.nu, rhos[r_lo], hursts[h]};
            std::vector<PathFunctionals> funcs;
            try {
                funcs = simulate_maturities(params, maturities, config.n_steps, mc, config.x0);
            } catch (const std::exception& e) {
                fail_cells(r_lo, r_hi, h, e.what());
                continue;
            }
            for (std::size_t r = r_lo; r < r_hi; ++r) {
                params.rho = rhos[r];
                for (std::size_t t = 0; t < maturities.size(); ++t) {
                    CellResult& cell = results[r][h][t];
                    try {
                        cell.report = zero_vanna_report(make_pricer(funcs[t], params, config.x0, maturities[t], mc),
                                                        vol_swap_strike(funcs[t], maturities[t]), params, config.x0,
                                                        maturities[t]);
                    } catch (const std::exception& e) {
                        cell.error = e.what();
                    }
                }
            }
        }
    }

    std::vector<CellResult> out;
    for (std::size_t r = 0; r < rhos.size(); ++r) {
        for (std::size_t h = 0; h < hursts.size(); ++h) {
            for (std::size_t t = 0; t < maturities.size(); ++t) {
                CellResult cell = std::move(results[r][h][t]);
                cell.rho = rhos[r];
                cell.hurst = hursts[h];
                cell.maturity = maturities[t];
                out.push_back(std::move(cell));
            }
        }
    }
    return out;
}

std::vector<RateRow> fit_rates(const ExperimentConfig& config, const std::vector<CellResult>& cells) {
    std::vector<RateRow> rows;
    for (double rho : config.rho) {
        for (double hurst : config.hurst) {
            std::vector<SwapReport> reports;
            for (const auto& c : cells) {
                if (c.rho == rho && c.hurst == hurst && c.report) reports.push_back(*c.report);
            }
            if (reports.empty()) continue;
            const ConvergenceStudy study = convergence_study(std::move(reports));
            rows.push_back({hurst, rho, "zero_vanna", study.zero_vanna});
            rows.push_back({hurst, rho, "atmi", study.atmi});
        }
    }
    return rows;
}

void write_cells_csv(std::ostream& os, const ExperimentConfig& config, const std::vector<CellResult>& cells) {
    os << "H,T,rho,vol_swap,vol_swap_se,iv_zero_vanna,atmi,atm_skew,err_zero_vanna,err_atmi,n_paths,seed,"
          "iv_zero_vanna_se,atmi_se,atm_skew_se,err_zero_vanna_se,err_atmi_se,k_hat,d2_residual\n";
    for (const auto& c : cells) {
        os << format_number(c.hurst) << ',' << format_number(c.maturity) << ',' << format_number(c.rho) << ',';
        auto field = [&](double v) { os << format_number(v); };
        if (c.report) {
            const SwapReport& r = *c.report;
            for (double v : {r.vol_swap, r.vol_swap_se, r.iv_zero_vanna, r.atmi, r.atm_skew, r.err_zero_vanna, r.err_atmi}) {
                field(v);
                os << ',';
            }
            os << config.n_paths << ',' << config.seed;
            for (double v : {r.iv_zero_vanna_se, r.atmi_se, r.atm_skew_se, r.err_zero_vanna_se, r.err_atmi_se, r.k_hat,
                             r.d2_residual}) {
                os << ',';
                field(v);
            }
        } else {
            for (int i = 0; i < 7; ++i) os << "FAILED,";
            os << config.n_paths << ',' << config.seed;
            for (int i = 0; i < 7; ++i) os << ",FAILED";
        }
        os << '\n';
    }
}

void write_rates_csv(std::ostream& os, const std::vector<RateRow>& rows) {
    os << "H,rho,series,slope,intercept,r_squared,n_used,n_candidates,inconclusive,t_min_used,t_max_used\n";
    for (const auto& row : rows) {
        const RateFit& f = row.fit;
        os << format_number(row.hurst) << ',' << format_number(row.rho) << ',' << row.series << ',';
        if (f.inconclusive) {
            os << "NA,NA,NA,";
        } else {
            os << format_number(f.slope) << ',' << format_number(f.intercept) << ',' << format_number(f.r_squared) << ',';
        }
        os << f.maturities_used.size() << ',' << f.n_candidates << ',' << (f.inconclusive ? 1 : 0) << ',';
        if (f.maturities_used.empty()) {
            os << "NA,NA";
        } else {
            const auto [lo, hi] = std::minmax_element(f.maturities_used.begin(), f.maturities_used.end());
            os << format_number(*lo) << ',' << format_number(*hi);
        }
        os << '\n';
    }
}

void write_summary(std::ostream& os, const std::vector<CellResult>& cells) {
    os << "   rho     H      T   vol swap   IV(k^)     ATMI   ATM skew\n";
    const auto flags = os.flags();
    for (const auto& c : cells) {
        os << std::fixed << std::setprecision(2) << std::setw(6) << c.rho << std::setw(6) << c.hurst << std::setw(7)
           << c.maturity;
        if (c.report) {
            const SwapReport& r = *c.report;
            os << std::setw(10) << 100.0 * r.vol_swap << '%' << std::setw(8) << 100.0 * r.iv_zero_vanna << '%'
               << std::setw(8) << 100.0 * r.atmi << '%' << std::setw(11) << std::setprecision(4) << r.atm_skew;
        } else {
            os << "   FAILED: " << c.error;
        }
        os << '\n';
    }
    os.flags(flags);
}

namespace {

std::filesystem::path sibling(const std::filesystem::path& output, const std::string& suffix) {
    return std::filesystem::path(output.string() + suffix);
}

void write_manifest(const ExperimentConfig& config, const RunOptions& options, const std::vector<std::string>& artifacts,
                    std::size_t failed) {
    nlohmann::ordered_json j;
    j["version"] = version();
    if (!options.timestamp.empty()) j["timestamp"] = options.timestamp;
    if (!options.command_line.empty()) j["command_line"] = options.command_line;
    j["config"] = {{"sigma0", config.sigma0},
                   {"nu", config.nu},
                   {"rho", config.rho},
                   {"hurst", config.hurst},
                   {"maturities", config.maturities},
                   {"x0", config.x0},
                   {"n_steps", config.n_steps},
                   {"n_paths", config.n_paths},
                   {"seed", config.seed},
                   {"estimator", to_string(config.estimator)},
                   {"scheme", to_string(config.scheme)},
                   {"kernel", to_string(config.kernel)},
                   {"control_variate", to_string(config.control_variate)},
                   {"block_size", config.block_size},
                   {"threads", config.threads},
                   {"output", config.output.string()},
                   {"mode", to_string(config.mode)}};
    j["config_text"] = format_config(config);
    j["artifacts"] = artifacts;
    j["failed_cells"] = failed;
    std::ofstream os(sibling(config.output, ".manifest.json"));
    os << j.dump(2) << '\n';
}

void open_or_throw(std::ofstream& os, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    os.open(path);
    if (!os) throw ConfigError("output", "output: cannot open " + path.string());
}

}  // namespace

int run(const ExperimentConfig& config, const RunOptions& options, std::ostream& log) {
    std::vector<std::string> artifacts;
    if (options.dump_paths) {
        const double maturity = config.maturities.front();
        const TimeGrid grid{maturity, std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                                                    maturity * static_cast<double>(config.n_steps))))};
        const auto weights = kernel_weights(grid, config.hurst.front(), config.kernel);
        const auto batch = sample_block(grid, weights, std::min(config.n_paths, config.block_size), config.seed, 0);
        write_batch(*options.dump_paths, batch, config.hurst.front(), maturity);
        artifacts.push_back(options.dump_paths->string());
    }

    const std::vector<CellResult> cells = run_cells(config);
    const auto failed = static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return !c.report.has_value(); }));

    std::filesystem::path cells_path = config.output;
    if (config.mode == RunMode::convergence) {
        cells_path = sibling(config.output, ".cells.csv");
        std::ofstream rates;
        open_or_throw(rates, config.output);
        write_rates_csv(rates, fit_rates(config, cells));
        artifacts.push_back(config.output.string());
    }
    {
        std::ofstream csv;
        open_or_throw(csv, cells_path);
        write_cells_csv(csv, config, cells);
        artifacts.push_back(cells_path.string());
    }
    write_manifest(config, options, artifacts, failed);

    write_summary(log, cells);
    for (const auto& c : cells) {
        if (!c.report) log << "cell rho=" << c.rho << " H=" << c.hurst << " T=" << c.maturity << " failed: " << c.error << '\n';
    }
    return failed == 0 ? 0 : 1;
}

}  // namespace zerovanna
