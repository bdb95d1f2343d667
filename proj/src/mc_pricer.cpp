#include "zerovanna/mc_pricer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "zerovanna/black_scholes.hpp"
#include "zerovanna/errors.hpp"
#include "zerovanna/parallel.hpp"
#include "zerovanna/rng.hpp"
#include "zerovanna/stats.hpp"

namespace zerovanna {

void McConfig::validate() const {
    if (n_paths < 1) throw DomainError("McConfig: n_paths must be at least 1");
    if (block_size < 1) throw DomainError("McConfig: block_size must be at least 1");
}

namespace {

PriceEstimate to_estimate(std::span<const double> samples) {
    const auto m = sample_moments(samples);
    return {m.mean, m.std_error(), m.count};
}

void check_horizons(const TimeGrid& grid, std::span<const std::size_t> horizons) {
    if (horizons.empty()) throw DomainError("simulate_functionals: no horizons");
    if (!std::is_sorted(horizons.begin(), horizons.end()) || horizons.front() < 1 ||
        horizons.back() > grid.n_steps) {
        throw DomainError("simulate_functionals: horizons must be sorted step counts in [1, n_steps]");
    }
}

}  // namespace

std::vector<double> euler_log_spot(const Matrix& vols, const GaussianPathBatch& batch, const ModelParams& params,
                                   const TimeGrid& grid, double x0, std::uint64_t seed, std::size_t block,
                                   std::span<const std::size_t> horizons) {
    const std::size_t n = grid.n_steps;
    const std::size_t rows = batch.n_paths();
    if (vols.rows() != rows || vols.cols() != n + 1 || batch.n_steps() != n) {
        throw DomainError("euler_log_spot: shape mismatch");
    }
    auto rng = make_stream(seed, block, StreamTag::spot);
    std::normal_distribution<double> normal;
    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    const double rho = params.rho;
    const double rho_bar = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    std::vector<double> out(horizons.size() * rows);
    for (std::size_t p = 0; p < rows; ++p) {
        const auto sigma = vols.row(p);
        const auto dW = batch.dW.row(p);
        double x = x0;
        std::size_t next = 0;
        for (std::size_t j = 0; j < n && next < horizons.size(); ++j) {
            const double dB = sqrt_dt * normal(rng);
            x += -0.5 * sigma[j] * sigma[j] * dt + sigma[j] * (rho * dW[j] + rho_bar * dB);
            while (next < horizons.size() && horizons[next] == j + 1) out[next++ * rows + p] = x;
        }
    }
    return out;
}

std::vector<PathFunctionals> simulate_functionals(const ModelParams& params, const TimeGrid& grid,
                                                  std::span<const std::size_t> horizons, const McConfig& config,
                                                  double x0) {
    params.validate();
    grid.validate();
    config.validate();
    check_horizons(grid, horizons);

    const bool direct = config.estimator == Estimator::direct_euler;
    const KernelWeights weights = kernel_weights(grid, params.hurst, config.kernel);
    Matrix factor;
    if (config.scheme == Scheme::cholesky_oracle) {
        if (grid.n_steps > kCholeskyMaxSteps) throw DomainError("cholesky_oracle scheme: grid too long");
        factor = cholesky_factor(oracle_covariance(grid, params.hurst));
    }

    const std::size_t n_paths = config.n_paths;
    const std::size_t n_blocks = (n_paths + config.block_size - 1) / config.block_size;
    std::vector<PathFunctionals> out(horizons.size());
    for (auto& f : out) {
        f.integrated_variance.resize(n_paths);
        f.int_sigma_dW.resize(n_paths);
        if (direct) f.terminal_log_spot.resize(n_paths);
    }

    parallel_blocks(n_blocks, config.n_threads, [&](std::size_t block) {
        const std::size_t first = block * config.block_size;
        const std::size_t rows = std::min(config.block_size, n_paths - first);
        const GaussianPathBatch batch = config.scheme == Scheme::cholesky_oracle
                                            ? sample_from_factor(factor, grid.n_steps, rows, config.seed, block)
                                            : sample_block(grid, weights, rows, config.seed, block);
        const Matrix vols = vol_paths(batch, params, grid);
        const auto part = path_functionals_at(vols, batch, grid, horizons);
        std::vector<double> spots;
        if (direct) spots = euler_log_spot(vols, batch, params, grid, x0, config.seed, block, horizons);
        for (std::size_t h = 0; h < horizons.size(); ++h) {
            std::copy(part[h].integrated_variance.begin(), part[h].integrated_variance.end(),
                      out[h].integrated_variance.begin() + static_cast<std::ptrdiff_t>(first));
            std::copy(part[h].int_sigma_dW.begin(), part[h].int_sigma_dW.end(),
                      out[h].int_sigma_dW.begin() + static_cast<std::ptrdiff_t>(first));
            if (direct) {
                std::copy_n(spots.begin() + static_cast<std::ptrdiff_t>(h * rows), rows,
                            out[h].terminal_log_spot.begin() + static_cast<std::ptrdiff_t>(first));
            }
        }
    });
    return out;
}

PathFunctionals simulate_functionals(const ModelParams& params, const TimeGrid& grid, const McConfig& config,
                                     double x0) {
    const std::size_t horizon = grid.n_steps;
    return std::move(simulate_functionals(params, grid, std::span(&horizon, 1), config, x0).front());
}

PriceEstimate call_price_conditional(const PathFunctionals& funcs, const ModelParams& params, double x0,
                                     double log_strike, double maturity) {
    params.validate();
    if (!(maturity > 0.0)) throw DomainError("call_price_conditional: maturity must be positive");
    if (funcs.int_sigma_dW.size() != funcs.size()) throw DomainError("call_price_conditional: inconsistent functionals");
    const double rho = params.rho;
    const double rho_bar_sq = std::max(0.0, 1.0 - rho * rho);
    std::vector<double> contrib(funcs.size());
    for (std::size_t p = 0; p < funcs.size(); ++p) {
        const double y = funcs.integrated_variance[p];
        const double x_hat = x0 + rho * funcs.int_sigma_dW[p] - 0.5 * rho * rho * y;
        // rho = +-1 gives zero conditional variance: bs_price returns the intrinsic value at x_hat.
        contrib[p] = bs_price(BsInputs{x_hat, log_strike, std::sqrt(rho_bar_sq * y / maturity), maturity});
    }
    return to_estimate(contrib);
}

PriceEstimate call_price_direct(const PathFunctionals& funcs, double x0, double log_strike,
                                ControlVariate control_variate) {
    if (!funcs.has_terminal()) throw DomainError("call_price_direct: functionals carry no terminal log-spot");
    const std::size_t n = funcs.terminal_log_spot.size();
    const double strike = std::exp(log_strike);
    const double forward = std::exp(x0);
    std::vector<double> payoff(n);
    std::vector<double> control(n);
    for (std::size_t p = 0; p < n; ++p) {
        const double spot = std::exp(funcs.terminal_log_spot[p]);
        payoff[p] = std::max(spot - strike, 0.0);
        control[p] = spot - forward;
    }
    if (control_variate == ControlVariate::none) return to_estimate(payoff);

    // E[e^{X_T}] = e^{x0} exactly, so the control has known zero mean.
    const double var_c = sample_covariance(control, control);
    const double beta = var_c > 0.0 ? sample_covariance(payoff, control) / var_c : 0.0;
    for (std::size_t p = 0; p < n; ++p) payoff[p] -= beta * control[p];
    return to_estimate(payoff);
}

PriceEstimate call_price_direct(const GaussianPathBatch& batch, const Matrix& vols, const ModelParams& params,
                                double x0, double log_strike, const TimeGrid& grid, const McConfig& config) {
    params.validate();
    config.validate();
    const std::size_t n_paths = batch.n_paths();
    if (vols.rows() != n_paths) throw DomainError("call_price_direct: shape mismatch");
    const std::size_t horizon = grid.n_steps;
    PathFunctionals funcs;
    funcs.terminal_log_spot.resize(n_paths);
    const std::size_t n_blocks = (n_paths + config.block_size - 1) / config.block_size;
    for (std::size_t block = 0; block < n_blocks; ++block) {
        const std::size_t first = block * config.block_size;
        const std::size_t rows = std::min(config.block_size, n_paths - first);
        GaussianPathBatch part{Matrix(rows, batch.n_steps()), Matrix(rows, batch.n_steps() + 1)};
        Matrix part_vols(rows, vols.cols());
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(batch.dW.row(first + r).begin(), batch.n_steps(), part.dW.row(r).begin());
            std::copy_n(vols.row(first + r).begin(), vols.cols(), part_vols.row(r).begin());
        }
        const auto spots =
            euler_log_spot(part_vols, part, params, grid, x0, config.seed, block, std::span(&horizon, 1));
        std::copy(spots.begin(), spots.end(), funcs.terminal_log_spot.begin() + static_cast<std::ptrdiff_t>(first));
    }
    return call_price_direct(funcs, x0, log_strike, config.control_variate);
}

PriceEstimate vol_swap_strike(const PathFunctionals& funcs, double maturity) {
    if (!(maturity > 0.0)) throw DomainError("vol_swap_strike: maturity must be positive");
    std::vector<double> v(funcs.size());
    for (std::size_t p = 0; p < v.size(); ++p) v[p] = std::sqrt(funcs.integrated_variance[p] / maturity);
    return to_estimate(v);
}

PriceEstimate variance_swap_strike(const PathFunctionals& funcs, double maturity) {
    if (!(maturity > 0.0)) throw DomainError("variance_swap_strike: maturity must be positive");
    std::vector<double> v(funcs.size());
    for (std::size_t p = 0; p < v.size(); ++p) v[p] = funcs.integrated_variance[p] / maturity;
    return to_estimate(v);
}

}  // namespace zerovanna
