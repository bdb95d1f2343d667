#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "zerovanna/fbm.hpp"
#include "zerovanna/matrix.hpp"

namespace zerovanna {

/// sigma_s = sigma0 * exp(nu W^H_s - nu^2 s^{2H} / (4H)); rho correlates the spot with W.
struct ModelParams {
    double sigma0 = 0.2;
    double nu = 0.4;
    double rho = 0.0;
    double hurst = 0.5;

    void validate() const;
};

/// Per-path quantities consumed by the pricers. terminal_log_spot is filled only by the direct scheme.
struct PathFunctionals {
    std::vector<double> integrated_variance;  // Y = int_0^T sigma^2 ds
    std::vector<double> int_sigma_dW;         // int_0^T sigma dW
    std::vector<double> terminal_log_spot;

    std::size_t size() const { return integrated_variance.size(); }
    bool has_terminal() const { return !terminal_log_spot.empty(); }
};

/// Volatility levels at t_0..t_n, one row per path.
Matrix vol_paths(const GaussianPathBatch& batch, const ModelParams& params, const TimeGrid& grid);

/// Left-point sums Y = sum sigma_j^2 dt and sum sigma_j dW_j over the whole grid.
PathFunctionals path_functionals(const Matrix& vols, const GaussianPathBatch& batch, const TimeGrid& grid);

/**
 * Same sums truncated after each step count in @p horizons (each in 1..n_steps),
 * so one simulation serves several maturities on a common grid.
 */
std::vector<PathFunctionals> path_functionals_at(const Matrix& vols, const GaussianPathBatch& batch,
                                                 const TimeGrid& grid, std::span<const std::size_t> horizons);

/// (sigma0^2 / T) int_0^T exp(nu^2 s^{2H} / (2H)) ds, the exact-model variance-swap strike.
double variance_swap_oracle(const ModelParams& params, double maturity);

}  // namespace zerovanna
