#include "zerovanna/vol_model.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "zerovanna/errors.hpp"

namespace zerovanna {

void ModelParams::validate() const {
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw DomainError("ModelParams: sigma0 must be positive");
    if (!(nu >= 0.0) || !std::isfinite(nu)) throw DomainError("ModelParams: nu must be non-negative");
    if (!(std::abs(rho) <= 1.0)) throw DomainError("ModelParams: rho must lie in [-1, 1]");
    if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("ModelParams: Hurst parameter must lie in (0, 1)");
}

Matrix vol_paths(const GaussianPathBatch& batch, const ModelParams& params, const TimeGrid& grid) {
    params.validate();
    grid.validate();
    if (batch.WH.cols() != grid.n_steps + 1 || batch.dW.cols() != grid.n_steps) {
        throw DomainError("vol_paths: batch does not match grid");
    }
    const std::size_t cols = grid.n_steps + 1;
    std::vector<double> drift(cols);
    const double two_h = 2.0 * params.hurst;
    for (std::size_t i = 0; i < cols; ++i) {
        drift[i] = params.nu * params.nu * std::pow(grid.time(i), two_h) / (2.0 * two_h);
    }
    Matrix vols(batch.WH.rows(), cols);
    for (std::size_t p = 0; p < vols.rows(); ++p) {
        const auto wh = batch.WH.row(p);
        auto out = vols.row(p);
        for (std::size_t i = 0; i < cols; ++i) out[i] = params.sigma0 * std::exp(params.nu * wh[i] - drift[i]);
    }
    return vols;
}

std::vector<PathFunctionals> path_functionals_at(const Matrix& vols, const GaussianPathBatch& batch,
                                                 const TimeGrid& grid, std::span<const std::size_t> horizons) {
    const std::size_t n = grid.n_steps;
    if (vols.rows() != batch.dW.rows() || vols.cols() != n + 1 || batch.dW.cols() != n) {
        throw DomainError("path_functionals: shape mismatch");
    }
    if (!std::is_sorted(horizons.begin(), horizons.end()) ||
        std::any_of(horizons.begin(), horizons.end(), [n](std::size_t h) { return h < 1 || h > n; })) {
        throw DomainError("path_functionals: horizons must be sorted step counts in [1, n_steps]");
    }
    const std::size_t n_paths = vols.rows();
    std::vector<PathFunctionals> out(horizons.size());
    for (auto& f : out) {
        f.integrated_variance.resize(n_paths);
        f.int_sigma_dW.resize(n_paths);
    }
    const double dt = grid.dt();
    for (std::size_t p = 0; p < n_paths; ++p) {
        const auto sigma = vols.row(p);
        const auto dW = batch.dW.row(p);
        double var_sum = 0.0;
        double ito_sum = 0.0;
        std::size_t next = 0;
        for (std::size_t j = 0; j < n && next < horizons.size(); ++j) {
            var_sum += sigma[j] * sigma[j];
            ito_sum += sigma[j] * dW[j];
            while (next < horizons.size() && horizons[next] == j + 1) {
                out[next].integrated_variance[p] = var_sum * dt;
                out[next].int_sigma_dW[p] = ito_sum;
                ++next;
            }
        }
    }
    return out;
}

PathFunctionals path_functionals(const Matrix& vols, const GaussianPathBatch& batch, const TimeGrid& grid) {
    const std::size_t horizon = grid.n_steps;
    return std::move(path_functionals_at(vols, batch, grid, std::span(&horizon, 1)).front());
}

double variance_swap_oracle(const ModelParams& params, double maturity) {
    params.validate();
    if (!(maturity > 0.0)) throw DomainError("variance_swap_oracle: maturity must be positive");
    if (params.nu == 0.0) return params.sigma0 * params.sigma0;
    const double two_h = 2.0 * params.hurst;
    const double c = params.nu * params.nu / two_h;
    auto integrand = [=](double s) { return std::exp(c * std::pow(s, two_h)); };
    // s^{2H} has an unbounded derivative at 0 for H < 1/2; tanh-sinh clusters nodes there.
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double integral = integrator.integrate(integrand, 0.0, maturity, 1e-14);
    return params.sigma0 * params.sigma0 * integral / maturity;
}

}  // namespace zerovanna
