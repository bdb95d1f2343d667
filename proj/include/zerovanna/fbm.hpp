#pragma once

/**
 * @file fbm.hpp
 * @brief Riemann-Liouville fractional Brownian motion on a uniform grid.
 *
 * W^H_s = int_0^s (s - r)^(H - 1/2) dW_r is sampled jointly with the Brownian
 * increments that drive it. On the grid t_i = i dt the scheme is the discrete
 * Volterra convolution
 *
 *     W^H(t_i) = sum_{j < i} b_{i-1-j} dW_j
 *
 * with Toeplitz weights b, evaluated by FFT for long grids.
 */

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "zerovanna/matrix.hpp"

namespace zerovanna {

struct TimeGrid {
    double maturity = 1.0;
    std::size_t n_steps = 1;

    double dt() const { return maturity / static_cast<double>(n_steps); }
    double time(std::size_t i) const { return static_cast<double>(i) * dt(); }
    void validate() const;
};

/// How the singular kernel (s - r)^(H - 1/2) is turned into per-lag weights.
enum class KernelRule {
    /// b_j^2 dt equals the exact second moment of the kernel over the cell; Var W^H(t_i) = t_i^{2H}/(2H).
    cell_exact,
    /// b_j = ((j + 1/2) dt)^(H - 1/2). Under-represents the singularity for H < 1/2.
    midpoint,
};

struct KernelWeights {
    double hurst = 0.5;
    KernelRule rule = KernelRule::cell_exact;
    std::vector<double> b;

    /// True when every weight is exactly 1 (H = 1/2), so W^H is the running sum of dW.
    bool is_identity() const;
};

KernelWeights kernel_weights(const TimeGrid& grid, double hurst, KernelRule rule = KernelRule::cell_exact);

/// Increments dW (paths x n_steps) and W^H levels at t_0..t_n (paths x (n_steps + 1)).
struct GaussianPathBatch {
    Matrix dW;
    Matrix WH;

    std::size_t n_paths() const { return dW.rows(); }
    std::size_t n_steps() const { return dW.cols(); }
};

struct SamplingOptions {
    std::size_t block_size = 1024;
    unsigned n_threads = 1;
};

/// Grids shorter than this use the direct O(N^2) sum.
inline constexpr std::size_t kFftThreshold = 128;

/// out[m] = sum_{j <= m} kernel[m - j] * input[j], m = 0..n-1, by direct summation.
void convolve_naive(std::span<const double> kernel, std::span<const double> input, std::span<double> out);

/**
 * Causal convolution with a fixed kernel through FFTW real transforms.
 * Each instance owns its buffers; use one per thread.
 */
class FftConvolver {
public:
    explicit FftConvolver(std::span<const double> kernel);
    ~FftConvolver();
    FftConvolver(const FftConvolver&) = delete;
    FftConvolver& operator=(const FftConvolver&) = delete;

    std::size_t size() const noexcept { return n_; }
    void apply(std::span<const double> input, std::span<double> out);

private:
    struct Impl;
    std::size_t n_;
    std::unique_ptr<Impl> impl_;
};

/**
 * Samples the n_rows paths of block @p block_index.
 * Streams are keyed by (seed, block_index), so a block is reproducible in isolation.
 */
GaussianPathBatch sample_block(const TimeGrid& grid, const KernelWeights& weights, std::size_t n_rows,
                               std::uint64_t seed, std::size_t block_index);

/// n_paths paths split into blocks of options.block_size; identical output for any thread count.
GaussianPathBatch sample_paths(const TimeGrid& grid, const KernelWeights& weights, std::size_t n_paths,
                               std::uint64_t seed, const SamplingOptions& options = {});

/// Applies the Volterra convolution to given increments: fills WH from dW.
void integrate_volterra(const KernelWeights& weights, const Matrix& dW, Matrix& WH);

/// int_0^{min(s,t)} (t - r)^{H - 1/2} dr = Cov(W^H_t, W_s).
double cross_covariance(double t, double s, double hurst);

/// int_0^{min(s,t)} (s - r)^{H - 1/2} (t - r)^{H - 1/2} dr = Cov(W^H_s, W^H_t), by tanh-sinh quadrature.
double fbm_covariance(double s, double t, double hurst);

/**
 * Covariance of (W(t_1..t_n), W^H(t_1..t_n)) as a row-major 2n x 2n matrix.
 * Brownian block first, then the W^H block.
 */
Matrix oracle_covariance(const TimeGrid& grid, double hurst);

inline constexpr std::size_t kCholeskyMaxSteps = 2048;

/// Exact-law sampler from the dense factorization of oracle_covariance. Test reference only.
GaussianPathBatch cholesky_oracle(const TimeGrid& grid, double hurst, std::size_t n_paths, std::uint64_t seed);

/// Draws n_rows exact-law paths from a factor of oracle_covariance using stream (seed, block).
GaussianPathBatch sample_from_factor(const Matrix& factor, std::size_t n_steps, std::size_t n_rows,
                                     std::uint64_t seed, std::size_t block);

/// Lower-triangular factor L (row-major, 2n x 2n) with L L^T = covariance + jitter.
Matrix cholesky_factor(const Matrix& covariance);

/**
 * Debug dump: 32-byte little-endian header
 *   magic "ZVPB" | u32 version | u32 n_paths | u32 n_steps | f64 H | f64 T
 * followed by dW (n_paths x n_steps) and WH (n_paths x (n_steps + 1)), row-major f64.
 */
inline constexpr std::uint32_t kBatchFormatVersion = 1;
void write_batch(const std::filesystem::path& path, const GaussianPathBatch& batch, double hurst, double maturity);

struct BatchFile {
    GaussianPathBatch batch;
    double hurst = 0.0;
    double maturity = 0.0;
};
BatchFile read_batch(const std::filesystem::path& path);

}  // namespace zerovanna
