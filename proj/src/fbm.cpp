#include "zerovanna/fbm.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <random>
#include <string>

#include "zerovanna/errors.hpp"
#include "zerovanna/parallel.hpp"
#include "zerovanna/rng.hpp"

namespace zerovanna {

void TimeGrid::validate() const {
    if (!(maturity > 0.0) || !std::isfinite(maturity)) throw DomainError("TimeGrid: maturity must be positive");
    if (n_steps < 1) throw DomainError("TimeGrid: n_steps must be at least 1");
}

bool KernelWeights::is_identity() const {
    return std::all_of(b.begin(), b.end(), [](double w) { return w == 1.0; });
}

KernelWeights kernel_weights(const TimeGrid& grid, double hurst, KernelRule rule) {
    grid.validate();
    if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("kernel_weights: Hurst parameter must lie in (0, 1)");

    KernelWeights out{hurst, rule, std::vector<double>(grid.n_steps)};
    const double dt = grid.dt();
    const double two_h = 2.0 * hurst;
    switch (rule) {
        case KernelRule::cell_exact: {
            const double scale = std::pow(dt, two_h) / (two_h * dt);
            for (std::size_t j = 0; j < grid.n_steps; ++j) {
                const double jd = static_cast<double>(j);
                out.b[j] = std::sqrt((std::pow(jd + 1.0, two_h) - std::pow(jd, two_h)) * scale);
            }
            break;
        }
        case KernelRule::midpoint:
            for (std::size_t j = 0; j < grid.n_steps; ++j) {
                out.b[j] = std::pow((static_cast<double>(j) + 0.5) * dt, hurst - 0.5);
            }
            break;
    }
    return out;
}

void convolve_naive(std::span<const double> kernel, std::span<const double> input, std::span<double> out) {
    const std::size_t n = out.size();
    for (std::size_t m = 0; m < n; ++m) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= m; ++j) acc += kernel[m - j] * input[j];
        out[m] = acc;
    }
}

namespace {

// FFTW's planner is not re-entrant.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter>;

template <typename T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (p == nullptr) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

}  // namespace

struct FftConvolver::Impl {
    std::size_t fft_size = 0;
    FftwBuffer<double> real;
    FftwBuffer<fftw_complex> spectrum;
    FftwBuffer<fftw_complex> kernel_spectrum;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    ~Impl() {
        std::lock_guard lock(fftw_planner_mutex());
        if (forward != nullptr) fftw_destroy_plan(forward);
        if (backward != nullptr) fftw_destroy_plan(backward);
    }
};

FftConvolver::FftConvolver(std::span<const double> kernel) : n_(kernel.size()), impl_(std::make_unique<Impl>()) {
    if (n_ == 0) throw DomainError("FftConvolver: empty kernel");
    auto& s = *impl_;
    s.fft_size = std::bit_ceil(2 * n_);
    const std::size_t n_freq = s.fft_size / 2 + 1;
    s.real = fftw_alloc<double>(s.fft_size);
    s.spectrum = fftw_alloc<fftw_complex>(n_freq);
    s.kernel_spectrum = fftw_alloc<fftw_complex>(n_freq);
    {
        std::lock_guard lock(fftw_planner_mutex());
        const int size = static_cast<int>(s.fft_size);
        s.forward = fftw_plan_dft_r2c_1d(size, s.real.get(), s.spectrum.get(), FFTW_ESTIMATE);
        s.backward = fftw_plan_dft_c2r_1d(size, s.spectrum.get(), s.real.get(), FFTW_ESTIMATE);
    }
    if (s.forward == nullptr || s.backward == nullptr) throw NumericalError("FftConvolver: FFTW planning failed");

    std::fill_n(s.real.get(), s.fft_size, 0.0);
    std::copy(kernel.begin(), kernel.end(), s.real.get());
    fftw_execute(s.forward);
    std::memcpy(s.kernel_spectrum.get(), s.spectrum.get(), sizeof(fftw_complex) * n_freq);
}

FftConvolver::~FftConvolver() = default;

void FftConvolver::apply(std::span<const double> input, std::span<double> out) {
    auto& s = *impl_;
    const std::size_t n_freq = s.fft_size / 2 + 1;
    std::fill_n(s.real.get(), s.fft_size, 0.0);
    std::copy_n(input.begin(), std::min(input.size(), n_), s.real.get());
    fftw_execute(s.forward);
    const double norm = 1.0 / static_cast<double>(s.fft_size);
    for (std::size_t f = 0; f < n_freq; ++f) {
        const double ar = s.spectrum[f][0];
        const double ai = s.spectrum[f][1];
        const double br = s.kernel_spectrum[f][0];
        const double bi = s.kernel_spectrum[f][1];
        s.spectrum[f][0] = (ar * br - ai * bi) * norm;
        s.spectrum[f][1] = (ar * bi + ai * br) * norm;
    }
    fftw_execute(s.backward);
    std::copy_n(s.real.get(), out.size(), out.begin());
}

void integrate_volterra(const KernelWeights& weights, const Matrix& dW, Matrix& WH) {
    const std::size_t n = dW.cols();
    if (weights.b.size() != n || WH.rows() != dW.rows() || WH.cols() != n + 1) {
        throw DomainError("integrate_volterra: shape mismatch");
    }
    if (weights.is_identity()) {
        for (std::size_t p = 0; p < dW.rows(); ++p) {
            double level = 0.0;
            WH(p, 0) = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                level += dW(p, j);
                WH(p, j + 1) = level;
            }
        }
        return;
    }
    std::unique_ptr<FftConvolver> fft;
    if (n >= kFftThreshold) fft = std::make_unique<FftConvolver>(weights.b);
    for (std::size_t p = 0; p < dW.rows(); ++p) {
        auto row = WH.row(p);
        row[0] = 0.0;
        if (fft) {
            fft->apply(dW.row(p), row.subspan(1));
        } else {
            convolve_naive(weights.b, dW.row(p), row.subspan(1));
        }
    }
}

GaussianPathBatch sample_block(const TimeGrid& grid, const KernelWeights& weights, std::size_t n_rows,
                               std::uint64_t seed, std::size_t block_index) {
    grid.validate();
    if (weights.b.size() != grid.n_steps) throw DomainError("sample_block: weights do not match grid");
    GaussianPathBatch batch{Matrix(n_rows, grid.n_steps), Matrix(n_rows, grid.n_steps + 1)};
    auto rng = make_stream(seed, block_index, StreamTag::brownian);
    std::normal_distribution<double> normal;
    const double sqrt_dt = std::sqrt(grid.dt());
    for (double& z : batch.dW.data()) z = sqrt_dt * normal(rng);
    integrate_volterra(weights, batch.dW, batch.WH);
    return batch;
}

GaussianPathBatch sample_paths(const TimeGrid& grid, const KernelWeights& weights, std::size_t n_paths,
                               std::uint64_t seed, const SamplingOptions& options) {
    grid.validate();
    if (n_paths < 1) throw DomainError("sample_paths: n_paths must be at least 1");
    if (options.block_size < 1) throw DomainError("sample_paths: block_size must be at least 1");
    const std::size_t n_blocks = (n_paths + options.block_size - 1) / options.block_size;
    GaussianPathBatch out{Matrix(n_paths, grid.n_steps), Matrix(n_paths, grid.n_steps + 1)};
    parallel_blocks(n_blocks, options.n_threads, [&](std::size_t block) {
        const std::size_t first = block * options.block_size;
        const std::size_t rows = std::min(options.block_size, n_paths - first);
        const auto part = sample_block(grid, weights, rows, seed, block);
        std::copy(part.dW.data().begin(), part.dW.data().end(), out.dW.row(first).begin());
        std::copy(part.WH.data().begin(), part.WH.data().end(), out.WH.row(first).begin());
    });
    return out;
}

double cross_covariance(double t, double s, double hurst) {
    const double a = hurst + 0.5;
    const double m = std::min(s, t);
    return (std::pow(t, a) - std::pow(t - m, a)) / a;
}

double fbm_covariance(double s, double t, double hurst) {
    if (s > t) std::swap(s, t);
    if (s <= 0.0) return 0.0;
    const double two_h = 2.0 * hurst;
    if (s == t) return std::pow(s, two_h) / two_h;
    const double a = hurst - 0.5;
    const double gap = t - s;
    // u = s - r; the u^a factor is the (integrable) endpoint singularity.
    auto integrand = [=](double u) { return std::pow(u, a) * std::pow(gap + u, a); };
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(integrand, 0.0, s, 1e-14);
}

Matrix oracle_covariance(const TimeGrid& grid, double hurst) {
    grid.validate();
    if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("oracle_covariance: Hurst parameter must lie in (0, 1)");
    const std::size_t n = grid.n_steps;
    Matrix cov(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = grid.time(i + 1);
        for (std::size_t j = 0; j < n; ++j) {
            const double tj = grid.time(j + 1);
            cov(i, j) = std::min(ti, tj);
            const double cross = cross_covariance(ti, tj, hurst);  // Cov(W^H_ti, W_tj)
            cov(n + i, j) = cross;
            cov(j, n + i) = cross;
            if (j >= i) {
                const double c = fbm_covariance(ti, tj, hurst);
                cov(n + i, n + j) = c;
                cov(n + j, n + i) = c;
            }
        }
    }
    return cov;
}

Matrix cholesky_factor(const Matrix& covariance) {
    const auto dim = static_cast<Eigen::Index>(covariance.rows());
    Eigen::MatrixXd a(dim, dim);
    double max_diag = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = covariance(i, j);
        max_diag = std::max(max_diag, a(i, i));
    }
    for (double jitter = 0.0; jitter <= 1e-8 * max_diag; jitter = jitter == 0.0 ? 1e-15 * max_diag : jitter * 10.0) {
        Eigen::MatrixXd trial = a;
        trial.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(trial);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd l = llt.matrixL();
            Matrix out(covariance.rows(), covariance.cols());
            for (Eigen::Index i = 0; i < dim; ++i) {
                for (Eigen::Index j = 0; j <= i; ++j) out(i, j) = l(i, j);
            }
            return out;
        }
    }
    throw NumericalError("cholesky_factor: covariance not positive definite after jitter");
}

GaussianPathBatch sample_from_factor(const Matrix& factor, std::size_t n_steps, std::size_t n_rows,
                                     std::uint64_t seed, std::size_t block) {
    const std::size_t n = n_steps;
    if (factor.rows() != 2 * n || factor.cols() != 2 * n) throw DomainError("sample_from_factor: factor does not match grid");
    GaussianPathBatch out{Matrix(n_rows, n), Matrix(n_rows, n + 1)};
    auto rng = make_stream(seed, block, StreamTag::oracle);
    std::normal_distribution<double> normal;
    std::vector<double> z(2 * n);
    std::vector<double> v(2 * n);
    for (std::size_t p = 0; p < n_rows; ++p) {
        for (double& zi : z) zi = normal(rng);
        for (std::size_t i = 0; i < 2 * n; ++i) {
            const auto l = factor.row(i);
            double acc = 0.0;
            for (std::size_t j = 0; j <= i; ++j) acc += l[j] * z[j];
            v[i] = acc;
        }
        double prev = 0.0;
        out.WH(p, 0) = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out.dW(p, j) = v[j] - prev;
            prev = v[j];
            out.WH(p, j + 1) = v[n + j];
        }
    }
    return out;
}

GaussianPathBatch cholesky_oracle(const TimeGrid& grid, double hurst, std::size_t n_paths, std::uint64_t seed) {
    grid.validate();
    if (grid.n_steps > kCholeskyMaxSteps) throw DomainError("cholesky_oracle: grid exceeds the dense factorization budget");
    const Matrix factor = cholesky_factor(oracle_covariance(grid, hurst));
    return sample_from_factor(factor, grid.n_steps, n_paths, seed, 0);
}

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw DomainError("read_batch: truncated file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

constexpr char kMagic[4] = {'Z', 'V', 'P', 'B'};

}  // namespace

void write_batch(const std::filesystem::path& path, const GaussianPathBatch& batch, double hurst, double maturity) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DomainError("write_batch: cannot open " + path.string());
    os.write(kMagic, 4);
    put_le<std::uint32_t>(os, kBatchFormatVersion);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(batch.n_paths()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(batch.n_steps()));
    put_le<double>(os, hurst);
    put_le<double>(os, maturity);
    for (double v : batch.dW.data()) put_le<double>(os, v);
    for (double v : batch.WH.data()) put_le<double>(os, v);
    if (!os) throw DomainError("write_batch: write failed for " + path.string());
}

BatchFile read_batch(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DomainError("read_batch: cannot open " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) throw DomainError("read_batch: bad magic");
    if (get_le<std::uint32_t>(is) != kBatchFormatVersion) throw DomainError("read_batch: unsupported version");
    const auto n_paths = get_le<std::uint32_t>(is);
    const auto n_steps = get_le<std::uint32_t>(is);
    BatchFile out;
    out.hurst = get_le<double>(is);
    out.maturity = get_le<double>(is);
    out.batch = {Matrix(n_paths, n_steps), Matrix(n_paths, n_steps + 1)};
    for (double& v : out.batch.dW.data()) v = get_le<double>(is);
    for (double& v : out.batch.WH.data()) v = get_le<double>(is);
    return out;
}

}  // namespace zerovanna
