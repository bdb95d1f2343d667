#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace zerovanna {

/// Neumaier-compensated sum; the result depends only on the order of @p values.
double compensated_sum(std::span<const double> values);

struct SampleMoments {
    double mean = 0.0;
    double std_dev = 0.0;  // unbiased
    std::size_t count = 0;

    double std_error() const;
};

SampleMoments sample_moments(std::span<const double> values);

/// Sample covariance (unbiased) of two equally long series.
double sample_covariance(std::span<const double> a, std::span<const double> b);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two distinct x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace zerovanna
