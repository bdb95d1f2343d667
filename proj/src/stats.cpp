#include "zerovanna/stats.hpp"

#include <cmath>

#include "zerovanna/errors.hpp"

namespace zerovanna {

double compensated_sum(std::span<const double> values) {
    double sum = 0.0;
    double carry = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    return sum + carry;
}

double SampleMoments::std_error() const {
    return count > 0 ? std_dev / std::sqrt(static_cast<double>(count)) : 0.0;
}

SampleMoments sample_moments(std::span<const double> values) {
    SampleMoments m;
    m.count = values.size();
    if (m.count == 0) return m;
    m.mean = compensated_sum(values) / static_cast<double>(m.count);
    if (m.count < 2) return m;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - m.mean;
        sq[i] = d * d;
    }
    m.std_dev = std::sqrt(compensated_sum(sq) / static_cast<double>(m.count - 1));
    return m;
}

double sample_covariance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DomainError("sample_covariance: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) return 0.0;
    const double ma = compensated_sum(a) / static_cast<double>(n);
    const double mb = compensated_sum(b) / static_cast<double>(n);
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) prod[i] = (a[i] - ma) * (b[i] - mb);
    return compensated_sum(prod) / static_cast<double>(n - 1);
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("least_squares: need at least two points");
    const double n = static_cast<double>(x.size());
    const double mx = compensated_sum(x) / n;
    const double my = compensated_sum(y) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw DomainError("least_squares: abscissae are all equal");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

}  // namespace zerovanna
