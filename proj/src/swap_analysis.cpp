#include "zerovanna/swap_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "zerovanna/errors.hpp"
#include "zerovanna/stats.hpp"

namespace zerovanna {

IvPoint implied_vol_point(const StrikePricer& pricer, double x0, double maturity, double log_strike,
                          const IvQuery& query) {
    const PriceEstimate price = pricer(log_strike);
    IvQuery q = query;
    q.target_price = price.value;
    BsInputs in{x0, log_strike, 0.0, maturity};
    IvPoint point;
    point.log_strike = log_strike;
    point.vol = implied_vol(q, in);
    in.vol = point.vol;
    point.std_error = price.std_error / vega(in);
    point.ok = true;
    return point;
}

std::vector<IvPoint> iv_curve(const StrikePricer& pricer, double x0, double maturity,
                              std::span<const double> log_strikes, const IvQuery& query) {
    std::vector<IvPoint> out;
    out.reserve(log_strikes.size());
    for (double k : log_strikes) {
        try {
            out.push_back(implied_vol_point(pricer, x0, maturity, k, query));
        } catch (const std::exception& e) {
            IvPoint failed;
            failed.log_strike = k;
            failed.error = e.what();
            out.push_back(std::move(failed));
        }
    }
    return out;
}

double default_skew_bump(double sigma0, double maturity) { return 0.5 * sigma0 * std::sqrt(maturity) * 0.1; }

namespace {

struct Difference {
    double value;
    double std_error;
};

Difference central_difference(const std::function<IvPoint(double)>& curve, double x0, double h) {
    const IvPoint up = curve(x0 + h);
    const IvPoint down = curve(x0 - h);
    return {(up.vol - down.vol) / (2.0 * h), std::hypot(up.std_error, down.std_error) / (2.0 * h)};
}

}  // namespace

SkewEstimate atm_skew(const std::function<IvPoint(double)>& curve, double x0, double bump) {
    if (!(bump > 0.0)) throw DomainError("atm_skew: bump must be positive");
    const Difference d = central_difference(curve, x0, bump);
    if (d.std_error <= std::abs(d.value)) return {d.value, d.std_error, bump, false};

    const Difference wide = central_difference(curve, x0, 2.0 * bump);
    const Difference wider = central_difference(curve, x0, 4.0 * bump);
    SkewEstimate out;
    out.value = (4.0 * wide.value - wider.value) / 3.0;
    out.std_error = std::hypot(4.0 * wide.std_error, wider.std_error) / 3.0;
    out.bump = 2.0 * bump;
    out.richardson = true;
    return out;
}

SwapReport zero_vanna_report(const StrikePricer& pricer, const PriceEstimate& vol_swap, const ModelParams& params,
                             double x0, double maturity, const ReportOptions& options) {
    params.validate();
    if (!(maturity > 0.0)) throw DomainError("zero_vanna_report: maturity must be positive");

    // Memoized so the fixed point, the residual and the ATM point share evaluations.
    std::map<double, IvPoint> cache;
    auto curve = [&](double k) -> IvPoint {
        auto it = cache.find(k);
        if (it != cache.end()) return it->second;
        IvPoint p = implied_vol_point(pricer, x0, maturity, k, options.iv_query);
        cache.emplace(k, p);
        return p;
    };

    SwapReport r;
    r.hurst = params.hurst;
    r.maturity = maturity;
    r.rho = params.rho;
    r.vol_swap = vol_swap.value;
    r.vol_swap_se = vol_swap.std_error;

    r.k_hat = zero_vanna_strike([&](double k) { return curve(k).vol; }, x0, maturity, options.zero_vanna);
    const IvPoint zv = curve(r.k_hat);
    r.iv_zero_vanna = zv.vol;
    r.iv_zero_vanna_se = zv.std_error;
    r.d2_residual = d2(BsInputs{x0, r.k_hat, zv.vol, maturity});

    const IvPoint atm = curve(x0);
    r.atmi = atm.vol;
    r.atmi_se = atm.std_error;

    const SkewEstimate skew =
        atm_skew(curve, x0, options.skew_bump.value_or(default_skew_bump(params.sigma0, maturity)));
    r.atm_skew = skew.value;
    r.atm_skew_se = skew.std_error;

    r.err_zero_vanna = r.iv_zero_vanna - r.vol_swap;
    r.err_zero_vanna_se = std::hypot(r.iv_zero_vanna_se, r.vol_swap_se);
    r.err_atmi = r.atmi - r.vol_swap;
    r.err_atmi_se = std::hypot(r.atmi_se, r.vol_swap_se);
    if (options.comparator) r.comparator = options.comparator(params, maturity);
    return r;
}

StrikePricer make_pricer(const PathFunctionals& funcs, const ModelParams& params, double x0, double maturity,
                         const McConfig& config) {
    if (config.estimator == Estimator::direct_euler) {
        if (!funcs.has_terminal()) throw DomainError("make_pricer: direct estimator needs terminal log-spots");
        const ControlVariate cv = config.control_variate;
        return [&funcs, x0, cv](double k) { return call_price_direct(funcs, x0, k, cv); };
    }
    return [&funcs, params, x0, maturity](double k) { return call_price_conditional(funcs, params, x0, k, maturity); };
}

namespace {

std::size_t steps_for(double maturity, std::size_t steps_per_year) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(maturity * static_cast<double>(steps_per_year))));
}

bool on_common_grid(std::span<const double> maturities, std::size_t steps_per_year) {
    return std::all_of(maturities.begin(), maturities.end(), [&](double t) {
        const double steps = t * static_cast<double>(steps_per_year);
        return std::abs(steps - std::round(steps)) < 1e-9 * std::max(1.0, steps) && std::round(steps) >= 1.0;
    });
}

}  // namespace

std::vector<PathFunctionals> simulate_maturities(const ModelParams& params, std::span<const double> maturities,
                                                 std::size_t steps_per_year, const McConfig& config, double x0) {
    if (maturities.empty()) throw DomainError("simulate_maturities: no maturities");
    if (steps_per_year < 1) throw DomainError("simulate_maturities: steps_per_year must be at least 1");
    for (double t : maturities) {
        if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("simulate_maturities: maturities must be positive");
    }

    std::vector<PathFunctionals> out(maturities.size());
    if (!on_common_grid(maturities, steps_per_year)) {
        for (std::size_t i = 0; i < maturities.size(); ++i) {
            const TimeGrid grid{maturities[i], steps_for(maturities[i], steps_per_year)};
            out[i] = simulate_functionals(params, grid, config, x0);
        }
        return out;
    }

    std::vector<std::size_t> steps(maturities.size());
    for (std::size_t i = 0; i < maturities.size(); ++i) steps[i] = steps_for(maturities[i], steps_per_year);
    std::vector<std::size_t> horizons = steps;
    std::sort(horizons.begin(), horizons.end());
    horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());

    const std::size_t n_max = horizons.back();
    const TimeGrid grid{static_cast<double>(n_max) / static_cast<double>(steps_per_year), n_max};
    auto shared = simulate_functionals(params, grid, horizons, config, x0);
    for (std::size_t i = 0; i < maturities.size(); ++i) {
        const auto h = static_cast<std::size_t>(std::lower_bound(horizons.begin(), horizons.end(), steps[i]) - horizons.begin());
        out[i] = shared[h];
    }
    return out;
}

SwapReport zero_vanna_report(const ModelParams& params, double x0, double maturity, const McConfig& config,
                             std::size_t steps_per_year, const ReportOptions& options) {
    const double t[] = {maturity};
    const auto funcs = simulate_maturities(params, t, steps_per_year, config, x0);
    return zero_vanna_report(make_pricer(funcs.front(), params, x0, maturity, config),
                             vol_swap_strike(funcs.front(), maturity), params, x0, maturity, options);
}

RateFit fit_convergence_rate(std::span<const double> maturities, std::span<const double> errors,
                             std::span<const double> std_errors, double noise_multiple, std::size_t min_points,
                             double absolute_floor) {
    if (maturities.size() != errors.size() || errors.size() != std_errors.size()) {
        throw DomainError("fit_convergence_rate: length mismatch");
    }
    RateFit fit;
    fit.n_candidates = maturities.size();
    std::vector<double> log_t;
    std::vector<double> log_err;
    for (std::size_t i = 0; i < maturities.size(); ++i) {
        const double e = std::abs(errors[i]);
        if (!std::isfinite(e) || !(maturities[i] > 0.0)) continue;
        if (e > noise_multiple * std_errors[i] + absolute_floor) {
            fit.maturities_used.push_back(maturities[i]);
            log_t.push_back(std::log(maturities[i]));
            log_err.push_back(std::log(e));
        }
    }
    const std::size_t distinct = [&] {
        auto t = log_t;
        std::sort(t.begin(), t.end());
        return static_cast<std::size_t>(std::unique(t.begin(), t.end()) - t.begin());
    }();
    if (log_t.size() < std::max<std::size_t>(min_points, 2) || distinct < 2) return fit;

    const LinearFit ls = least_squares(log_t, log_err);
    fit.slope = ls.slope;
    fit.intercept = ls.intercept;
    fit.r_squared = std::clamp(ls.r_squared, 0.0, 1.0);
    fit.inconclusive = false;
    return fit;
}

ConvergenceStudy convergence_study(std::vector<SwapReport> reports, double noise_multiple) {
    ConvergenceStudy study;
    std::vector<double> t;
    std::vector<double> zv;
    std::vector<double> zv_se;
    std::vector<double> atm;
    std::vector<double> atm_se;
    for (const auto& r : reports) {
        t.push_back(r.maturity);
        zv.push_back(r.err_zero_vanna);
        zv_se.push_back(r.err_zero_vanna_se);
        atm.push_back(r.err_atmi);
        atm_se.push_back(r.err_atmi_se);
    }
    study.zero_vanna = fit_convergence_rate(t, zv, zv_se, noise_multiple);
    study.atmi = fit_convergence_rate(t, atm, atm_se, noise_multiple);
    study.reports = std::move(reports);
    return study;
}

ConvergenceStudy convergence_study(const ModelParams& params, double x0, std::span<const double> maturities,
                                   const McConfig& config, std::size_t steps_per_year, const ReportOptions& options) {
    std::vector<double> distinct(maturities.begin(), maturities.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3) throw DomainError("convergence_study: need at least 3 distinct maturities");

    const auto funcs = simulate_maturities(params, maturities, steps_per_year, config, x0);
    std::vector<SwapReport> reports;
    for (std::size_t i = 0; i < maturities.size(); ++i) {
        reports.push_back(zero_vanna_report(make_pricer(funcs[i], params, x0, maturities[i], config),
                                            vol_swap_strike(funcs[i], maturities[i]), params, x0, maturities[i],
                                            options));
    }
    return convergence_study(std::move(reports));
}

}  // namespace zerovanna
