#include <doctest.h>

#include <cmath>

#include "zerovanna/errors.hpp"
#include "zerovanna/swap_analysis.hpp"

using namespace zerovanna;

namespace {

McConfig mc(std::size_t n_paths, std::uint64_t seed) {
    McConfig c;
    c.n_paths = n_paths;
    c.seed = seed;
    c.kernel = KernelRule::midpoint;
    return c;
}

StrikePricer bs_pricer(double vol, double maturity, double se = 0.0) {
    return [=](double k) { return PriceEstimate{bs_price({0.0, k, vol, maturity}), se, 1}; };
}

}  // namespace

TEST_CASE("iv_curve") {
    SUBCASE("flat for a Black-Scholes pricer, SE propagated through vega") {
        const double strikes[] = {-0.2, -0.05, 0.0, 0.1};
        const auto curve = iv_curve(bs_pricer(0.25, 0.5, 1e-4), 0.0, 0.5, strikes);
        REQUIRE(curve.size() == 4);
        for (const auto& p : curve) {
            CHECK(p.ok);
            CHECK(std::abs(p.vol - 0.25) < 1e-10);
            CHECK(p.std_error == doctest::Approx(1e-4 / vega({0.0, p.log_strike, 0.25, 0.5})));
        }
    }
    SUBCASE("failures are recorded per strike") {
        StrikePricer pricer = [](double k) {
            return PriceEstimate{k > 0.05 ? 2.0 : bs_price({0.0, k, 0.2, 1.0}), 0.0, 1};
        };
        const double strikes[] = {0.0, 0.1, -0.1};
        const auto curve = iv_curve(pricer, 0.0, 1.0, strikes);
        CHECK(curve[0].ok);
        CHECK_FALSE(curve[1].ok);
        CHECK_FALSE(curve[1].error.empty());
        CHECK(curve[2].ok);
    }
}

TEST_CASE("atm_skew") {
    SUBCASE("exact central difference of a linear smile") {
        auto curve = [](double k) { return IvPoint{k, 0.2 - 0.3 * k, 0.0, true, {}}; };
        const auto s = atm_skew(curve, 0.0, 0.01);
        CHECK(s.value == doctest::Approx(-0.3).epsilon(1e-12));
        CHECK_FALSE(s.richardson);
    }
    SUBCASE("Richardson fallback removes the h^2 term when noise dominates") {
        auto curve = [](double k) { return IvPoint{k, 0.2 - 0.3 * k + k * k * k, 1.0, true, {}}; };
        const auto s = atm_skew(curve, 0.0, 0.01);
        CHECK(s.richardson);
        CHECK(s.value == doctest::Approx(-0.3).epsilon(1e-10));
    }
    SUBCASE("constant vol gives zero skew") {
        const StrikePricer p = bs_pricer(0.2, 1.0);
        auto curve = [&](double k) { return implied_vol_point(p, 0.0, 1.0, k); };
        CHECK(std::abs(atm_skew(curve, 0.0, 0.01).value) < 1e-8);
    }
    CHECK(default_skew_bump(0.2, 4.0) == doctest::Approx(0.02));
}

TEST_CASE("skew from Monte Carlo") {
    SUBCASE("uncorrelated smile is symmetric") {
        const ModelParams flat{0.2, 0.4, 0.0, 0.5};
        const ModelParams skewed{0.2, 0.4, -0.8, 0.5};
        const double t[] = {1.0};
        const auto funcs = simulate_maturities(flat, t, 250, mc(50'000, 21), 0.0);
        const McConfig config = mc(50'000, 21);
        const auto p_flat = make_pricer(funcs[0], flat, 0.0, 1.0, config);
        const auto p_skew = make_pricer(funcs[0], skewed, 0.0, 1.0, config);
        const double strikes[] = {-0.1, 0.1};
        const auto c_flat = iv_curve(p_flat, 0.0, 1.0, strikes);
        const auto c_skew = iv_curve(p_skew, 0.0, 1.0, strikes);
        const double gap_flat = std::abs(c_flat[1].vol - c_flat[0].vol);
        const double gap_skew = std::abs(c_skew[1].vol - c_skew[0].vol);
        CHECK(gap_flat < 0.01 * gap_skew);

        auto curve = [&](double k) { return implied_vol_point(p_flat, 0.0, 1.0, k); };
        const auto s = atm_skew(curve, 0.0, default_skew_bump(0.2, 1.0));
        CHECK(std::abs(s.value) < 3.0 * s.std_error + 1e-8);
    }
    SUBCASE("correlated skew is negative and flattens with maturity") {
        const ModelParams params{0.2, 0.4, -0.8, 0.1};
        const double maturities[] = {0.25, 1.0, 3.0};
        const McConfig config = mc(40'000, 22);
        const auto funcs = simulate_maturities(params, maturities, 500, config, 0.0);
        double previous = -1e9;
        for (std::size_t i = 0; i < 3; ++i) {
            const auto pricer = make_pricer(funcs[i], params, 0.0, maturities[i], config);
            auto curve = [&](double k) { return implied_vol_point(pricer, 0.0, maturities[i], k); };
            const auto s = atm_skew(curve, 0.0, default_skew_bump(0.2, maturities[i]));
            CHECK(s.value < -3.0 * s.std_error);
            CHECK(s.value > previous);
            previous = s.value;
        }
    }
}

TEST_CASE("zero_vanna_report") {
    SUBCASE("constant volatility: all three vols coincide") {
        const ModelParams params{0.2, 0.0, 0.0, 0.3};
        const auto r = zero_vanna_report(params, 0.0, 1.0, mc(1000, 23), 100);
        CHECK(std::abs(r.vol_swap - 0.2) < 1e-12);
        CHECK(std::abs(r.iv_zero_vanna - 0.2) < 1e-9);
        CHECK(std::abs(r.atmi - 0.2) < 1e-9);
        CHECK(std::abs(r.err_zero_vanna) < 1e-9);
        CHECK(std::abs(r.err_atmi) < 1e-9);
        CHECK(r.k_hat == doctest::Approx(-0.02).epsilon(1e-8));
    }
    SUBCASE("constant volatility with correlation: equal up to sampling noise") {
        const ModelParams params{0.2, 0.0, -0.8, 0.3};
        const auto r = zero_vanna_report(params, 0.0, 1.0, mc(20'000, 23), 100);
        CHECK(r.vol_swap == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(std::abs(r.err_zero_vanna) < 3.0 * r.err_zero_vanna_se);
        CHECK(std::abs(r.err_atmi) < 3.0 * r.err_atmi_se);
    }
    SUBCASE("deterministic, with a tight fixed-point residual") {
        const ModelParams params{0.2, 0.4, -0.8, 0.3};
        ReportOptions options;
        options.comparator = [](const ModelParams& p, double) { return p.sigma0; };
        const auto a = zero_vanna_report(params, 0.0, 0.5, mc(20'000, 24), 500, options);
        const auto b = zero_vanna_report(params, 0.0, 0.5, mc(20'000, 24), 500, options);
        CHECK(a.iv_zero_vanna == b.iv_zero_vanna);
        CHECK(a.atmi == b.atmi);
        CHECK(a.atm_skew == b.atm_skew);
        CHECK(a.vol_swap == b.vol_swap);
        CHECK(std::abs(a.d2_residual) < 1e-8);
        REQUIRE(a.comparator.has_value());
        CHECK(*a.comparator == 0.2);
        CHECK(a.err_zero_vanna == a.iv_zero_vanna - a.vol_swap);
        CHECK(a.err_zero_vanna_se == doctest::Approx(std::hypot(a.iv_zero_vanna_se, a.vol_swap_se)));
        // Correlated case: the zero-vanna IV sits between ATMI and the swap strike.
        CHECK(a.atmi < a.iv_zero_vanna);
        CHECK(a.iv_zero_vanna < a.vol_swap);
    }
}

TEST_CASE("fit_convergence_rate") {
    const double t[] = {0.25, 0.5, 1.0, 2.0, 3.0};
    SUBCASE("recovers a power law") {
        std::vector<double> err;
        for (double x : t) err.push_back(-0.004 * std::pow(x, 0.6));
        const std::vector<double> se(5, 1e-5);
        const auto fit = fit_convergence_rate(t, err, se);
        CHECK_FALSE(fit.inconclusive);
        CHECK(fit.slope == doctest::Approx(0.6).epsilon(1e-12));
        CHECK(fit.intercept == doctest::Approx(std::log(0.004)).epsilon(1e-12));
        CHECK(fit.r_squared == doctest::Approx(1.0));
        CHECK(fit.maturities_used.size() == 5);
    }
    SUBCASE("points inside the noise floor are dropped") {
        const double err[] = {1e-6, 2e-3, 4e-3, 8e-3, 1.2e-2};
        const double se[] = {1e-5, 1e-4, 1e-4, 1e-4, 1e-4};
        const auto fit = fit_convergence_rate(t, err, se);
        CHECK(fit.maturities_used.size() == 4);
        CHECK(fit.maturities_used.front() == 0.5);
    }
    SUBCASE("too few survivors is inconclusive") {
        const double err[] = {1e-6, 1e-6, 1e-6, 8e-3, 1.2e-2};
        const double se[] = {1e-5, 1e-5, 1e-5, 1e-4, 1e-4};
        CHECK(fit_convergence_rate(t, err, se).inconclusive);
    }
}

TEST_CASE("convergence_study") {
    SUBCASE("nu = 0 errors vanish and the fit is inconclusive") {
        const double maturities[] = {0.5, 1.0, 2.0};
        const auto study = convergence_study({0.2, 0.0, 0.0, 0.3}, 0.0, maturities, mc(500, 25), 100);
        CHECK(study.zero_vanna.inconclusive);
        CHECK(study.atmi.inconclusive);
        for (const auto& r : study.reports) CHECK(std::abs(r.err_zero_vanna) < 1e-9);
    }
    SUBCASE("correlated error decays at order 2H") {
        const double maturities[] = {0.5, 1.0, 2.0, 3.0};
        const auto study = convergence_study({0.2, 0.4, -0.8, 0.3}, 0.0, maturities, mc(50'000, 26), 500);
        REQUIRE_FALSE(study.zero_vanna.inconclusive);
        CHECK(study.zero_vanna.maturities_used.size() >= 3);
        CHECK(std::abs(study.zero_vanna.slope - 0.6) < 0.3);
    }
    SUBCASE("fewer than three maturities is rejected") {
        const double maturities[] = {1.0, 1.0, 2.0};
        CHECK_THROWS_AS(convergence_study({0.2, 0.4, -0.8, 0.3}, 0.0, maturities, mc(100, 27), 10), DomainError);
    }
}

TEST_CASE("simulate_maturities") {
    const ModelParams params{0.2, 0.0, 0.0, 0.3};
    SUBCASE("shared grid") {
        const double maturities[] = {1.0, 0.25, 0.5};
        const auto funcs = simulate_maturities(params, maturities, 8, mc(10, 28), 0.0);
        REQUIRE(funcs.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(funcs[i].integrated_variance[0] == doctest::Approx(0.04 * maturities[i]).epsilon(1e-14));
        }
    }
    SUBCASE("off-grid maturities get their own grid") {
        const double maturities[] = {0.33, 1.0};
        const auto funcs = simulate_maturities(params, maturities, 10, mc(10, 29), 0.0);
        CHECK(funcs[0].integrated_variance[0] == doctest::Approx(0.04 * 0.33).epsilon(1e-14));
    }
    SUBCASE("bad input") {
        const double negative[] = {-1.0};
        CHECK_THROWS_AS(simulate_maturities(params, negative, 10, mc(10, 30), 0.0), DomainError);
    }
}
