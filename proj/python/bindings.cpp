#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "zerovanna/black_scholes.hpp"
#include "zerovanna/errors.hpp"
#include "zerovanna/experiment.hpp"
#include "zerovanna/fbm.hpp"
#include "zerovanna/mc_pricer.hpp"
#include "zerovanna/swap_analysis.hpp"
#include "zerovanna/vol_model.hpp"

namespace py = pybind11;
using namespace zerovanna;

namespace {

py::array_t<double> to_numpy(std::span<const double> v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<double> to_numpy(const Matrix& m) {
    py::array_t<double> out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

KernelRule kernel_rule(const std::string& name) {
    if (name == "cell_exact") return KernelRule::cell_exact;
    if (name == "midpoint") return KernelRule::midpoint;
    throw DomainError("unknown kernel rule '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_zerovanna, m) {
    m.doc() = "Rough-volatility Monte Carlo and zero-vanna implied volatility";

    py::register_exception<NoSolutionError>(m, "NoSolutionError", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def("norm_cdf", &norm_cdf, py::arg("x"));
    m.def("norm_pdf", &norm_pdf, py::arg("x"));

    auto bs = [&](const char* name, double (*fn)(const BsInputs&)) {
        m.def(
            name, [fn](double x, double k, double vol, double tau) { return fn({x, k, vol, tau}); },
            py::arg("log_spot"), py::arg("log_strike"), py::arg("vol"), py::arg("tau"));
    };
    bs("bs_price", &bs_price);
    bs("d1", &d1);
    bs("d2", &d2);
    bs("vega", &vega);
    bs("g_operator", &g_operator);
    bs("h_operator", &h_operator);

    m.def(
        "implied_vol",
        [](double price, double x, double k, double tau, double tol, double lo, double hi) {
            IvQuery q{price, lo, hi, tol};
            return implied_vol(q, {x, k, 0.0, tau});
        },
        py::arg("price"), py::arg("log_spot"), py::arg("log_strike"), py::arg("tau"), py::arg("tol") = 1e-10,
        py::arg("bracket_lo") = 1e-6, py::arg("bracket_hi") = 5.0);

    m.def(
        "zero_vanna_strike",
        [](const std::function<double(double)>& curve, double x, double tau, double tol, int max_iter) {
            return zero_vanna_strike(curve, x, tau, {tol, max_iter});
        },
        py::arg("curve"), py::arg("log_spot"), py::arg("tau"), py::arg("tol") = 1e-10, py::arg("max_iter") = 100);

    m.def(
        "kernel_weights",
        [](double maturity, std::size_t n_steps, double hurst, const std::string& rule) {
            return to_numpy(kernel_weights({maturity, n_steps}, hurst, kernel_rule(rule)).b);
        },
        py::arg("maturity"), py::arg("n_steps"), py::arg("hurst"), py::arg("rule") = "cell_exact");

    m.def(
        "sample_paths",
        [](double maturity, std::size_t n_steps, double hurst, std::size_t n_paths, std::uint64_t seed,
           const std::string& rule, std::size_t block_size, unsigned n_threads) {
            const TimeGrid grid{maturity, n_steps};
            GaussianPathBatch batch;
            {
                py::gil_scoped_release release;
                batch = sample_paths(grid, kernel_weights(grid, hurst, kernel_rule(rule)), n_paths, seed,
                                     {block_size, n_threads});
            }
            return py::make_tuple(to_numpy(batch.dW), to_numpy(batch.WH));
        },
        py::arg("maturity"), py::arg("n_steps"), py::arg("hurst"), py::arg("n_paths"), py::arg("seed"),
        py::arg("rule") = "cell_exact", py::arg("block_size") = 1024, py::arg("n_threads") = 1,
        "Returns (dW, WH) with shapes (n_paths, n_steps) and (n_paths, n_steps + 1).");

    m.def("fbm_covariance", &fbm_covariance, py::arg("s"), py::arg("t"), py::arg("hurst"));

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](double sigma0, double nu, double rho, double hurst) {
                 ModelParams p{sigma0, nu, rho, hurst};
                 p.validate();
                 return p;
             }),
             py::arg("sigma0") = 0.2, py::arg("nu") = 0.4, py::arg("rho") = 0.0, py::arg("hurst") = 0.5)
        .def_readwrite("sigma0", &ModelParams::sigma0)
        .def_readwrite("nu", &ModelParams::nu)
        .def_readwrite("rho", &ModelParams::rho)
        .def_readwrite("hurst", &ModelParams::hurst)
        .def("__repr__", [](const ModelParams& p) {
            std::ostringstream os;
            os << "ModelParams(sigma0=" << p.sigma0 << ", nu=" << p.nu << ", rho=" << p.rho << ", hurst=" << p.hurst
               << ")";
            return os.str();
        });

    m.def("variance_swap_oracle", &variance_swap_oracle, py::arg("params"), py::arg("maturity"));

    py::enum_<Estimator>(m, "Estimator")
        .value("conditional_mixing", Estimator::conditional_mixing)
        .value("direct_euler", Estimator::direct_euler);
    py::enum_<Scheme>(m, "Scheme").value("convolution", Scheme::convolution).value("cholesky_oracle", Scheme::cholesky_oracle);
    py::enum_<KernelRule>(m, "KernelRule").value("cell_exact", KernelRule::cell_exact).value("midpoint", KernelRule::midpoint);
    py::enum_<ControlVariate>(m, "ControlVariate")
        .value("none", ControlVariate::none)
        .value("bs_terminal", ControlVariate::bs_terminal);

    py::class_<McConfig>(m, "McConfig")
        .def(py::init<>())
        .def_readwrite("n_paths", &McConfig::n_paths)
        .def_readwrite("seed", &McConfig::seed)
        .def_readwrite("scheme", &McConfig::scheme)
        .def_readwrite("estimator", &McConfig::estimator)
        .def_readwrite("control_variate", &McConfig::control_variate)
        .def_readwrite("kernel", &McConfig::kernel)
        .def_readwrite("block_size", &McConfig::block_size)
        .def_readwrite("n_threads", &McConfig::n_threads);

    py::class_<PriceEstimate>(m, "PriceEstimate")
        .def_readonly("value", &PriceEstimate::value)
        .def_readonly("std_error", &PriceEstimate::std_error)
        .def_readonly("n_paths", &PriceEstimate::n_paths)
        .def("__repr__", [](const PriceEstimate& p) {
            std::ostringstream os;
            os.precision(10);
            os << "PriceEstimate(value=" << p.value << ", std_error=" << p.std_error << ")";
            return os.str();
        });

    py::class_<PathFunctionals>(m, "PathFunctionals")
        .def_property_readonly("integrated_variance", [](const PathFunctionals& f) { return to_numpy(f.integrated_variance); })
        .def_property_readonly("int_sigma_dW", [](const PathFunctionals& f) { return to_numpy(f.int_sigma_dW); })
        .def_property_readonly("terminal_log_spot", [](const PathFunctionals& f) { return to_numpy(f.terminal_log_spot); })
        .def("__len__", &PathFunctionals::size);

    m.def(
        "simulate",
        [](const ModelParams& params, double maturity, std::size_t n_steps, const McConfig& config, double x0) {
            py::gil_scoped_release release;
            return simulate_functionals(params, {maturity, n_steps}, config, x0);
        },
        py::arg("params"), py::arg("maturity"), py::arg("n_steps"), py::arg("config"), py::arg("x0") = 0.0);

    m.def(
        "call_price",
        [](const PathFunctionals& funcs, const ModelParams& params, double x0, double k, double maturity,
           const McConfig& config) { return make_pricer(funcs, params, x0, maturity, config)(k); },
        py::arg("funcs"), py::arg("params"), py::arg("x0"), py::arg("log_strike"), py::arg("maturity"),
        py::arg("config"));
    m.def("vol_swap_strike", &vol_swap_strike, py::arg("funcs"), py::arg("maturity"));
    m.def("variance_swap_strike", &variance_swap_strike, py::arg("funcs"), py::arg("maturity"));

    py::class_<SwapReport>(m, "SwapReport")
        .def_readonly("hurst", &SwapReport::hurst)
        .def_readonly("maturity", &SwapReport::maturity)
        .def_readonly("rho", &SwapReport::rho)
        .def_readonly("vol_swap", &SwapReport::vol_swap)
        .def_readonly("vol_swap_se", &SwapReport::vol_swap_se)
        .def_readonly("k_hat", &SwapReport::k_hat)
        .def_readonly("iv_zero_vanna", &SwapReport::iv_zero_vanna)
        .def_readonly("iv_zero_vanna_se", &SwapReport::iv_zero_vanna_se)
        .def_readonly("atmi", &SwapReport::atmi)
        .def_readonly("atmi_se", &SwapReport::atmi_se)
        .def_readonly("atm_skew", &SwapReport::atm_skew)
        .def_readonly("atm_skew_se", &SwapReport::atm_skew_se)
        .def_readonly("err_zero_vanna", &SwapReport::err_zero_vanna)
        .def_readonly("err_zero_vanna_se", &SwapReport::err_zero_vanna_se)
        .def_readonly("err_atmi", &SwapReport::err_atmi)
        .def_readonly("err_atmi_se", &SwapReport::err_atmi_se)
        .def_readonly("d2_residual", &SwapReport::d2_residual);

    m.def(
        "zero_vanna_report",
        [](const ModelParams& params, double x0, double maturity, const McConfig& config, std::size_t steps_per_year) {
            py::gil_scoped_release release;
            return zero_vanna_report(params, x0, maturity, config, steps_per_year);
        },
        py::arg("params"), py::arg("x0"), py::arg("maturity"), py::arg("config"), py::arg("steps_per_year") = 500);

    py::class_<RateFit>(m, "RateFit")
        .def_readonly("slope", &RateFit::slope)
        .def_readonly("intercept", &RateFit::intercept)
        .def_readonly("r_squared", &RateFit::r_squared)
        .def_readonly("maturities_used", &RateFit::maturities_used)
        .def_readonly("n_candidates", &RateFit::n_candidates)
        .def_readonly("inconclusive", &RateFit::inconclusive);

    m.def(
        "fit_convergence_rate",
        [](const std::vector<double>& t, const std::vector<double>& err, const std::vector<double>& se,
           double noise_multiple, std::size_t min_points) {
            return fit_convergence_rate(t, err, se, noise_multiple, min_points);
        },
        py::arg("maturities"), py::arg("errors"), py::arg("std_errors"), py::arg("noise_multiple") = 3.0,
        py::arg("min_points") = 3);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("sigma0", &ExperimentConfig::sigma0)
        .def_readwrite("nu", &ExperimentConfig::nu)
        .def_readwrite("rho", &ExperimentConfig::rho)
        .def_readwrite("hurst", &ExperimentConfig::hurst)
        .def_readwrite("maturities", &ExperimentConfig::maturities)
        .def_readwrite("x0", &ExperimentConfig::x0)
        .def_readwrite("n_steps", &ExperimentConfig::n_steps)
        .def_readwrite("n_paths", &ExperimentConfig::n_paths)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("threads", &ExperimentConfig::threads)
        .def_readwrite("output", &ExperimentConfig::output)
        .def("set", [](ExperimentConfig& c, const std::string& key, const std::string& value) { set_config_value(c, key, value); },
             py::arg("key"), py::arg("value"))
        .def("__str__", &format_config);

    m.def("parse_config", &parse_config, py::arg("text"));

    py::class_<CellResult>(m, "CellResult")
        .def_readonly("hurst", &CellResult::hurst)
        .def_readonly("maturity", &CellResult::maturity)
        .def_readonly("rho", &CellResult::rho)
        .def_readonly("report", &CellResult::report)
        .def_readonly("error", &CellResult::error);

    m.def(
        "run_cells",
        [](const ExperimentConfig& config) {
            py::gil_scoped_release release;
            return run_cells(config);
        },
        py::arg("config"));

    m.def(
        "run",
        [](const ExperimentConfig& config) {
            std::ostringstream log;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run(config, {}, log);
            }
            return py::make_tuple(code, log.str());
        },
        py::arg("config"), "Runs the configured experiment and writes its CSV and manifest. Returns (exit_code, summary).");

    m.attr("__version__") = version();
}
