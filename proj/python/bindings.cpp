#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "funess/error.hpp"
#include "funess/kernels.hpp"
#include "funess/montecarlo.hpp"
#include "funess/params.hpp"
#include "funess/randomwalk.hpp"
#include "funess/statistics.hpp"

namespace py = pybind11;
using namespace funess;

namespace {

FunessParams make_params(double k, double r, double alpha, double x1, double x2, double q1, double t0) {
    return validate_params(RawParams{k, r, alpha, x1, x2, q1, t0});
}

Eigen::MatrixXd as_array(const ColumnStochasticMatrix& m) { return m.matrix(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Two-state process with memory of the first event";

    static py::exception<Error> error(m, "FunessError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(error.ptr(), e.what());
        }
    });

    py::class_<FunessParams>(m, "Params")
        .def(py::init(&make_params), py::arg("k") = 0.75, py::arg("r") = 0.5, py::arg("alpha") = 2.0,
             py::arg("x1") = 1.0, py::arg("x2") = -1.0, py::arg("q1") = 0.5, py::arg("t0") = 0.0)
        .def_property_readonly("k", &FunessParams::k)
        .def_property_readonly("r", &FunessParams::r)
        .def_property_readonly("alpha", &FunessParams::alpha)
        .def_property_readonly("x1", &FunessParams::x1)
        .def_property_readonly("x2", &FunessParams::x2)
        .def_property_readonly("q1", &FunessParams::q1)
        .def_property_readonly("t0", &FunessParams::t0)
        .def_property_readonly("markov", &FunessParams::markov)
        .def("with_q1", &FunessParams::with_q1)
        .def("__repr__", [](const FunessParams& p) {
            return "Params(k=" + std::to_string(p.k()) + ", r=" + std::to_string(p.r()) +
                   ", alpha=" + std::to_string(p.alpha()) + ", q1=" + std::to_string(p.q1()) + ")";
        });

    m.def("memory_kernel", [](std::size_t l, double tau, const FunessParams& p) { return as_array(memory_kernel(l, tau, p)); },
          py::arg("initial_state"), py::arg("tau"), py::arg("params"));
    m.def("lambda_initial", [](double tau, const FunessParams& p) { return as_array(lambda_initial(tau, p)); },
          py::arg("tau"), py::arg("params"));
    m.def("gamma_divisor", [](double t, double s, const FunessParams& p) { return as_array(gamma_divisor(t, s, p)); },
          py::arg("t"), py::arg("s"), py::arg("params"));
    m.def("intermediate_lambda",
          [](double t, double s, const FunessParams& p) { return as_array(intermediate_lambda(t, s, p)); },
          py::arg("t"), py::arg("s"), py::arg("params"));
    m.def("stationary_marginal", &stationary_marginal, py::arg("params"));
    m.def("propagate_master", &propagate_master, py::arg("q0"), py::arg("t_end"), py::arg("step"), py::arg("params"));

    m.def("stationary_correlation",
          [](double tau, const FunessParams& p, std::optional<std::size_t> x0) {
              return stationary_correlation(tau, x0 ? CorrelationMode::conditional(*x0) : CorrelationMode::averaged(), p);
          },
          py::arg("tau"), py::arg("params"), py::arg("x0") = py::none());
    m.def("conditional_mutual_information",
          [](double tau, const FunessParams& p, bool brute_force) {
              return conditional_mutual_information(tau, p, brute_force ? CmiMethod::BruteForce : CmiMethod::ClosedForm)
                  .cmi;
          },
          py::arg("tau"), py::arg("params"), py::arg("brute_force") = false);
    m.def("entropy_difference", &entropy_difference, py::arg("tau"), py::arg("params"));

    m.def("simulate_ensemble_summary",
          [](const FunessParams& p, double horizon, std::size_t n, std::uint64_t seed, double t) {
              const auto ens = simulate_ensemble(p, horizon, n, seed, default_thread_count());
              const auto est = estimate_marginal(ens, t);
              return py::make_tuple(est.value, est.std_error);
          },
          py::arg("params"), py::arg("horizon"), py::arg("n"), py::arg("seed"), py::arg("t"),
          "Marginal probability of x1 at t estimated from n sampled paths, with its standard error.");
    m.def("sample_trajectory",
          [](const FunessParams& p, double horizon, std::uint64_t seed, std::uint64_t stream) {
              const auto tr = sample_trajectory(p, horizon, seed, stream);
              std::vector<int> states(tr.states.begin(), tr.states.end());
              return py::make_tuple(tr.initial_state, tr.jump_times, states);
          },
          py::arg("params"), py::arg("horizon"), py::arg("seed"), py::arg("stream") = 0);

    m.def("walk_moments",
          [](double t, const FunessParams& p, double lambda) {
              const auto w = walk_moments_analytic(t, make_walk_params(p, lambda));
              py::dict d;
              d["mean"] = w.mean;
              d["variance"] = w.variance;
              d["M1"] = w.M1;
              d["M2"] = w.M2;
              d["d_eff"] = w.d_eff;
              return d;
          },
          py::arg("t"), py::arg("params"), py::arg("lam"));
    m.def("walk_variance_correlated",
          [](double t, const FunessParams& p, double lambda) { return walk_variance_correlated(t, make_walk_params(p, lambda)); },
          py::arg("t"), py::arg("params"), py::arg("lam"));
    m.def("effective_diffusion",
          [](const FunessParams& p, double lambda) { return effective_diffusion(make_walk_params(p, lambda)); },
          py::arg("params"), py::arg("lam"));
    m.def("walk_distribution",
          [](double t, const FunessParams& p, double lambda) {
              const auto d = walk_distribution_oracle(t, make_walk_params(p, lambda));
              std::vector<double> values(d.mass.size());
              for (std::size_t i = 0; i < values.size(); ++i) values[i] = d.value(i);
              return py::make_tuple(values, d.mass);
          },
          py::arg("t"), py::arg("params"), py::arg("lam"));
    m.def("simulate_walk",
          [](const FunessParams& p, double lambda, std::vector<double> grid, std::size_t n, std::uint64_t seed,
             bool independent) {
              const double horizon = grid.empty() ? 1.0 : grid.back() - p.t0();
              const auto samples =
                  simulate_walk_ensemble(make_walk_params(p, lambda), horizon, grid, n, seed, default_thread_count(),
                                         independent ? WalkReadout::IndependentMarginal : WalkReadout::Trajectory);
              Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(grid.size()));
              for (std::size_t i = 0; i < n; ++i) {
                  for (std::size_t j = 0; j < grid.size(); ++j) {
                      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = samples[i].values[j];
                  }
              }
              return values;
          },
          py::arg("params"), py::arg("lam"), py::arg("grid"), py::arg("n"), py::arg("seed"),
          py::arg("independent") = false, "Walk values S(t), one row per sample, one column per grid time.");
}
