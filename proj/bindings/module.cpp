#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coarsen/analysis.hpp"
#include "coarsen/experiments.hpp"

namespace py = pybind11;
using namespace coarsen;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Local coarsening transformations of the 2D Helmholtz stencil";

    py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_ArithmeticError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<GridCoord>(m, "GridCoord")
        .def_readonly("x", &GridCoord::x)
        .def_readonly("y", &GridCoord::y)
        .def("__repr__", [](const GridCoord& c) {
            return "GridCoord(" + std::to_string(c.x) + ", " + std::to_string(c.y) + ")";
        });

    py::class_<LocalProblem>(m, "LocalProblem")
        .def_readonly("a_ll", &LocalProblem::a_ll)
        .def_readonly("interior", &LocalProblem::interior)
        .def_readonly("boundary", &LocalProblem::boundary)
        .def_readonly("decoupled", &LocalProblem::decoupled)
        .def_readonly("coords", &LocalProblem::coords)
        .def_readonly("lambda_", &LocalProblem::lambda)
        .def_readonly("radius", &LocalProblem::radius)
        .def_property_readonly("n_local", &LocalProblem::n_local)
        .def_property_readonly("n_interior", &LocalProblem::n_interior)
        .def_property_readonly("target_pattern",
                               [](const LocalProblem& p) { return p.target_pattern.entries(); });

    py::class_<TransformPair>(m, "TransformPair")
        .def(py::init<Matrix, Matrix>(), py::arg("y_rows"), py::arg("a_tilde"))
        .def_readwrite("y_rows", &TransformPair::y_rows)
        .def_readwrite("a_tilde", &TransformPair::a_tilde);

    py::class_<IterationRecord>(m, "IterationRecord")
        .def_readonly("iteration", &IterationRecord::iteration)
        .def_readonly("error", &IterationRecord::error)
        .def_readonly("alpha", &IterationRecord::alpha)
        .def_readonly("cond_eq7", &IterationRecord::cond_eq7);

    py::class_<LinearizedResult>(m, "LinearizedResult")
        .def_readonly("pair", &LinearizedResult::pair)
        .def_property_readonly("trace", [](const LinearizedResult& r) { return r.trace.iterations; })
        .def_property_readonly("error", [](const LinearizedResult& r) { return r.trace.final_error(); })
        .def_readonly("converged", &LinearizedResult::converged)
        .def_readonly("iterations", &LinearizedResult::iterations);

    py::class_<SteepestDescentResult>(m, "SteepestDescentResult")
        .def_readonly("pair", &SteepestDescentResult::pair)
        .def_property_readonly("trace", [](const SteepestDescentResult& r) { return r.trace.iterations; })
        .def_property_readonly("error", [](const SteepestDescentResult& r) { return r.trace.final_error(); })
        .def_readonly("converged", &SteepestDescentResult::converged);

    py::class_<SpectrumReport>(m, "SpectrumReport")
        .def_readonly("sigma", &SpectrumReport::sigma)
        .def_readonly("null_dim", &SpectrumReport::null_dim)
        .def_readonly("cond_eq7_estimate", &SpectrumReport::cond_eq7_estimate)
        .def("operator_sigma_normalized", &SpectrumReport::operator_sigma_normalized);

    py::class_<GlobalReport>(m, "GlobalReport")
        .def_readonly("local_error", &GlobalReport::local_error)
        .def_readonly("global_error", &GlobalReport::global_error)
        .def_readonly("max_decoupled_offdiag", &GlobalReport::max_decoupled_offdiag)
        .def_readonly("coupling_deviation", &GlobalReport::coupling_deviation)
        .def_readonly("external_deviation", &GlobalReport::external_deviation);

    m.def("build_helmholtz",
          [](double lambda, Index width, Index height) {
              return Matrix(build_helmholtz({lambda, width, height}));
          },
          py::arg("lambda_"), py::arg("width"), py::arg("height"));
    m.def("local_problem", &sweep_problem, py::arg("m"), py::arg("p") = 1, py::arg("q") = 1,
          py::arg("lambda_") = 0.0);
    m.def("initial_guess", &initial_guess);
    m.def("error", [](const LocalProblem& p, const TransformPair& t) { return residual_and_error(p, t).norm; });
    m.def("gradient", [](const LocalProblem& p, const TransformPair& t) {
        const Gradient g = objective_gradient(p, t);
        return py::make_tuple(g.grad_y, g.grad_a);
    });
    m.def("steepest_descent",
          [](const LocalProblem& p, int max_iter, double tol) {
              return steepest_descent(p, {max_iter, tol});
          },
          py::arg("problem"), py::arg("max_iter") = 1000, py::arg("tol") = 1e-12,
          py::call_guard<py::gil_scoped_release>());
    m.def("linearized_minimize",
          [](const LocalProblem& p, int max_iter, double tol) {
              LinearizedOptions o;
              o.max_iter = max_iter;
              o.rel_change_tol = tol;
              return linearized_minimize(p, o);
          },
          py::arg("problem"), py::arg("max_iter") = 200, py::arg("tol") = 1e-10,
          py::call_guard<py::gil_scoped_release>());
    m.def("spectrum_at", [](const LocalProblem& p, const TransformPair& t) { return spectrum_at(p, t); });
    m.def("condition_of_y", &condition_of_y);
    m.def("global_verify", [](const LocalProblem& p, const TransformPair& t) {
        return global_verify(verification_grid(p), verification_center(p), p, t);
    });
    m.def("run_experiment",
          [](const std::string& subcommand, const std::map<std::string, std::string>& settings) {
              RunConfig c = default_config(subcommand);
              for (const auto& [k, v] : settings) apply_setting(c, k, v);
              validate(c);
              ExperimentResult r;
              {
                  py::gil_scoped_release release;
                  r = run_experiment(c);
              }
              py::dict tables;
              for (const auto& t : r.tables) tables[py::str(t.name)] = t.str();
              return py::make_tuple(r.exit_code, tables);
          },
          py::arg("subcommand"), py::arg("settings") = std::map<std::string, std::string>{},
          "Runs one experiment and returns (exit_code, {table name: CSV text}).");
}
