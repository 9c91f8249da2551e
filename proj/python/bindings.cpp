#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "app.hpp"

namespace py = pybind11;
using namespace maxperiodic;
using nlohmann::json;

namespace {

// Reports cross the boundary as JSON text; the Python side decodes them.
std::string run_json(const std::string& command, const std::string& config_json) {
    app::Config cfg = app::parse_config(json::parse(config_json));
    app::Outcome o = app::run_command(command, cfg);
    json r = o.report;
    r["exit_code"] = o.code;
    return r.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Singly periodic maximal surfaces in Minkowski space";

    static py::exception<Error> base(m, "Error");
    static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
    static py::exception<ObstructionError> obstruction(m, "ObstructionError", base.ptr());
    static py::exception<QuadratureError> quadrature(m, "QuadratureError", base.ptr());
    static py::exception<DiagnosticsError> diagnostics(m, "DiagnosticsError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ObstructionError& e) {
            PyErr_SetObject(obstruction.ptr(), py::make_tuple(e.what(), e.residual).ptr());
        } catch (const ValidationError& e) {
            PyErr_SetString(validation.ptr(), e.what());
        } catch (const QuadratureError& e) {
            PyErr_SetString(quadrature.ptr(), e.what());
        } catch (const DiagnosticsError& e) {
            PyErr_SetString(diagnostics.ptr(), e.what());
        } catch (const json::exception& e) {
            PyErr_SetString(validation.ptr(), e.what());
        }
    });

    m.def("validate_branch", &curve::validate_branch, py::arg("branch_points"),
          "Empty string when the branch points are admissible, otherwise the reason.");

    m.def(
        "period_matrix",
        [](const std::vector<double>& branch) {
            curve::RealHyperellipticCurve c(branch);
            auto pd = homology::dual_basis_and_periods(c, homology::build_basis(c));
            std::vector<std::vector<cplx>> pi(pd.n, std::vector<cplx>(pd.n)), a(pd.n, std::vector<cplx>(pd.n));
            for (int j = 0; j < pd.n; ++j)
                for (int k = 0; k < pd.n; ++k) {
                    pi[j][k] = pd.Pi(j, k);
                    a[j][k] = pd.eta_a(j, k);
                }
            return py::make_tuple(pi, a);
        },
        py::arg("branch_points"), "(Pi, a-periods of the dual basis) as nested lists.");

    m.def(
        "spinor_sections",
        [](const std::vector<double>& branch, cplx e) {
            curve::RealHyperellipticCurve c(branch);
            auto pd = homology::dual_basis_and_periods(c, homology::build_basis(c));
            jacobian::AbelMap abel(c, pd);
            auto sys = jacobian::spinor_sections(abel, e);
            py::list out;
            for (const auto& s : sys.sections) {
                py::dict d;
                d["index"] = s.index;
                d["mirror_defect"] = s.mirror_defect;
                auto sol = jacobian::solve_divisor(abel, sys, s.index, e);
                d["admissible"] = sol.admissible;
                std::vector<cplx> pts;
                for (const auto& [p, mult] : sol.divisor.points) pts.push_back(p.z);
                d["divisor"] = pts;
                d["residual"] = sol.residual;
                out.append(d);
            }
            return out;
        },
        py::arg("branch_points"), py::arg("end_point") = cplx(0, 0));

    m.def(
        "s2_point",
        [](const std::vector<double>& branch, cplx e, int section) {
            surface::ModuliParams p;
            p.branch = branch;
            p.e = e;
            p.section = section;
            auto r = surface::s2_point(p);
            if (!r.ok) throw ObstructionError(r.note, 0.0);
            return r.coords;
        },
        py::arg("branch_points"), py::arg("end_point") = cplx(0, 0), py::arg("section") = 1,
        "Singular points q_0..q_n as (x1 mod 1, x2, x3) followed by c.");

    m.def("config_hash", [](const std::string& config_json) { return app::config_hash(json::parse(config_json)); });
    m.def("_run_json", &run_json, py::arg("command"), py::arg("config_json"));
    m.def(
        "main",
        [](const std::string& command, const std::string& config_path, std::optional<std::string> out,
           std::optional<int> replicas, bool normalize) {
            std::ostringstream log;
            int rc = app::main_entry(command, config_path, out, replicas, normalize, log);
            return py::make_tuple(rc, log.str());
        },
        py::arg("command"), py::arg("config_path"), py::arg("out") = py::none(), py::arg("replicas") = py::none(),
        py::arg("normalize_e1_height") = false, "Command-line front end; returns (exit code, log).");
    m.attr("commands") = app::command_names();
}
