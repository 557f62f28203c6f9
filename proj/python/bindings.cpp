#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pbec/analysis.hpp"
#include "pbec/config.hpp"
#include "pbec/experiments.hpp"
#include "pbec/kernel.hpp"
#include "pbec/version.hpp"

namespace py = pybind11;
using namespace pbec;

namespace {

Representation rep_from_string(const std::string& s) {
    if (s == "full_field") return Representation::FullField;
    if (s == "hierarchical") return Representation::Hierarchical;
    throw ConfigError("representation must be 'full_field' or 'hierarchical'");
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Driven-dissipative kinetics of a multimode photon gas coupled to a "
              "pumped dye reservoir";
    m.attr("__version__") = PBEC_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<SolverError>(m, "SolverError");
    py::register_exception<StateError>(m, "StateError");
    py::register_exception<FitError>(m, "FitError");

    py::class_<ModeIndex>(m, "ModeIndex")
        .def(py::init<int, int>(), py::arg("mx"), py::arg("my"))
        .def_readonly("mx", &ModeIndex::mx)
        .def_readonly("my", &ModeIndex::my)
        .def_property_readonly("level", &ModeIndex::level)
        .def("__repr__", [](const ModeIndex& mi) { return "ModeIndex" + mi.label(); });

    py::class_<SceneParams>(m, "SceneParams")
        .def(py::init<>())
        .def_static("paper_defaults", &SceneParams::paper_defaults)
        .def_readwrite("max_level", &SceneParams::max_level)
        .def_readwrite("A_per_level", &SceneParams::A_per_level)
        .def_readwrite("E_per_level", &SceneParams::E_per_level)
        .def_readwrite("density", &SceneParams::density)
        .def_readwrite("N_per_bin", &SceneParams::N_per_bin)
        .def_readwrite("extent", &SceneParams::extent)
        .def_readwrite("coupling_area", &SceneParams::coupling_area)
        .def_readwrite("Gamma_down", &SceneParams::Gamma_down)
        .def_readwrite("kappa", &SceneParams::kappa);

    py::class_<Scene>(m, "Scene")
        .def_property_readonly("n_modes", &Scene::n_modes)
        .def_property_readonly("n_bins", &Scene::n_bins)
        .def_property_readonly("modes",
                               [](const Scene& sc) { return sc.modes.modes; })
        .def_property_readonly("gamma", [](const Scene& sc) { return sc.gamma; })
        .def_property_readonly("u_crit", [](const Scene& sc) { return sc.u_crit; })
        .def_property_readonly("S", [](const Scene& sc) { return sc.S; })
        .def_property_readonly("A", [](const Scene& sc) { return sc.modes.A; })
        .def_property_readonly("E", [](const Scene& sc) { return sc.modes.E; })
        .def_property_readonly("coupling",
                               [](const Scene& sc) -> const Eigen::MatrixXd& { return sc.g; })
        .def_property_readonly(
            "positions", [](const Scene& sc) { return Eigen::MatrixXd(sc.grid.positions); });

    m.def("build_scene", &build_scene, py::arg("params"));
    m.def("mode_intensity",
          [](int mx, int my, double x, double y) {
              return mode_intensity({mx, my}, x, y);
          },
          py::arg("mx"), py::arg("my"), py::arg("x"), py::arg("y"));

    py::class_<SystemState>(m, "SystemState")
        .def_readonly("n", &SystemState::n)
        .def_readonly("excitation", &SystemState::excitation)
        .def_readonly("t", &SystemState::t)
        .def_property_readonly("representation", [](const SystemState& s) {
            return s.rep == Representation::FullField ? "full_field" : "hierarchical";
        });

    py::class_<SteadyState>(m, "SteadyState")
        .def_readonly("state", &SteadyState::state)
        .def_readonly("P", &SteadyState::P)
        .def_readonly("residual_norm", &SteadyState::residual_norm)
        .def_readonly("converged", &SteadyState::converged);

    py::class_<HierarchyBasis>(m, "HierarchyBasis")
        .def_readonly("depth", &HierarchyBasis::depth)
        .def_readonly("rank", &HierarchyBasis::rank)
        .def_readonly("total_rank", &HierarchyBasis::total_rank)
        .def("project", &HierarchyBasis::project)
        .def("lift", &HierarchyBasis::lift)
        .def("orthonormality_defect", &HierarchyBasis::orthonormality_defect)
        .def("tridiagonality_defect", &HierarchyBasis::tridiagonality_defect);

    m.def("build_hierarchy", &build_hierarchy, py::arg("scene"), py::arg("depth"),
          py::arg("rank_tol") = 1e-10);

    m.def(
        "rhs_full",
        [](const Scene& sc, const Eigen::VectorXd& n, const Eigen::VectorXd& f, double P) {
            Eigen::VectorXd dn, df;
            rhs_full(sc, n, f, P, dn, df);
            return py::make_tuple(dn, df);
        },
        py::arg("scene"), py::arg("n"), py::arg("f"), py::arg("P"));

    m.def(
        "effective_view",
        [](const Scene& sc, const Eigen::VectorXd& n, const Eigen::VectorXd& f) {
            SystemState s;
            s.rep = Representation::FullField;
            s.n = n;
            s.excitation = f;
            EffectiveModeView v = effective_view(sc, s);
            return py::make_tuple(v.u, v.u_crit, v.eta);
        },
        py::arg("scene"), py::arg("n"), py::arg("f"),
        "Returns (u, u_crit, eta) per mode.");

    m.def(
        "find_steady",
        [](const Scene& sc, double P, const std::string& rep, int hierarchy_depth) {
            if (rep_from_string(rep) == Representation::FullField)
                return find_steady(sc, P, steady_seed(sc, P));
            HierarchyBasis hb = build_hierarchy(sc, hierarchy_depth);
            SystemState seed =
                to_representation(sc, &hb, steady_seed(sc, P), Representation::Hierarchical);
            return find_steady(sc, P, seed, SteadySettings{}, &hb);
        },
        py::arg("scene"), py::arg("P"), py::arg("representation") = "full_field",
        py::arg("hierarchy_depth") = 2);

    py::class_<ModeRecord>(m, "ModeRecord")
        .def_readonly("n_start", &ModeRecord::n_start)
        .def_readonly("n_end", &ModeRecord::n_end)
        .def_readonly("n_peak", &ModeRecord::n_peak)
        .def_readonly("t_peak", &ModeRecord::t_peak);

    py::class_<QuenchRecord>(m, "QuenchRecord")
        .def_readonly("P_start", &QuenchRecord::P_start)
        .def_readonly("P_end", &QuenchRecord::P_end)
        .def_readonly("t_eq", &QuenchRecord::t_eq)
        .def_readonly("t_eq_last", &QuenchRecord::t_eq_last)
        .def_readonly("converged", &QuenchRecord::converged)
        .def_readonly("delta_n", &QuenchRecord::delta_n)
        .def_readonly("t_decay", &QuenchRecord::t_decay)
        .def_readonly("decay_r2", &QuenchRecord::decay_r2)
        .def_readonly("per_mode", &QuenchRecord::per_mode)
        .def_readonly("trace_t", &QuenchRecord::trace_t)
        .def_property_readonly("trace_n",
                               [](const QuenchRecord& r) { return r.trace_n; });

    m.def(
        "equilibration_time",
        [](const Scene& sc, double P_start, double P_end, double d, double t_max,
           const std::string& rep, int hierarchy_depth) {
            ExperimentSettings es;
            es.d = d;
            es.t_max = t_max;
            es.rep = rep_from_string(rep);
            if (es.rep == Representation::FullField)
                return equilibration_time(sc, P_start, P_end, es);
            HierarchyBasis hb = build_hierarchy(sc, hierarchy_depth);
            return equilibration_time(sc, P_start, P_end, es, &hb);
        },
        py::arg("scene"), py::arg("P_start"), py::arg("P_end"), py::arg("d") = 1e-6,
        py::arg("t_max") = 1e6, py::arg("representation") = "hierarchical",
        py::arg("hierarchy_depth") = 2);

    m.def(
        "big_quench_trace",
        [](const Scene& sc, double P_start, double P_end,
           const std::vector<double>& times, const std::string& rep, int depth) {
            ExperimentSettings es;
            es.rep = rep_from_string(rep);
            if (es.rep == Representation::FullField)
                return big_quench_trace(sc, P_start, P_end, times, es);
            HierarchyBasis hb = build_hierarchy(sc, depth);
            return big_quench_trace(sc, P_start, P_end, times, es, &hb);
        },
        py::arg("scene"), py::arg("P_start"), py::arg("P_end"), py::arg("sample_times"),
        py::arg("representation") = "hierarchical", py::arg("hierarchy_depth") = 2);

    m.def("log_grid", &log_grid, py::arg("lo"), py::arg("hi"), py::arg("points"));

    py::class_<Transition>(m, "Transition")
        .def_readonly("P_crit", &Transition::P_crit)
        .def_readonly("mode", &Transition::mode)
        .def_property_readonly("kind",
                               [](const Transition& t) {
                                   return t.kind == TransitionKind::Condensation
                                              ? "condensation"
                                              : "decondensation";
                               })
        .def_readonly("members", &Transition::members);

    m.def(
        "detect_transitions",
        [](const Scene& sc, const std::vector<double>& P,
           const Eigen::MatrixXd& n_steady) {
            return detect_transitions(sc, P, n_steady);
        },
        py::arg("scene"), py::arg("P_grid"), py::arg("n_steady"));

    m.def(
        "continuation_sweep",
        [](const Scene& sc, const std::vector<double>& grid) {
            auto sweep = continuation_sweep(sc, grid);
            Eigen::MatrixXd n(grid.size(), sc.n_modes());
            std::vector<bool> conv;
            for (size_t k = 0; k < sweep.size(); ++k) {
                n.row(k) = sweep[k].state.n.transpose();
                conv.push_back(sweep[k].converged);
            }
            return py::make_tuple(n, conv);
        },
        py::arg("scene"), py::arg("P_grid"),
        "Full-field continuation; returns (n_steady matrix, converged flags).");

    m.def("preset_names", &preset_names);
    m.def("preset_text", &preset_text, py::arg("name"));
}
