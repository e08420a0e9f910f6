#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "blorbit/error.hpp"
#include "blorbit/pipeline.hpp"

namespace py = pybind11;
using namespace blorbit;

namespace {

struct Session {
  Config cfg;
  SeminormalForm form;
  RangeContext ctx;
  bool has_ctx = false;

  explicit Session(const std::string& json) : cfg(parse_config(json)), form(build_normal_form(cfg)) {}

  ResonanceContext resonance() const {
    return ResonanceContext::from(form, frequencies(cfg.model, cfg.trunc), cfg.trunc.eta);
  }
  const RangeContext& range() {
    if (!has_ctx) {
      ctx = RangeContext::build(form, select_torus(resonance(), selection_options(cfg)), range_options(cfg));
      has_ctx = true;
    }
    return ctx;
  }
};

py::dict selection_dict(const TorusSelection& s) {
  py::dict d;
  d["eta"] = s.eta;
  d["T"] = s.T;
  d["k"] = s.k;
  d["I0"] = s.I0;
  d["omega_tilde"] = s.omega_tilde;
  d["Omega_tilde"] = s.Omega_tilde;
  d["h2_margin"] = s.h2_margin;
  d["delta"] = s.delta;
  return d;
}

py::dict point_dict(const ReducedActionPoint& p) {
  py::dict d;
  d["phi0"] = p.phi0;
  d["S"] = p.S_value;
  d["grad"] = p.grad;
  d["contraction"] = p.range.contraction;
  d["iterations"] = p.range.iterations;
  d["converged"] = p.range.converged;
  d["residuals"] = p.range.residuals;
  d["orbit_json"] = orbit_json(p);
  return d;
}

}  // namespace

PYBIND11_MODULE(_blorbit, m) {
  m.doc() = "Birkhoff-Lewis periodic orbits at finite Galerkin truncation";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(PyExc_RuntimeError, (std::string("[") + e.tag() + "] " + e.what()).c_str());
    }
  });

  py::class_<Session>(m, "Session")
      .def(py::init<const std::string&>(), py::arg("config_json"))
      .def("frequencies",
           [](const Session& s) {
             const FrequencyTable f = frequencies(s.cfg.model, s.cfg.trunc);
             return py::make_tuple(f.omega, f.Omega);
           })
      .def_property_readonly("A", [](const Session& s) { return s.form.A; })
      .def_property_readonly("B", [](const Session& s) { return s.form.B; })
      .def("normal_form_json", [](const Session& s) { return normal_form_json(s.form); })
      .def("audit",
           [](const Session& s) {
             py::list rows;
             for (const auto& r : audit_normal_form(s.form)) {
               py::dict d;
               d["order"] = r.order;
               d["terms"] = r.terms;
               d["offending"] = r.offending;
               d["ratio"] = r.ratio();
               rows.append(d);
             }
             return rows;
           })
      .def("select_torus", [](const Session& s) { return selection_dict(select_torus(s.resonance(), selection_options(s.cfg))); })
      .def("solve",
           [](Session& s, const Eigen::VectorXd& phi0) {
             if (phi0.size() != s.cfg.trunc.n) throw Error(tags::kConfig, "phi0 needs n values");
             py::gil_scoped_release release;
             ReducedActionPoint p = reduced_action(phi0, s.range(), contraction_config(s.cfg));
             py::gil_scoped_acquire acquire;
             return point_dict(p);
           },
           py::arg("phi0"))
      .def("kernel_solve",
           [](Session& s) {
             KernelResult r;
             {
               py::gil_scoped_release release;
               r = find_critical_points(s.range(), kernel_options(s.cfg));
             }
             py::list pts;
             for (const auto& p : r.points) pts.append(point_dict(p));
             return py::make_tuple(pts, r.clusters);
           })
      .def("verify",
           [](Session& s, const std::string& orbit) {
             const ReducedActionPoint p = orbit_from_json(orbit);
             std::string js;
             {
               py::gil_scoped_release release;
               const OriginalSystem sys(s.cfg.model, s.cfg.trunc);
               const CoordinateMap map(s.form);
               js = report_json(verify_orbit(p, s.range(), map, sys, verify_options(s.cfg)));
             }
             return js;
           },
           py::arg("orbit_json"));

  m.def(
      "run_pipeline",
      [](const std::string& config_json) {
        const Config cfg = parse_config(config_json);
        py::gil_scoped_release release;
        return pipeline_json(run_pipeline(cfg));
      },
      py::arg("config_json"));
}
