#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>

#include "jetqd/analytic.hpp"
#include "jetqd/dynamics.hpp"
#include "jetqd/ensemble.hpp"
#include "jetqd/errors.hpp"
#include "jetqd/jetstate.hpp"
#include "jetqd/measurement.hpp"
#include "jetqd/multiindex.hpp"
#include "jetqd/spin.hpp"
#include "jetqd/verify.hpp"

namespace py = pybind11;
using namespace jetqd;

namespace {

py::object from_json(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::array_t<double> matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size(), m = rows.empty() ? 0 : rows.front().size();
  py::array_t<double> out({n, m});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) a(i, j) = rows[i][j];
  }
  return out;
}

py::dict trajectory(const AnalyticState& psi, std::vector<double> q0, int truncation, double t_final,
                    const std::string& closure, double record_dt, double tol) {
  if (closure != "zero" && closure != "oracle") throw ConfigError("closure must be 'zero' or 'oracle'");
  const Model model{psi.physics(), psi.potential(),
                    closure == "oracle" ? Closure::from_oracle(std::make_shared<AnalyticOracle>(psi)) : Closure::zero()};
  IntegrateSettings cfg;
  cfg.t_final = t_final;
  cfg.record_dt = record_dt;
  cfg.tol = tol;
  const auto rec = integrate(from_wavefunction_analytic(psi, q0, 0.0, truncation), model, cfg);
  py::dict p;
  for (std::size_t k = 0; k < rec.retained.size(); ++k) {
    py::array_t<cplx> col(static_cast<py::ssize_t>(rec.t.size()));
    auto c = col.mutable_unchecked<1>();
    for (std::size_t i = 0; i < rec.t.size(); ++i) c(static_cast<py::ssize_t>(i)) = rec.p[i][k];
    p[py::str(rec.retained[k].name())] = col;
  }
  py::dict out;
  out["t"] = py::array_t<double>(static_cast<py::ssize_t>(rec.t.size()), rec.t.data());
  out["q"] = matrix(rec.q);
  out["v"] = matrix(rec.v);
  out["p"] = p;
  out["steps"] = rec.diagnostics.steps;
  return out;
}

py::dict ensemble_run(const AnalyticState& psi, std::size_t count, double t_final, std::uint64_t seed, double tol) {
  const Ensemble start = sample_density(psi, 0.0, count, seed);
  AdvectSettings adv;
  adv.tol = tol;
  const Ensemble end = advect(start, AnalyticVelocity(psi), t_final, adv);
  const auto report = equivariance_test(end, TabulatedDensity::from_analytic(psi, t_final), 0.02);
  const auto dim = static_cast<py::ssize_t>(psi.dim());
  const auto n = static_cast<py::ssize_t>(count);
  py::dict out;
  out["initial"] = py::array_t<double>({n, dim}, start.x.data());
  out["final"] = py::array_t<double>({n, dim}, end.x.data());
  out["excluded"] = py::array_t<std::uint8_t>(n, end.excluded.data());
  out["equivariance"] = from_json(report.to_json());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Jet-space quantum dynamics: momentum hierarchies, Bohmian ensembles, measurement and spin";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Physics>(m, "Physics")
      .def(py::init([](double hbar, std::vector<double> mass) { return Physics{hbar, std::move(mass)}; }),
           py::arg("hbar") = 1.0, py::arg("mass") = std::vector<double>{1.0})
      .def_readwrite("hbar", &Physics::hbar)
      .def_readwrite("mass", &Physics::mass)
      .def_property_readonly("dim", &Physics::dim);

  py::class_<AnalyticState>(m, "AnalyticState")
      .def_static("free_gaussian", &AnalyticState::free_gaussian, py::arg("physics"), py::arg("a"), py::arg("k0"),
                  py::arg("x0"))
      .def_static("coherent", &AnalyticState::coherent, py::arg("physics"), py::arg("omega"), py::arg("alpha"))
      .def_property_readonly("dim", &AnalyticState::dim)
      .def_property_readonly("kind", &AnalyticState::kind_name)
      .def("psi", [](const AnalyticState& s, std::vector<double> x, double t) { return s.psi(x, t); }, py::arg("x"),
           py::arg("t") = 0.0)
      .def("density", [](const AnalyticState& s, std::vector<double> x, double t) { return s.density(x, t); },
           py::arg("x"), py::arg("t") = 0.0)
      .def("velocity", [](const AnalyticState& s, std::vector<double> x, double t) { return s.velocity(x, t); },
           py::arg("x"), py::arg("t") = 0.0);

  m.def("trajectory", &trajectory, "Integrates one jet trajectory; p holds the retained momentums by multi-index.",
        py::arg("state"), py::arg("q0"), py::arg("truncation") = 4, py::arg("t_final") = 1.0,
        py::arg("closure") = "zero", py::arg("record_dt") = 0.0, py::arg("tol") = 1e-9);
  m.def("ensemble", &ensemble_run, "Samples |psi|^2, advects the points and tests equivariance at t_final.",
        py::arg("state"), py::arg("count"), py::arg("t_final"), py::arg("seed") = 1, py::arg("tol") = 1e-8);
  m.def(
      "double_slit",
      [](bool detectors, std::size_t count, std::uint64_t seed, double separation, double t_screen) {
        DoubleSlitSetup s;
        s.detectors = detectors;
        s.count = count;
        s.seed = seed;
        s.separation = separation;
        s.t_screen = t_screen;
        s.validate();
        const auto res = double_slit(s);
        py::dict out = from_json(res.to_json()).cast<py::dict>();
        out["edges"] = res.edges;
        out["counts"] = res.counts;
        return out;
      },
      py::arg("detectors") = false, py::arg("count") = 20000, py::arg("seed") = 1, py::arg("separation") = 10.0,
      py::arg("t_screen") = 20.0);

  py::class_<Spinor>(m, "Spinor")
      .def(py::init([](cplx u, cplx v) { return Spinor{u, v}; }), py::arg("u") = cplx{1.0, 0.0},
           py::arg("v") = cplx{0.0, 0.0})
      .def_static("from_euler", &Spinor::from_euler, py::arg("chi"), py::arg("theta"), py::arg("phi"))
      .def_readwrite("u", &Spinor::u)
      .def_readwrite("v", &Spinor::v)
      .def("euler", &Spinor::euler)
      .def("norm", &Spinor::norm)
      .def("spin_vector", &Spinor::spin_vector);
  m.def(
      "precess",
      [](const Spinor& sp, Vec3 field, double t_final, double gamma, double hbar, double dt) {
        PrecessSettings st;
        st.gamma = gamma;
        st.hbar = hbar;
        st.dt = dt;
        const auto tr = precess(sp, constant_field(field), t_final, st);
        py::array_t<cplx> uv({static_cast<py::ssize_t>(tr.t.size()), py::ssize_t{2}});
        auto a = uv.mutable_unchecked<2>();
        for (std::size_t i = 0; i < tr.t.size(); ++i) {
          a(static_cast<py::ssize_t>(i), 0) = tr.spinors[i].u;
          a(static_cast<py::ssize_t>(i), 1) = tr.spinors[i].v;
        }
        py::dict out;
        out["t"] = py::array_t<double>(static_cast<py::ssize_t>(tr.t.size()), tr.t.data());
        out["uv"] = uv;
        out["max_norm_drift_per_step"] = tr.max_norm_drift_per_step;
        return out;
      },
      "Precesses a spinor in a constant field with rk4.", py::arg("spinor"), py::arg("field"), py::arg("t_final"),
      py::arg("gamma") = 1.0, py::arg("hbar") = 1.0, py::arg("dt") = 1e-3);
  m.def(
      "spin_check", [](double turns, double dt) {
        SpinCheckSettings st;
        st.turns = turns;
        st.dt = dt;
        return from_json(spin_check(st).to_json());
      },
      py::arg("turns") = 10.0, py::arg("dt") = 1e-4);

  m.def("criteria", [] {
    py::list out;
    for (const auto& c : criteria()) out.append(py::make_tuple(c.id, c.name, c.statement));
    return out;
  });
  m.def(
      "run_criterion",
      [](int id, std::uint64_t seed) {
        VerifyOptions o;
        o.seed = seed;
        return from_json(run_criterion(id, o).to_json());
      },
      py::arg("id"), py::arg("seed") = 1);
}
