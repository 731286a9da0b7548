#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <sstream>

#include "cavsync/cli.hpp"
#include "cavsync/config.hpp"
#include "cavsync/correlators.hpp"
#include "cavsync/counting.hpp"
#include "cavsync/scaling.hpp"
#include "cavsync/trajectories.hpp"
#include "cavsync/version.hpp"

namespace py = pybind11;
using namespace cavsync;

namespace {

GeneratorSpec pi_generator(const PhysicalParams& p) { return build_effective(p, PulseShape::square(derive(p).T_pi)); }

double window(const PhysicalParams& p, double t_final_gamma) {
  if (!(p.gamma.at(0) > 0.0)) throw ConfigError("gamma: must be positive");
  return t_final_gamma / p.gamma[0];
}

}  // namespace

PYBIND11_MODULE(_cavsync, m) {
  m.doc() = "Cavity-synchronized single-photon source simulator (internal units: rad/us, us)";
  m.attr("__version__") = kVersion;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());

  py::class_<PhysicalParams>(m, "PhysicalParams")
      .def(py::init<>())
      .def_readwrite("n_qubits", &PhysicalParams::n_qubits)
      .def_readwrite("omega_c", &PhysicalParams::omega_c)
      .def_readwrite("omega_d", &PhysicalParams::omega_d)
      .def_readwrite("Omega0", &PhysicalParams::Omega0)
      .def_readwrite("kappa", &PhysicalParams::kappa)
      .def_readwrite("g", &PhysicalParams::g)
      .def_readwrite("omega_q", &PhysicalParams::omega_q)
      .def_readwrite("gamma", &PhysicalParams::gamma)
      .def_readwrite("gamma_loss", &PhysicalParams::gamma_loss)
      .def_readwrite("gamma_phi", &PhysicalParams::gamma_phi)
      .def_readwrite("compensate", &PhysicalParams::compensate)
      .def("validate", &PhysicalParams::validate)
      .def("replicated", &PhysicalParams::replicated, py::arg("n"))
      .def("__repr__", [](const PhysicalParams& p) {
        return "<PhysicalParams n_qubits=" + std::to_string(p.n_qubits) + ">";
      });

  m.def("preset", [](const std::string& name, int n) {
    if (name.size() != 1) throw ConfigError("preset: expected one of A, B, C, D");
    return preset(name[0], n);
  }, py::arg("name"), py::arg("n_qubits") = 2);

  m.def("parse_config", [](const std::string& text) { return parse_config(text, "<string>").params(); },
        py::arg("text"), "Parse INI text (MHz units) into internal parameters.");
  m.def("load_config", [](const std::string& path) { return load_config(path).params(); }, py::arg("path"));

  m.def("derive", [](const PhysicalParams& p) {
    const DerivedParams d = derive(p);
    py::dict out;
    out["alpha_ss_abs"] = d.alpha_ss_abs;
    out["phi"] = d.phi;
    out["Omega_cm"] = d.Omega_cm;
    out["delta_cm"] = d.delta_cm;
    out["gamma_cm"] = d.gamma_cm;
    out["J_cm"] = d.J_cm;
    out["T_pi"] = d.T_pi;
    py::dict regime;
    for (const auto& c : validate_regime(p).checks) regime[py::str(c.name)] = py::make_tuple(c.value, c.pass);
    out["regime"] = regime;
    return out;
  }, py::arg("params"));

  m.def("count_photons", [](const PhysicalParams& p, int n_c, double t_final_gamma) {
    PhotonStats s;
    {
      py::gil_scoped_release release;
      s = read_stats(count_photons(pi_generator(p), CounterConfig{n_c, {}}, window(p, t_final_gamma)));
    }
    py::dict out;
    out["p_n"] = s.p_n;
    out["P1"] = s.mean_p1();
    out["PN"] = s.p_all_one;
    out["DN"] = p.n_qubits > 1 ? demux_error(s.p_all_one, std::pow(s.product_p1(), 1.0 / p.n_qubits), p.n_qubits) : 0.0;
    out["overflow"] = s.overflow;
    return out;
  }, py::arg("params"), py::arg("n_c") = 2, py::arg("t_final_gamma") = 15.0,
     "Counter-method photon statistics after a square pi pulse.");

  m.def("trajectories", [](const PhysicalParams& p, std::size_t M, std::uint64_t seed, int threads,
                           double t_final_gamma) {
    TrajectoryConfig cfg;
    cfg.M = M;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.t_f = window(p, t_final_gamma);
    EnsembleStats st;
    {
      py::gil_scoped_release release;
      st = run_ensemble(pi_generator(p), cfg).stats;
    }
    py::list p_n;
    for (const auto& per_qubit : st.p_n) {
      py::list row;
      for (const auto& e : per_qubit) row.append(py::make_tuple(e.value, e.stderr_));
      p_n.append(row);
    }
    py::dict out;
    out["p_n"] = p_n;
    out["PN"] = st.p_all.value;
    out["PN_stderr"] = st.p_all.stderr_;
    return out;
  }, py::arg("params"), py::arg("M") = 1000, py::arg("seed") = 1, py::arg("threads") = 1,
     py::arg("t_final_gamma") = 15.0);

  m.def("g2_zero", [](const PhysicalParams& p, const std::string& kind, int n_pulses, bool check) {
    const PulseTrainSpec train = default_train(p, n_pulses);
    G2Options opt;
    opt.check_convergence = check;
    G2Result r;
    {
      py::gil_scoped_release release;
      const GeneratorSpec gen = build_effective(p, train.schedule());
      if (kind == "hbt") r = g2_hbt_zero(gen, train, 0, opt);
      else if (kind == "hom") r = g2_hom_zero(gen, train, 0, 1, opt);
      else throw ConfigError("kind: expected 'hbt' or 'hom'");
    }
    py::dict out;
    out["value"] = r.value;
    out["numerator"] = r.numerator;
    out["denominator"] = r.denominator;
    out["convergence"] = r.convergence;
    out["max_imag"] = r.max_imag;
    return out;
  }, py::arg("params"), py::arg("kind") = "hbt", py::arg("n_pulses") = 1, py::arg("check_convergence") = true);

  m.def("dn_curve", [](const PhysicalParams& p, int n_max, int n_c, bool decoupled) {
    ScalingOptions opt;
    opt.n_c = n_c;
    opt.decoupled = decoupled;
    std::vector<DnPoint> pts;
    {
      py::gil_scoped_release release;
      pts = dn_curve(p, n_max, opt);
    }
    py::list out;
    for (const auto& pt : pts) out.append(py::make_tuple(pt.N, pt.P_N, pt.D_N));
    return out;
  }, py::arg("params"), py::arg("n_max") = 4, py::arg("n_c") = 1, py::arg("decoupled") = false,
     "List of (N, P_N, D_N).");

  m.def("fit_epsilon", [](const std::vector<std::pair<int, double>>& curve, double max_dn) {
    const FitResult f = fit_epsilon(curve, max_dn);
    py::dict out;
    out["epsilon"] = f.epsilon;
    out["used"] = f.used;
    out["residuals"] = f.residuals;
    out["valid"] = f.valid;
    return out;
  }, py::arg("curve"), py::arg("max_dn") = 0.1);

  m.def("epsilon_analytic", &epsilon_analytic, py::arg("params"), py::arg("prefactor") = 1.42);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<std::string> full{"cavsync"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : full) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Run the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
