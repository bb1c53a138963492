#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hybridswap/channel.hpp"
#include "hybridswap/config.hpp"
#include "hybridswap/entanglement.hpp"
#include "hybridswap/errors.hpp"
#include "hybridswap/fock.hpp"
#include "hybridswap/pipeline.hpp"
#include "hybridswap/postselection.hpp"
#include "hybridswap/state_prep.hpp"
#include "hybridswap/tomography.hpp"

namespace py = pybind11;
using namespace hybridswap;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict report_dict(const NegativityReport& r) {
  py::dict d;
  d["log_negativity"] = r.log_negativity;
  d["raw_log_negativity"] = r.raw_log_negativity;
  d["negativity"] = r.negativity;
  d["min_pt_eigenvalue"] = r.min_pt_eigenvalue;
  d["entangled"] = r.entangled;
  return d;
}

std::optional<Impurity> impurity_from(const std::optional<std::tuple<double, double, double>>& w) {
  if (!w) return std::nullopt;
  const auto [ideal, vacuum, multiphoton] = *w;
  return Impurity{ideal, vacuum, multiphoton, std::nullopt};
}

}  // namespace

PYBIND11_MODULE(hybridswap, m) {
  m.doc() = "Entanglement swapping between a split single photon and a continuous-variable teleporter";
  m.attr("__version__") = HYBRIDSWAP_VERSION;

  py::register_exception<InvariantViolation>(m, "InvariantViolation");
  py::register_exception<ConvergenceFailure>(m, "ConvergenceFailure");
  py::register_exception<ConfigError>(m, "ConfigError");

  py::class_<FockDensityMatrix>(m, "DensityMatrix")
      .def(py::init([](const std::vector<int>& cutoffs, const CMatrix& data) {
             return FockDensityMatrix(FockBasis(cutoffs), data);
           }),
           py::arg("cutoffs"), py::arg("data"))
      .def_property_readonly("data", [](const FockDensityMatrix& r) { return r.data(); })
      .def_property_readonly("cutoffs", [](const FockDensityMatrix& r) { return r.basis().cutoffs(); })
      .def_property_readonly("modes", &FockDensityMatrix::modes)
      .def("validate", [](const FockDensityMatrix& r) { r.validate(); })
      .def("mean_photon_number", [](const FockDensityMatrix& r, int mode) { return mean_photon_number(r, mode); })
      .def("to_json", [](const FockDensityMatrix& r) { return to_python(to_json(r)); })
      .def("__repr__", [](const FockDensityMatrix& r) {
        std::string s = "DensityMatrix(cutoffs=[";
        for (std::size_t i = 0; i < r.basis().cutoffs().size(); ++i) {
          s += (i ? ", " : "") + std::to_string(r.basis().cutoffs()[i]);
        }
        return s + "])";
      });

  py::class_<ChannelSpec>(m, "ChannelSpec")
      .def(py::init([](double r, std::optional<double> g, double pre_loss, double post_loss, double resource_loss) {
             return ChannelSpec{r, g.value_or(std::tanh(r)), pre_loss, post_loss, resource_loss};
           }),
           py::arg("r"), py::arg("g") = py::none(), py::arg("pre_loss") = 1.0, py::arg("post_loss") = 1.0,
           py::arg("resource_loss") = 1.0)
      .def_readwrite("r", &ChannelSpec::r)
      .def_readwrite("g", &ChannelSpec::g)
      .def_readwrite("pre_loss", &ChannelSpec::pre_loss)
      .def_readwrite("post_loss", &ChannelSpec::post_loss)
      .def_readwrite("resource_loss", &ChannelSpec::resource_loss)
      .def("params",
           [](const ChannelSpec& s) {
             const auto p = channel_params(s);
             py::dict d;
             d["amplitude_gain"] = p.amplitude_gain;
             d["added_noise"] = p.added_noise;
             d["eta"] = p.dilation.eta;
             d["G"] = p.dilation.G;
             return d;
           });

  m.def(
      "split_photon",
      [](double R, int cutoff, const std::optional<std::tuple<double, double, double>>& impurity) {
        return split_photon(SplitPhotonSpec{R, impurity_from(impurity), cutoff});
      },
      py::arg("R"), py::arg("cutoff") = 1, py::arg("impurity") = py::none(),
      "Split single photon; impurity = (ideal, vacuum, multiphoton) weights.");

  m.def("apply_channel", &apply_channel, py::arg("rho"), py::arg("mode"), py::arg("spec"));

  m.def(
      "log_negativity", [](const FockDensityMatrix& rho) { return report_dict(log_negativity(rho)); }, py::arg("rho"));

  m.def("gain_grid", &gain_grid, py::arg("lo") = 0.0, py::arg("hi") = 1.2, py::arg("points") = 21);

  m.def(
      "gain_scan",
      [](double R, const std::vector<double>& r_values, std::optional<std::vector<double>> g_values,
         const std::optional<std::tuple<double, double, double>>& impurity) {
        GainScanSpec spec;
        spec.source = SplitPhotonSpec{R, impurity_from(impurity)};
        spec.r_values = r_values;
        if (g_values) spec.g_values = *g_values;
        py::list out;
        for (const auto& row : gain_scan(spec)) out.append(py::make_tuple(row.r, row.g, row.report.log_negativity));
        return out;
      },
      py::arg("R"), py::arg("r_values"), py::arg("g_values") = py::none(), py::arg("impurity") = py::none(),
      "Rows (r, g, log_negativity), r slowest.");

  m.def(
      "summarize", [](const FockDensityMatrix& rho) { return to_python(to_json(summarize(rho))); }, py::arg("rho"),
      "Post-selection summary: P, x, y, S, E_ps, F_av and the purified state.");

  m.def(
      "sample_homodyne",
      [](const FockDensityMatrix& rho, std::size_t n, std::uint64_t seed, int phases, double phase_sum) {
        const auto data = sample_homodyne(rho, relative_phase_schedule(phases, phase_sum), n, seed);
        Eigen::MatrixXd out(static_cast<Eigen::Index>(data.samples.size()), 4);
        for (std::size_t i = 0; i < data.samples.size(); ++i) {
          const auto& s = data.samples[i];
          out.row(static_cast<Eigen::Index>(i)) << s.theta1, s.theta2, s.x1, s.x2;
        }
        return out;
      },
      py::arg("rho"), py::arg("n"), py::arg("seed"), py::arg("phases") = 12, py::arg("phase_sum") = 0.0,
      "Rows (theta1, theta2, x1, x2).");

  m.def(
      "mle_reconstruct",
      [](const Eigen::MatrixXd& samples, int cutoff, int max_iter, double tol) {
        if (samples.cols() != 4) throw std::invalid_argument("mle_reconstruct: samples need four columns");
        TomoDataset data;
        for (Eigen::Index i = 0; i < samples.rows(); ++i) {
          data.samples.push_back({samples(i, 0), samples(i, 1), samples(i, 2), samples(i, 3)});
        }
        MleOptions opt;
        opt.cutoff = cutoff;
        opt.max_iter = max_iter;
        opt.tol = tol;
        const auto res = mle_reconstruct(data, opt);
        return py::make_tuple(res.rho, to_python(to_json(res.diagnostics)));
      },
      py::arg("samples"), py::arg("cutoff") = 3, py::arg("max_iter") = 2000, py::arg("tol") = 1e-10);

  m.def("fidelity", py::overload_cast<const FockDensityMatrix&, const FockDensityMatrix&>(&fidelity));
  m.def("trace_distance", &trace_distance);

  m.def(
      "evaluate_model",
      [](double R, const std::optional<std::tuple<double, double, double>>& impurity, const ChannelSpec& channel) {
        return evaluate_model(SplitPhotonSpec{R, impurity_from(impurity)}, channel).values;
      },
      py::arg("R"), py::arg("impurity"), py::arg("channel"));

  m.def(
      "fit_losses",
      [](double R, const std::optional<std::tuple<double, double, double>>& impurity, double r, double g) {
        return to_python(to_json(fit_losses(SplitPhotonSpec{R, impurity_from(impurity)}, r, g, reference_table())));
      },
      py::arg("R"), py::arg("impurity"), py::arg("r"), py::arg("g"));

  m.def(
      "run",
      [](const std::string& experiment, const std::string& config, std::optional<std::uint64_t> seed,
         std::optional<std::string> out) {
        auto cfg = load_config(config);
        if (seed) cfg.seed = *seed;
        if (out) cfg.output = *out;
        const auto res = run(cfg, parse_experiment(experiment));
        return to_python(res.summary);
      },
      py::arg("experiment"), py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none(),
      "Runs an experiment from a YAML config file and returns its summary.");
}
