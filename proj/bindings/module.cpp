#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ntkforge/ansatz.hpp"
#include "ntkforge/dataset.hpp"
#include "ntkforge/kernel.hpp"
#include "ntkforge/net.hpp"
#include "ntkforge/synthesis.hpp"

namespace py = pybind11;
using namespace ntkforge;

namespace {

KernelTarget target_from_string(const std::string& s) {
  if (s == "ntk") return KernelTarget::NTK;
  if (s == "nngp") return KernelTarget::NNGP;
  throw std::invalid_argument("target must be 'ntk' or 'nngp'");
}

SignPolicy signs_from_any(const py::object& obj) {
  if (obj.is_none()) return SignPolicy::all_positive();
  if (py::isinstance<py::str>(obj)) {
    const std::string s = obj.cast<std::string>();
    if (s == "all_positive") return SignPolicy::all_positive();
    if (s == "flip_h2_h3") return SignPolicy::flip_h2_h3();
    throw std::invalid_argument("unknown sign policy: " + s);
  }
  return SignPolicy::explicit_signs(obj.cast<std::vector<int>>());
}

std::vector<LayerScales> scales_from_pairs(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<LayerScales> scales;
  scales.reserve(pairs.size());
  for (const auto& [w, b] : pairs) scales.push_back({w, b});
  return scales;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Reverse-engineering toolkit for dot-product kernels: Hermite analysis, "
      "analytic NNGP/NTK kernels, activation synthesis, and finite-width checks";

  // ----- hermite -----
  py::class_<hermite::HermiteSeries>(m, "HermiteSeries")
      .def(py::init<std::vector<double>>(), py::arg("coeffs"))
      .def_readwrite("coeffs", &hermite::HermiteSeries::coeffs)
      .def("__call__",
           [](const hermite::HermiteSeries& s, double z) { return hermite::series_eval(s, z); })
      .def("derivative", &hermite::series_derivative)
      .def("__repr__", [](const hermite::HermiteSeries& s) {
        std::string r = "HermiteSeries([";
        for (size_t i = 0; i < s.coeffs.size(); ++i) {
          if (i) r += ", ";
          r += std::to_string(s.coeffs[i]);
        }
        return r + "])";
      });

  m.def("hermite_eval", &hermite::eval, py::arg("k"), py::arg("z"),
        "normalized probabilist's Hermite polynomial h_k(z)");
  m.def("hermite_monomial_coeffs", &hermite::monomial_coeffs, py::arg("k"));
  m.def(
      "hermite_decompose",
      [](const std::function<double(double)>& f, int order, int quad_points) {
        return hermite::decompose(f, order, quad_points);
      },
      py::arg("f"), py::arg("order"), py::arg("quad_points") = 0,
      "Hermite coefficients of f under the standard Gaussian via Gauss-Hermite quadrature");

  // ----- activations -----
  py::class_<AnsatzParams>(m, "AnsatzParams")
      .def(py::init([](double alpha, double beta, double gamma, double delta, double epsilon,
                       double zeta, double eta) {
             return AnsatzParams{alpha, beta, gamma, delta, epsilon, zeta, eta};
           }),
           py::arg("alpha") = 0.0, py::arg("beta") = 0.0, py::arg("gamma") = 0.0,
           py::arg("delta") = 0.0, py::arg("epsilon") = 0.0, py::arg("zeta") = 0.0,
           py::arg("eta") = 0.0)
      .def_readwrite("alpha", &AnsatzParams::alpha)
      .def_readwrite("beta", &AnsatzParams::beta)
      .def_readwrite("gamma", &AnsatzParams::gamma)
      .def_readwrite("delta", &AnsatzParams::delta)
      .def_readwrite("epsilon", &AnsatzParams::epsilon)
      .def_readwrite("zeta", &AnsatzParams::zeta)
      .def_readwrite("eta", &AnsatzParams::eta)
      .def("__call__", &ansatz_value)
      .def("deriv", &ansatz_deriv);

  py::class_<ActivationSpec>(m, "Activation")
      .def_static(
          "hermite",
          [](std::vector<double> coeffs, double prefactor) {
            return ActivationSpec::hermite_series(hermite::HermiteSeries{std::move(coeffs)},
                                                  prefactor);
          },
          py::arg("coeffs"), py::arg("prefactor") = 1.0)
      .def_static(
          "named",
          [](const std::string& name, double a, double prefactor) {
            return ActivationSpec::named(named_activation_from_string(name), a, prefactor);
          },
          py::arg("name"), py::arg("a") = 1.0, py::arg("prefactor") = 1.0)
      .def_static("ansatz", &ActivationSpec::ansatz, py::arg("params"),
                  py::arg("prefactor") = 1.0)
      .def("__call__", &ActivationSpec::value)
      .def("deriv", &ActivationSpec::deriv);

  // ----- kernels -----
  m.def(
      "check_psd",
      [](const std::vector<double>& series, double tol) {
        const PsdCheck r = check_psd(series, tol);
        return py::make_tuple(r.ok, r.violating_index);
      },
      py::arg("series"), py::arg("tol") = 1e-12,
      "(ok, first_violating_index) for the nonnegative-coefficient condition");
  m.def("tau_series",
        [](const std::vector<double>& coeffs, double c) {
          return tau_series(hermite::HermiteSeries{coeffs}, c);
        });
  m.def(
      "tau_quadrature",
      [](const std::function<double(double)>& f, double c, double sigma2, int q) {
        return tau_quadrature(f, c, sigma2, q);
      },
      py::arg("f"), py::arg("c"), py::arg("sigma2") = 1.0, py::arg("q") = 100);
  m.def(
      "tau_closed_form",
      [](const std::string& name, double a, double c) {
        return tau_closed_form(named_activation_from_string(name), a, c);
      },
      py::arg("name"), py::arg("a"), py::arg("c"));
  m.def(
      "ntk_closed_form",
      [](const std::string& name, double a, double c) {
        return ntk_closed_form(named_activation_from_string(name), a, c);
      },
      py::arg("name"), py::arg("a"), py::arg("c"));
  m.def(
      "tau",
      [](const ActivationSpec& act, double c, double sigma2) { return tau_of(act, c, sigma2); },
      py::arg("activation"), py::arg("c"), py::arg("sigma2") = 1.0);
  m.def(
      "tau_deriv",
      [](const ActivationSpec& act, double c, double sigma2) {
        return tau_deriv_of(act, c, sigma2);
      },
      py::arg("activation"), py::arg("c"), py::arg("sigma2") = 1.0);
  m.def(
      "nngp_1hl",
      [](const ActivationSpec& act, double c, double sigma_w, double sigma_b) {
        return nngp_1hl(act, {sigma_w, sigma_b}, c);
      },
      py::arg("activation"), py::arg("c"), py::arg("sigma_w") = 1.0, py::arg("sigma_b") = 0.0);
  m.def(
      "ntk_1hl",
      [](const ActivationSpec& act, double c, double sigma_w, double sigma_b) {
        return ntk_1hl(act, {sigma_w, sigma_b}, c);
      },
      py::arg("activation"), py::arg("c"), py::arg("sigma_w") = 1.0, py::arg("sigma_b") = 0.0);
  m.def(
      "deep_kernels",
      [](const ActivationSpec& act, const std::vector<std::pair<double, double>>& scales,
         const std::vector<double>& cs) {
        std::vector<double> nngp, ntk;
        deep_kernels_grid(act, scales_from_pairs(scales), static_cast<int>(scales.size()) - 1, cs,
                          nngp, ntk);
        return py::make_tuple(nngp, ntk);
      },
      py::arg("activation"), py::arg("scales"), py::arg("cs"),
      "(nngp, ntk) of the layerwise recursion; scales = [(sigma_w, sigma_b)] per weight layer");
  m.def("nngp_series_1hl", [](const std::vector<double>& b) {
    return nngp_series_1hl(hermite::HermiteSeries{b});
  });
  m.def("ntk_series_1hl", [](const std::vector<double>& b) {
    return ntk_series_1hl(hermite::HermiteSeries{b});
  });

  // ----- synthesis -----
  m.def(
      "synthesize_activation",
      [](const std::vector<double>& series, const std::string& target, const py::object& signs) {
        return synthesize_activation(series, target_from_string(target), signs_from_any(signs))
            .coeffs;
      },
      py::arg("kernel_series"), py::arg("target") = "ntk", py::arg("signs") = py::none(),
      "Hermite coefficients whose exact 1HL kernel reproduces the series");
  m.def(
      "fit_polynomial",
      [](const std::function<double(double)>& kernel, int degree, double endpoint_weight,
         const std::vector<double>& grid) {
        FitConfig cfg;
        cfg.degree = degree;
        cfg.endpoint_weight_fraction = endpoint_weight;
        cfg.c_grid = grid;
        const FitResult r = fit_polynomial(kernel, cfg);
        return py::make_tuple(r.coeffs, r.residual);
      },
      py::arg("kernel"), py::arg("degree") = 5, py::arg("endpoint_weight") = 0.1,
      py::arg("grid") = std::vector<double>{});
  m.def(
      "clip_to_psd",
      [](const std::vector<double>& series, double tol) { return clip_to_psd(series, tol); },
      py::arg("series"), py::arg("tol") = 1e-8);

  // ----- datasets -----
  m.def(
      "parity_dataset",
      [](int n_bits) {
        const Dataset d = parity_dataset(n_bits);
        return py::make_tuple(d.inputs, d.targets);
      },
      py::arg("n_bits"));
  m.def(
      "synthetic_regression",
      [](int n, int dim, std::uint64_t seed) {
        const Dataset d = synthetic_regression(n, dim, seed);
        return py::make_tuple(d.inputs, d.targets);
      },
      py::arg("n"), py::arg("dim"), py::arg("seed") = 0);

  // ----- finite-width networks -----
  py::class_<NetworkState>(m, "Network")
      .def(py::init([](int input_dim, int output_dim, std::vector<int> hidden,
                       const std::vector<std::pair<double, double>>& scales,
                       const ActivationSpec& act, std::uint64_t seed) {
             NetworkConfig cfg;
             cfg.input_dim = input_dim;
             cfg.output_dim = output_dim;
             cfg.hidden_widths = std::move(hidden);
             cfg.scales = scales_from_pairs(scales);
             cfg.activation = act;
             cfg.seed = seed;
             return init(cfg);
           }),
           py::arg("input_dim"), py::arg("output_dim"), py::arg("hidden_widths"),
           py::arg("scales"), py::arg("activation"), py::arg("seed") = 0)
      .def("parameter_count", [](const NetworkState& s) { return s.cfg.parameter_count(); })
      .def(
          "forward",
          [](const NetworkState& s, const Eigen::MatrixXd& X, bool centered) {
            // X holds one sample per row
            Eigen::MatrixXd F = forward(s, X.transpose());
            if (centered) F -= forward(s, X.transpose(), nullptr, true, true);
            return Eigen::MatrixXd(F.transpose());
          },
          py::arg("X"), py::arg("centered") = false)
      .def(
          "empirical_ntk",
          [](const NetworkState& s, const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
             int output_index) {
            const Eigen::MatrixXd A = X1.transpose();
            const Eigen::MatrixXd B = X2.transpose();
            return empirical_ntk(s, A, B, output_index);
          },
          py::arg("X1"), py::arg("X2"), py::arg("output_index") = 0)
      .def(
          "train",
          [](NetworkState& s, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
             const py::object& Xt, const py::object& Yt, double lr, int max_epochs,
             double stop_mse, bool centered, const std::string& task) {
            Dataset tr;
            tr.inputs = X;
            tr.targets = Y;
            tr.kind = task == "one_hot" ? TaskKind::OneHot
                                        : (task == "signed" ? TaskKind::SignedScalar
                                                            : TaskKind::Regression);
            Dataset te;
            const bool have_test = !Xt.is_none() && !Yt.is_none();
            if (have_test) {
              te.inputs = Xt.cast<Eigen::MatrixXd>();
              te.targets = Yt.cast<Eigen::MatrixXd>();
              te.kind = tr.kind;
            }
            TrainOptions opts;
            opts.lr = lr;
            opts.max_epochs = max_epochs;
            opts.stop_mse = stop_mse;
            opts.centered = centered;
            const TrainRecord rec = train(s, tr, have_test ? &te : nullptr, opts);
            py::dict out;
            out["epochs"] = rec.epochs;
            out["train_mse"] = rec.train_mse;
            out["test_mse"] = rec.test_mse;
            out["train_acc"] = rec.train_acc;
            out["test_acc"] = rec.test_acc;
            out["stop_reason"] = rec.stop_reason;
            out["epochs_run"] = rec.epochs_run;
            return out;
          },
          py::arg("X"), py::arg("Y"), py::arg("X_test") = py::none(),
          py::arg("Y_test") = py::none(), py::arg("lr") = 0.1, py::arg("max_epochs") = 1000,
          py::arg("stop_mse") = 1e-3, py::arg("centered") = true, py::arg("task") = "regression");

  // ----- ansatz optimization -----
  m.def("ansatz_kernel", &ansatz_kernel, py::arg("params"), py::arg("c"));
  m.def(
      "nelder_mead",
      [](const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
         double tol, int max_iters) {
        NelderMeadConfig cfg;
        cfg.tol = tol;
        cfg.max_iters = max_iters;
        const NelderMeadResult r = nelder_mead(f, x0, cfg);
        return py::make_tuple(r.x, r.value, r.iters);
      },
      py::arg("f"), py::arg("x0"), py::arg("tol") = 1e-10, py::arg("max_iters") = 5000);
  m.def(
      "fit_mimic",
      [](const std::function<double(double)>& target, const std::vector<double>& grid,
         const AnsatzParams& x0, int max_iters) {
        KernelObjective obj;
        obj.target = target;
        obj.c_grid = grid;
        NelderMeadConfig cfg;
        cfg.max_iters = max_iters;
        const MimicFit fit = fit_mimic(obj, x0, cfg);
        return py::make_tuple(fit.params, fit.residual);
      },
      py::arg("target"), py::arg("grid") = std::vector<double>{},
      py::arg("x0") = AnsatzParams{1.0, 1.0, 0.1, 10.0, 1.0, 0.1, 1.0},
      py::arg("max_iters") = 5000);

  m.attr("__version__") = "0.1.0";
}
