// Copyright 2026 The survint Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "survint/binary.hpp"
#include "survint/error.hpp"
#include "survint/pipeline.hpp"
#include "survint/posterior.hpp"
#include "survint/prediction.hpp"
#include "survint/simulation.hpp"
#include "survint/weights.hpp"

namespace py = pybind11;
using namespace survint;

namespace {

WeightedSample nps_sample(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& W) {
  return with_adjusted_weights(X, y, W);
}

py::dict summary_dict(const Summary& s) {
  py::dict d;
  d["pm"] = s.pm;
  d["psd"] = s.psd;
  d["pcv"] = s.pcv;
  d["nse"] = s.nse;
  d["hpd"] = py::make_tuple(s.hpd.lower, s.hpd.upper);
  d["draws"] = s.draws;
  return d;
}

ScenarioSpec scenario_spec(const std::string& scenario, std::size_t draws, std::size_t grid_size, std::uint64_t seed,
                           int threads) {
  ScenarioSpec spec;
  spec.kind = parse_scenario(scenario);
  spec.draws = draws;
  spec.grid_size = grid_size;
  spec.seed = seed;
  spec.threads = threads;
  return spec;
}

}  // namespace

PYBIND11_MODULE(_survint, m) {
  m.doc() = "Bayesian integration of probability and non-probability survey samples.";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

  m.def("effective_sample_size", [](const Eigen::VectorXd& W) { return effective_sample_size(W); }, py::arg("W"));
  m.def(
      "adjusted_weights", [](const Eigen::VectorXd& W) { return adjust_weights(W).w; }, py::arg("W"),
      "Weights rescaled to sum to the effective sample size.");

  m.def(
      "estimate_propensity",
      [](const Eigen::MatrixXd& Z1, const Eigen::MatrixXd& Z2, const Eigen::VectorXd& W2) {
        const PropensityFit fit = estimate_propensity(Z1, Z2, W2);
        py::dict d;
        d["theta"] = fit.theta;
        d["pi"] = fit.pi;
        d["weights"] = fit.W1;
        d["converged"] = fit.converged;
        d["iterations"] = fit.iterations;
        return d;
      },
      py::arg("Z1"), py::arg("Z2"), py::arg("W2"));

  m.def(
      "nps_weights",
      [](const Eigen::MatrixXd& Z1, const Eigen::MatrixXd& Z2, const Eigen::VectorXd& W2, bool winsorize,
         bool normalize) {
        NpsWeightOptions options;
        options.winsorize = winsorize;
        options.normalize = normalize;
        return estimate_nps_weights(Z1, Z2, W2, options).calibrated;
      },
      py::arg("Z1"), py::arg("Z2"), py::arg("W2"), py::arg("winsorize") = true, py::arg("normalize") = true);

  m.def(
      "fit",
      [](const Eigen::MatrixXd& X1, const Eigen::VectorXd& y1, const Eigen::VectorXd& W1, const Eigen::MatrixXd& X2,
         const Eigen::VectorXd& y2, const Eigen::VectorXd& W2, const std::string& scenario, std::size_t draws,
         std::size_t grid_size, std::uint64_t seed, int threads) {
        const WeightedSample nps = nps_sample(X1, y1, W1);
        const WeightedSample ps = with_adjusted_weights(X2, y2, W2);
        PosteriorDraws post;
        {
          py::gil_scoped_release release;
          post = fit_scenario(nps, ps, scenario_spec(scenario, draws, grid_size, seed, threads));
        }
        py::dict d;
        d["beta"] = post.beta;
        d["sigma2"] = post.sigma2;
        d["a"] = post.a;
        d["a_grid"] = post.a_grid;
        d["a_mass"] = post.a_mass;
        d["a_posterior_mean"] = post.a_posterior_mean;
        return d;
      },
      py::arg("X1"), py::arg("y1"), py::arg("W1"), py::arg("X2"), py::arg("y2"), py::arg("W2"),
      py::arg("scenario") = "C", py::arg("draws") = 10000, py::arg("grid_size") = 1000, py::arg("seed") = 1,
      py::arg("threads") = 1);

  m.def(
      "predict_mean",
      [](const Eigen::MatrixXd& X1, const Eigen::VectorXd& y1, const Eigen::VectorXd& W1, const Eigen::MatrixXd& X2,
         const Eigen::VectorXd& y2, const Eigen::VectorXd& W2, const std::string& scenario, std::size_t draws,
         std::size_t grid_size, std::uint64_t seed) {
        PreparedSamples prepared;
        prepared.nps = nps_sample(X1, y1, W1);
        prepared.ps = with_adjusted_weights(X2, y2, W2);
        std::vector<std::string> names(static_cast<std::size_t>(X2.cols()));
        prepared.facts = facts_from_design(X2, W2, names);
        ScenarioFit fit;
        {
          py::gil_scoped_release release;
          fit = fit_and_predict(prepared, scenario_spec(scenario, draws, grid_size, seed, 1), seed);
        }
        py::dict d = summary_dict(fit.mean.summary);
        d["samples"] = fit.mean.draws;
        return d;
      },
      py::arg("X1"), py::arg("y1"), py::arg("W1"), py::arg("X2"), py::arg("y2"), py::arg("W2"),
      py::arg("scenario") = "C", py::arg("draws") = 10000, py::arg("grid_size") = 1000, py::arg("seed") = 1,
      "Posterior of the finite-population mean; columns of X2 are the study covariates, intercept first.");

  m.def(
      "summarize", [](const Eigen::VectorXd& draws, double level) { return summary_dict(summarize(draws, level)); },
      py::arg("draws"), py::arg("level") = 0.95);

  m.def(
      "location_discount_mean",
      [](const Eigen::VectorXd& y1, const Eigen::VectorXd& y2, std::size_t grid_size) {
        return location_model_posterior(y1, y2, grid_size).a_mean();
      },
      py::arg("y1"), py::arg("y2"), py::arg("grid_size") = 1000);

  m.def(
      "binary_log_posterior",
      [](double a, const Eigen::VectorXd& beta, const Eigen::MatrixXd& X1, const Eigen::VectorXd& y1,
         const Eigen::VectorXd& W1, const Eigen::MatrixXd& X2, const Eigen::VectorXd& y2, const Eigen::VectorXd& W2) {
        return binary_log_posterior(a, beta, nps_sample(X1, y1, W1), with_adjusted_weights(X2, y2, W2));
      },
      py::arg("a"), py::arg("beta"), py::arg("X1"), py::arg("y1"), py::arg("W1"), py::arg("X2"), py::arg("y2"),
      py::arg("W2"));

  m.def(
      "generate_population",
      [](double rho, std::size_t N, std::size_t n1, std::size_t n2, std::uint64_t seed) {
        PopulationSpec spec;
        spec.rho = rho;
        spec.N = N;
        spec.n1 = n1;
        spec.n2 = n2;
        spec.seed = seed;
        const FinitePopulation pop = generate_population(spec);
        py::dict d;
        d["X"] = pop.X;
        d["y"] = pop.y;
        d["pi1"] = pop.pi1;
        d["pi2"] = pop.pi2;
        d["true_mean"] = pop.true_mean;
        d["correlation"] = pop.correlation;
        return d;
      },
      py::arg("rho") = 0.5, py::arg("N") = 20000, py::arg("n1") = 1500, py::arg("n2") = 300, py::arg("seed") = 1);

#ifdef SURVINT_VERSION
  m.attr("__version__") = SURVINT_VERSION;
#endif
}
