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

// Command-line front end: weights, fit, fit-binary, predict, bootstrap,
// simulate and report. Every run writes manifest_<subcommand>.json next to
// its outputs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "survint/binary.hpp"
#include "survint/bootstrap.hpp"
#include "survint/csv.hpp"
#include "survint/dataset.hpp"
#include "survint/error.hpp"
#include "survint/pipeline.hpp"
#include "survint/posterior.hpp"
#include "survint/prediction.hpp"
#include "survint/report.hpp"
#include "survint/simulation.hpp"
#include "survint/weights.hpp"

#ifndef SURVINT_VERSION
#define SURVINT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace survint;

namespace {

struct CommonOptions {
  std::string out_dir = ".";
  int threads = 1;
  std::uint64_t seed = 1;
};

struct DataOptions {
  std::string nps_path;
  std::string ps_path;
  std::string response = "y";
  std::vector<std::string> covariates;
  std::vector<std::string> participation;
  std::string ps_weight = "weight";
  std::string nps_weight;
  std::vector<std::string> bin_columns;
  double bin_width = 5.0;
  bool standardize = false;
};

struct WeightFlags {
  bool no_winsorize = false;
  double lower = 1.0;
  double upper_quantile = 0.99;
  bool no_normalize = false;
  bool no_clamp_negative = false;
  std::string totals_path;
};

struct ScenarioFlags {
  std::string scenario;
  std::size_t draws = 10000;
  std::size_t grid_size = 1000;
  double a_min = 0.0;
  double a_max = 1.0;
};

// Records written files for the manifest.
class RunContext {
 public:
  RunContext(std::string subcommand, const CommonOptions& common, const CLI::App& app, std::string label = "")
      : subcommand_(std::move(subcommand)), label_(std::move(label)), common_(common), app_(app) {
    fs::create_directories(out_dir());
  }

  [[nodiscard]] fs::path out_dir() const { return fs::path(common_.out_dir); }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path path = out_dir() / name;
    {
      std::ofstream out(path, std::ios::binary);
      if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
      }
      body(out);
    }
    artifacts_.push_back(name);
  }

  void write_json(const std::string& name, const json& j) {
    write(name, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  }

  void finish() {
    json manifest;
    manifest["tool"] = "survint";
    manifest["subcommand"] = subcommand_;
    manifest["config"] = root_config();
    json artifacts = json::object();
    for (const auto& name : artifacts_) {
      artifacts[name] = {{"fnv1a64", hash_file(out_dir() / name)}};
    }
    manifest["artifacts"] = artifacts;
    manifest["versions"] = {{"survint", SURVINT_VERSION},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                          std::to_string(EIGEN_MINOR_VERSION)},
                            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                            {"cli11", CLI11_VERSION},
                            {"compiler", __VERSION__}};
    const std::string suffix = label_.empty() ? "" : "_" + label_;
    std::ofstream out(out_dir() / ("manifest_" + subcommand_ + suffix + ".json"), std::ios::binary);
    out << manifest.dump(2) << '\n';
  }

 private:
  // Global options followed by the options of the parsed subcommand.
  [[nodiscard]] std::string root_config() const {
    std::ostringstream cfg;
    cfg << "out=\"" << common_.out_dir << "\"\nthreads=" << common_.threads << "\nseed=" << common_.seed << '\n';
    cfg << '[' << subcommand_ << "]\n";
    // Unset optional values are dropped so the echo can be fed back through --config.
    std::istringstream lines(app_.config_to_str(true, false));
    for (std::string line; std::getline(lines, line);) {
      if (line.size() < 3 || line.compare(line.size() - 3, 3, "=\"\"") != 0) {
        cfg << line << '\n';
      }
    }
    return cfg.str();
  }

  std::string subcommand_;
  std::string label_;
  CommonOptions common_;
  const CLI::App& app_;
  std::vector<std::string> artifacts_;
};

std::vector<std::string> with_intercept(const std::vector<std::string>& cols) {
  std::vector<std::string> out{kInterceptName};
  out.insert(out.end(), cols.begin(), cols.end());
  return out;
}

std::vector<std::string> union_of(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  for (const auto& x : b) {
    if (std::find(out.begin(), out.end(), x) == out.end()) {
      out.push_back(x);
    }
  }
  return out;
}

struct LoadedData {
  TwoSampleData data;
  std::optional<Eigen::VectorXd> nps_weights;
};

LoadedData load_two_samples(const DataOptions& opt, bool binary) {
  if (opt.covariates.empty()) {
    throw UsageError("--covariates is required");
  }
  CovariateSets sets{opt.participation.empty() ? opt.covariates : opt.participation, opt.covariates};
  validate_covariate_sets(sets, opt.response);
  const auto all = union_of(sets.participation, sets.study);

  SampleSchema nps_schema{opt.response, all, std::nullopt, true, binary};
  if (!opt.nps_weight.empty()) {
    nps_schema.weight = opt.nps_weight;
  }
  SampleSchema ps_schema{opt.response, all, opt.ps_weight, true, binary};
  SurveySample nps = load_sample(opt.nps_path, nps_schema, SampleRole::nps);
  SurveySample ps = load_sample(opt.ps_path, ps_schema, SampleRole::ps);
  for (const auto& col : opt.bin_columns) {
    const Eigen::Index j = nps.column_index(col);
    nps.X.col(j) = bin_covariate(nps.X.col(j), opt.bin_width);
    ps.X.col(ps.column_index(col)) = bin_covariate(ps.X.col(ps.column_index(col)), opt.bin_width);
  }
  if (opt.standardize) {
    standardize_jointly(nps, ps);
  }
  LoadedData out;
  out.data.X1 = nps.columns(with_intercept(sets.study));
  out.data.Z1 = nps.columns(with_intercept(sets.participation));
  out.data.y1 = nps.y;
  out.data.X2 = ps.columns(with_intercept(sets.study));
  out.data.Z2 = ps.columns(with_intercept(sets.participation));
  out.data.y2 = ps.y;
  out.data.W2 = *ps.W;
  out.data.names = with_intercept(sets.study);
  out.data.validate();
  out.nps_weights = nps.W;
  return out;
}

NpsWeightOptions weight_options(const WeightFlags& flags, Eigen::Index participation_cols) {
  NpsWeightOptions opt;
  opt.winsorize = !flags.no_winsorize;
  opt.lower = flags.lower;
  opt.upper_quantile = flags.upper_quantile;
  opt.normalize = !flags.no_normalize;
  opt.calibration.clamp_negative = !flags.no_clamp_negative;
  if (!flags.totals_path.empty()) {
    std::ifstream in(flags.totals_path);
    if (!in) {
      throw DataError("cannot open '" + flags.totals_path + "'");
    }
    json j;
    try {
      in >> j;
      const auto totals = j.at("totals").get<std::vector<double>>();
      opt.totals = Eigen::Map<const Eigen::VectorXd>(totals.data(), static_cast<Eigen::Index>(totals.size()));
    } catch (const json::exception& e) {
      throw DataError(flags.totals_path + ": " + e.what());
    }
    if (opt.totals->size() != participation_cols) {
      throw DataError(flags.totals_path + ": expected " + std::to_string(participation_cols) +
                      " totals (intercept first)");
    }
  }
  return opt;
}

PreparedSamples prepare(const LoadedData& loaded, const WeightFlags& flags, bool need_nps) {
  if (need_nps && loaded.nps_weights) {
    PreparedSamples out = prepare_samples(loaded.data, {}, false);
    out.nps = with_adjusted_weights(loaded.data.X1, loaded.data.y1, *loaded.nps_weights);
    NpsWeights supplied;
    supplied.raw = *loaded.nps_weights;
    supplied.winsorized = supplied.raw;
    supplied.calibrated = supplied.raw;
    out.weights = supplied;
    return out;
  }
  return prepare_samples(loaded.data, weight_options(flags, loaded.data.Z1.cols()), need_nps);
}

ScenarioSpec scenario_spec(const ScenarioFlags& flags, const CommonOptions& common) {
  ScenarioSpec spec;
  spec.kind = parse_scenario(flags.scenario);
  spec.draws = flags.draws;
  spec.grid_size = flags.grid_size;
  spec.a_min = flags.a_min;
  spec.a_max = flags.a_max;
  spec.seed = common.seed;
  spec.threads = common.threads;
  return spec;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void add_data_options(CLI::App* app, DataOptions& opt, bool require_samples = true) {
  auto* nps = app->add_option("--nps", opt.nps_path, "Nonprobability sample CSV")->check(CLI::ExistingFile);
  auto* ps = app->add_option("--ps", opt.ps_path, "Probability sample CSV")->check(CLI::ExistingFile);
  if (require_samples) {
    nps->required();
    ps->required();
  }
  app->add_option("--response", opt.response, "Response column")->capture_default_str();
  app->add_option("--covariates", opt.covariates, "Study covariate columns")->delimiter(',');
  app->add_option("--participation", opt.participation, "Participation covariate columns (default: --covariates)")
      ->delimiter(',');
  app->add_option("--ps-weight", opt.ps_weight, "Design-weight column of the ps")->capture_default_str();
  app->add_option("--nps-weight", opt.nps_weight, "Pre-estimated nps weight column (skips propensity estimation)");
  app->add_flag("--standardize", opt.standardize, "Center and scale covariates over both samples");
}

void add_weight_options(CLI::App* app, WeightFlags& flags) {
  app->add_flag("--no-winsorize", flags.no_winsorize, "Keep the raw nps weights");
  app->add_option("--lower-clamp", flags.lower, "Lower winsorizing bound")->capture_default_str();
  app->add_option("--upper-quantile", flags.upper_quantile, "Upper winsorizing quantile")->capture_default_str();
  app->add_flag("--no-clamp-negative", flags.no_clamp_negative, "Keep negative calibrated weights");
  app->add_flag("--no-normalize", flags.no_normalize, "Do not rescale nps weights to the estimated N");
  app->add_option("--calibrate-totals", flags.totals_path, "JSON file {\"totals\": [...]} for calibration")
      ->check(CLI::ExistingFile);
}

void add_scenario_options(CLI::App* app, ScenarioFlags& flags, bool required) {
  auto* s = app->add_option("--scenario", flags.scenario, "Scenario: B, C, D, E or G");
  if (required) {
    s->required();
  }
  app->add_option("--draws", flags.draws, "Posterior draws")->capture_default_str();
  app->add_option("--grid-size", flags.grid_size, "Grid points for the discount factor")->capture_default_str();
  app->add_option("--a-min", flags.a_min, "Lower end of the discount range")->capture_default_str();
  app->add_option("--a-max", flags.a_max, "Upper end of the discount range")->capture_default_str();
}

std::string model_from_path(const fs::path& path) {
  const std::string stem = path.stem().string();
  const std::string prefix = "draws_";
  return stem.rfind(prefix, 0) == 0 ? stem.substr(prefix.size()) : stem;
}

// --- subcommands ---------------------------------------------------------

void run_weights(const CLI::App& app, const CommonOptions& common, const DataOptions& data, const WeightFlags& wf) {
  RunContext ctx("weights", common, app);
  const LoadedData loaded = load_two_samples(data, false);
  const PreparedSamples prepared = prepare_samples(loaded.data, weight_options(wf, loaded.data.Z1.cols()), true);
  const NpsWeights& w = *prepared.weights;
  ctx.write("nps_weights.csv", [&](std::ostream& out) {
    write_csv_row(out, {"row_id", "pi", "W1_raw", "W1_winsorized", "W1_calibrated"});
    for (Eigen::Index i = 0; i < w.raw.size(); ++i) {
      write_csv_row(out, {std::to_string(i + 1), format_double(w.fit.pi[i]), format_double(w.raw[i]),
                          format_double(w.winsorized[i]), format_double(w.calibrated[i])});
    }
  });
  json prop;
  prop["theta"] = vector_json(w.fit.theta);
  prop["names"] = with_intercept(data.participation.empty() ? data.covariates : data.participation);
  prop["converged"] = w.fit.converged;
  prop["iterations"] = w.fit.iterations;
  prop["gradient_norm"] = w.fit.final_gradient_norm;
  prop["used_fallback"] = w.fit.used_fallback;
  prop["effective_sample_size"] = effective_sample_size(w.calibrated);
  if (w.calibration) {
    prop["calibration_residual"] = vector_json(w.calibration->residual);
    prop["calibration_negative_count"] = w.calibration->negative_count;
  }
  ctx.write_json("propensity.json", prop);
  ctx.write_json("facts.json", facts_to_json(prepared.facts));
  ctx.finish();
}

void run_fit(const CLI::App& app, const CommonOptions& common, const DataOptions& data, const WeightFlags& wf,
             const ScenarioFlags& sf) {
  const ScenarioSpec spec = scenario_spec(sf, common);
  RunContext ctx("fit", common, app, std::string(1, scenario_letter(spec.kind)));
  const LoadedData loaded = load_two_samples(data, false);
  const PreparedSamples prepared = prepare(loaded, wf, needs_nps_weights(spec.kind));
  const IntegratedSufficients suff = scenario_sufficients(prepared.nps, prepared.ps, spec);
  const PosteriorDraws post = sample_posterior(suff, spec);
  const std::string letter(1, scenario_letter(spec.kind));
  ctx.write("draws_" + letter + ".csv", [&](std::ostream& out) { write_draws_csv(out, post); });
  json summary;
  summary["scenario"] = letter;
  summary["names"] = loaded.data.names;
  summary["n_total"] = suff.n_total;
  summary["p"] = suff.p;
  summary["dof"] = suff.dof();
  summary["draws"] = spec.draws;
  summary["beta_mean"] = vector_json(post.beta.colwise().mean().transpose());
  summary["sigma2_mean"] = post.sigma2.mean();
  summary["a_posterior_mean"] = post.a_posterior_mean;
  summary["a_prior_overlap"] = post.a_prior_overlap;
  ctx.write_json("posterior_" + letter + ".json", summary);
  ctx.write_json("facts.json", facts_to_json(prepared.facts));
  if (has_discount(spec.kind)) {
    ctx.write("a_posterior_" + letter + ".csv", [&](std::ostream& out) {
      write_csv_row(out, {"a", "mass"});
      for (Eigen::Index k = 0; k < post.a_grid.size(); ++k) {
        write_csv_row(out, {format_double(post.a_grid[k]), format_double(post.a_mass[k])});
      }
    });
  }
  ctx.finish();
}

struct PredictFlags {
  std::string draws_path;
  std::string facts_path;
  std::string model;
  double level = 0.95;
};

void write_prediction(RunContext& ctx, const std::string& model, const MeanPosterior& mean,
                      const std::optional<Summary>& discount) {
  const ModelRow row{model, mean.summary, discount};
  ctx.write_json("prediction_" + model + ".json", model_row_to_json(row));
  ctx.write("prediction_" + model + ".csv", [&](std::ostream& out) { write_model_table(out, {row}); });
  ctx.write("ybar_draws_" + model + ".csv", [&](std::ostream& out) {
    write_csv_row(out, {"ybar"});
    for (Eigen::Index m = 0; m < mean.draws.size(); ++m) {
      write_csv_row(out, {format_double(mean.draws[m])});
    }
  });
}

void run_predict(const CLI::App& app, const CommonOptions& common, const PredictFlags& pf) {
  const std::string model = pf.model.empty() ? model_from_path(pf.draws_path) : pf.model;
  RunContext ctx("predict", common, app, model);
  const PosteriorDraws post = read_draws_csv(pf.draws_path);
  std::ifstream in(pf.facts_path);
  if (!in) {
    throw DataError("cannot open '" + pf.facts_path + "'");
  }
  json fj;
  try {
    in >> fj;
  } catch (const json::exception& e) {
    throw DataError(pf.facts_path + ": " + e.what());
  }
  const PopulationFacts facts = facts_from_json(fj);
  if (facts.xbar_hat.size() != post.beta.cols()) {
    throw DataError("facts have " + std::to_string(facts.xbar_hat.size()) + " covariate means but the draws have " +
                    std::to_string(post.beta.cols()) + " coefficients");
  }
  MeanPosterior mean = surrogate_mean_draws(post, facts, common.seed, common.threads);
  mean.summary = summarize(mean.draws, pf.level);
  std::optional<Summary> discount;
  if (post.a.size() > 0 && post.a.maxCoeff() > post.a.minCoeff()) {
    discount = summarize(post.a, pf.level);
  }
  write_prediction(ctx, model, mean, discount);
  ctx.finish();
}

struct BinaryFlags {
  std::size_t grid_points = 201;
  std::size_t a_grid_points = 201;
  std::size_t burnin = 1000;
  std::size_t thin = 5;
  std::size_t draws = 5000;
  double a_min = 0.0;
  double a_max = 1.0;
  double constraint_tol = 0.01;
  std::size_t refresh_every = 10;
  std::size_t max_tries = 10000;
  std::size_t population_size = 0;
  std::string weighting = "exponent";
  std::string resample_weights = "design";
};

void run_fit_binary(const CLI::App& app, const CommonOptions& common, const DataOptions& data,
                    const WeightFlags& wf, const BinaryFlags& bf) {
  RunContext ctx("fit-binary", common, app);
  const LoadedData loaded = load_two_samples(data, true);
  const PreparedSamples prepared = prepare(loaded, wf, true);
  BinaryGibbsSpec spec;
  spec.grid_points = bf.grid_points;
  spec.a_grid_points = bf.a_grid_points;
  spec.burnin = bf.burnin;
  spec.thin = bf.thin;
  spec.draws = bf.draws;
  spec.a_min = bf.a_min;
  spec.a_max = bf.a_max;
  spec.seed = common.seed;
  if (bf.weighting == "exponent") {
    spec.weighting = BinaryWeighting::in_exponent;
  } else if (bf.weighting == "power") {
    spec.weighting = BinaryWeighting::as_power;
  } else {
    throw UsageError("--weighting must be exponent or power");
  }
  const BinaryPosteriorDraws draws = griddy_gibbs_binary(prepared.nps, prepared.ps, spec);
  ctx.write("binary_draws.csv", [&](std::ostream& out) {
    std::vector<std::string> header{"a"};
    for (Eigen::Index j = 0; j < draws.beta.cols(); ++j) {
      header.push_back("beta_" + std::to_string(j + 1));
    }
    write_csv_row(out, header);
    for (Eigen::Index m = 0; m < draws.beta.rows(); ++m) {
      std::vector<std::string> row{format_double(draws.a[m])};
      for (Eigen::Index j = 0; j < draws.beta.cols(); ++j) {
        row.push_back(format_double(draws.beta(m, j)));
      }
      write_csv_row(out, row);
    }
  });

  const TwoSampleData& d = loaded.data;
  Eigen::MatrixXd pool(d.X1.rows() + d.X2.rows(), d.X1.cols());
  pool << d.X1, d.X2;
  Eigen::VectorXd row_weights;
  if (bf.resample_weights == "design") {
    row_weights.resize(pool.rows());
    row_weights << prepared.weights->calibrated, d.W2;
  } else if (bf.resample_weights != "uniform") {
    throw UsageError("--resample-weights must be design or uniform");
  }
  ResampleSpec rs;
  rs.population_size = bf.population_size;
  rs.tolerance = bf.constraint_tol;
  rs.max_tries = bf.max_tries;
  rs.seed = common.seed;
  const MeanPosterior mean =
      surrogate_proportion(draws, pool, row_weights, prepared.facts, rs, bf.refresh_every, common.seed, common.threads);
  std::optional<Summary> discount;
  if (draws.a.maxCoeff() > draws.a.minCoeff()) {
    discount = summarize(draws.a);
    discount->nse = draws.a_nse;
  }
  write_prediction(ctx, "binary", mean, discount);
  json diag;
  diag["beta_mean"] = vector_json(draws.beta.colwise().mean().transpose());
  diag["beta_nse"] = vector_json(draws.beta_nse);
  diag["a_mean"] = draws.a.mean();
  diag["a_nse"] = draws.a_nse;
  diag["mean_half_width"] = vector_json(draws.mean_half_width);
  diag["edge_hits"] = draws.edge_hits;
  diag["pilot_mode"] = vector_json(draws.pilot_mode);
  ctx.write_json("binary_diagnostics.json", diag);
  ctx.write_json("facts.json", facts_to_json(prepared.facts));
  ctx.finish();
}

struct BootstrapFlags {
  std::size_t replicates = 1000;
  std::string mode = "with_replacement";
  std::size_t inner_draws = 100;
  std::size_t reference_draws = 10000;
  std::size_t preliminary = 0;
};

json summary_json(const Summary& s) {
  return {{"PM", s.pm}, {"PSD", s.psd}, {"PCV", s.pcv}, {"NSE", s.nse}, {"HPD95", {s.hpd.lower, s.hpd.upper}}};
}

void run_bootstrap(const CLI::App& app, const CommonOptions& common, const DataOptions& data, const WeightFlags& wf,
                   const ScenarioFlags& sf, const BootstrapFlags& bf) {
  const ScenarioSpec scenario = scenario_spec(sf, common);
  RunContext ctx("bootstrap", common, app, std::string(1, scenario_letter(scenario.kind)));
  const LoadedData loaded = load_two_samples(data, false);
  BootstrapSpec spec;
  spec.replicates = bf.replicates;
  spec.mode = parse_resample_mode(bf.mode);
  spec.inner_draws = bf.inner_draws;
  spec.reference_draws = bf.reference_draws;
  spec.seed = common.seed;
  spec.threads = common.threads;
  const BootstrapPosterior result =
      bootstrap_pipeline(loaded.data, scenario, weight_options(wf, loaded.data.Z1.cols()), spec);
  const std::string letter(1, scenario_letter(scenario.kind));
  ctx.write("bootstrap_" + letter + "_replicates.csv", [&](std::ostream& out) {
    write_csv_row(out, {"replicate", "PM", "PSD", "N_hat", "a_mean"});
    for (const auto& r : result.replicates) {
      write_csv_row(out, {std::to_string(r.index + 1), format_double(r.pm), format_double(r.psd),
                          format_double(r.N_hat), format_double(r.a_mean)});
    }
  });
  ctx.write("bootstrap_" + letter + "_summary.csv", [&](std::ostream& out) {
    write_csv_row(out, {"Model", "bootstrap", "PM", "PSD", "PCV", "NSE", "CI_lower", "CI_upper"});
    for (int k = 0; k < 2; ++k) {
      const Summary& s = k == 0 ? result.without : result.with;
      write_csv_row(out, {letter, k == 0 ? "no" : "yes", format_double(s.pm), format_double(s.psd),
                          format_double(s.pcv), format_double(s.nse), format_double(s.hpd.lower),
                          format_double(s.hpd.upper)});
    }
  });
  json j;
  j["scenario"] = letter;
  j["mode"] = to_string(spec.mode);
  j["replicates"] = spec.replicates;
  j["dropped"] = result.dropped;
  j["without"] = summary_json(result.without);
  j["with"] = summary_json(result.with);
  j["psd_inflation"] = result.with.psd / result.without.psd;
  ctx.write_json("bootstrap_" + letter + ".json", j);
  if (bf.preliminary > 0) {
    const PreliminaryBootstrap pre =
        preliminary_ps_bootstrap(loaded.data.X2, loaded.data.y2, loaded.data.W2, bf.preliminary, common.seed);
    ctx.write("ps_bootstrap.csv", [&](std::ostream& out) {
      write_csv_row(out, {"quantity", "PM", "PSD", "lower", "upper"});
      auto row = [&](const std::string& name, const OrderSummary& s) {
        write_csv_row(out, {name, format_double(s.pm), format_double(s.psd), format_double(s.interval.lower),
                            format_double(s.interval.upper)});
      };
      row("N", pre.N_summary);
      for (std::size_t j = 0; j < pre.xbar_summary.size(); ++j) {
        row("xbar_" + loaded.data.names[j], pre.xbar_summary[j]);
      }
      row("ybar", pre.ybar_summary);
    });
  }
  ctx.finish();
}

struct SimulateFlags {
  std::vector<double> rho_list{0.2, 0.3, 0.5, 0.8};
  std::size_t replications = 200;
  std::string scenarios = "BCDEG";
  std::string misspec = "none";
  std::size_t draws = 10000;
  std::size_t grid_size = 1000;
  std::size_t N = 20000;
  std::size_t n1 = 1500;
  std::size_t n2 = 300;
  bool known_facts = false;
  bool raw_weights = false;
  bool fixed_order = false;
};

void run_simulate(const CLI::App& app, const CommonOptions& common, const SimulateFlags& f) {
  RunContext ctx("simulate", common, app);
  StudySpec spec;
  spec.rho_list = f.rho_list;
  spec.replications = f.replications;
  spec.scenarios.clear();
  for (char c : f.scenarios) {
    if (c == ',' || c == ' ') {
      continue;
    }
    spec.scenarios.push_back(parse_scenario(std::string(1, c)));
  }
  spec.misspec = parse_misspecification(f.misspec);
  spec.draws = f.draws;
  spec.grid_size = f.grid_size;
  spec.population.N = f.N;
  spec.population.n1 = f.n1;
  spec.population.n2 = f.n2;
  spec.known_population_facts = f.known_facts;
  spec.postprocess_weights = !f.raw_weights;
  spec.randomized_systematic = !f.fixed_order;
  spec.seed = common.seed;
  spec.threads = common.threads;
  const StudyResult result = run_study(spec);
  ctx.write("metrics.csv", [&](std::ostream& out) { write_metrics_csv(out, result, spec.scenarios); });
  ctx.write("summary.csv", [&](std::ostream& out) { write_summary_csv(out, result); });
  ctx.write("replications.csv", [&](std::ostream& out) { write_replications_csv(out, result); });
  ctx.write("populations.csv", [&](std::ostream& out) {
    write_csv_row(out, {"rho", "theta0", "theta1", "sigma2", "correlation", "T", "failures"});
    for (const auto& p : result.populations) {
      write_csv_row(out, {format_double(p.rho), format_double(p.theta0), format_double(p.theta1),
                          format_double(p.sigma2), format_double(p.correlation), format_double(p.true_mean),
                          std::to_string(p.failures)});
    }
  });
  ctx.finish();
}

void run_report(const CLI::App& app, const CommonOptions& common, const std::string& runs_dir) {
  const fs::path runs = runs_dir.empty() ? fs::path(common.out_dir) : fs::path(runs_dir);
  if (!fs::is_directory(runs)) {
    throw DataError("no runs found: '" + runs.string() + "' is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(runs)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("prediction_", 0) == 0 && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw DataError("no runs found in '" + runs.string() + "'");
  }
  std::vector<ModelRow> rows;
  for (const auto& path : files) {
    std::ifstream in(path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    rows.push_back(model_row_from_json(j));
  }
  sort_model_rows(rows);
  RunContext ctx("report", common, app);
  ctx.write("report.csv", [&](std::ostream& out) { write_model_table(out, rows); });
  const std::string note = discount_note(rows);
  ctx.write("report.txt", [&](std::ostream& out) {
    write_model_table(out, rows);
    if (!note.empty()) {
      out << note << '\n';
    }
  });
  for (const auto& row : rows) {
    const fs::path draws = runs / ("ybar_draws_" + row.model + ".csv");
    if (!fs::exists(draws)) {
      continue;
    }
    const DensityCurve curve = kernel_density(read_csv_column(draws, "ybar"));
    ctx.write("density_" + row.model + ".csv", [&](std::ostream& out) {
      write_csv_row(out, {"ybar", "density"});
      for (Eigen::Index k = 0; k < curve.grid.size(); ++k) {
        write_csv_row(out, {format_double(curve.grid[k]), format_double(curve.density[k])});
      }
    });
  }
  ctx.finish();
}

void fail_line(const char* kind, const std::string& message) {
  std::string flat = message;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  std::cerr << "survint: error[" << kind << "]: " << flat << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian integration of probability and nonprobability survey samples"};
  app.set_version_flag("--version", std::string(SURVINT_VERSION));
  app.set_config("--config", "", "TOML or INI file with option values (command-line flags take precedence)");
  app.require_subcommand(1);

  CommonOptions common;
  if (const char* env = std::getenv("SURVINT_OUT_DIR"); env != nullptr && *env != '\0') {
    common.out_dir = env;
  }
  app.add_option("--out", common.out_dir, "Output directory (default: $SURVINT_OUT_DIR or .)");
  app.add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--seed", common.seed, "Master seed")->capture_default_str();
  app.fallthrough();

  DataOptions data;
  WeightFlags wf;
  ScenarioFlags sf;

  auto* weights = app.add_subcommand("weights", "Estimate nps weights and population facts");
  add_data_options(weights, data);
  add_weight_options(weights, wf);

  auto* fit = app.add_subcommand("fit", "Posterior draws for one scenario");
  add_data_options(fit, data);
  add_weight_options(fit, wf);
  add_scenario_options(fit, sf, true);

  BinaryFlags bf;
  auto* fit_binary = app.add_subcommand("fit-binary", "Griddy Gibbs fit of the binary model and the population proportion");
  add_data_options(fit_binary, data);
  add_weight_options(fit_binary, wf);
  fit_binary->add_option("--grid-points", bf.grid_points, "Grid points per coefficient")->capture_default_str();
  fit_binary->add_option("--a-grid-points", bf.a_grid_points, "Grid points for a")->capture_default_str();
  fit_binary->add_option("--burnin", bf.burnin, "Burn-in sweeps")->capture_default_str();
  fit_binary->add_option("--thin", bf.thin, "Thinning interval")->capture_default_str();
  fit_binary->add_option("--draws", bf.draws, "Retained draws")->capture_default_str();
  fit_binary->add_option("--a-min", bf.a_min, "Lower end of the discount range")->capture_default_str();
  fit_binary->add_option("--a-max", bf.a_max, "Upper end of the discount range")->capture_default_str();
  fit_binary->add_option("--constraint-tol", bf.constraint_tol, "Relative tolerance of the covariate totals")
      ->capture_default_str();
  fit_binary->add_option("--refresh-every", bf.refresh_every, "Draws per resampled population")
      ->capture_default_str();
  fit_binary->add_option("--max-tries", bf.max_tries, "Resampling attempts per population")->capture_default_str();
  fit_binary->add_option("--population-size", bf.population_size, "Units per population (default: round(N_hat))");
  fit_binary->add_option("--weighting", bf.weighting, "exponent or power")->capture_default_str();
  fit_binary->add_option("--resample-weights", bf.resample_weights, "design or uniform")->capture_default_str();
  fit_binary->add_option("--bin-columns", data.bin_columns, "Covariates to discretize")->delimiter(',');
  fit_binary->add_option("--bin-width", data.bin_width, "Class width for --bin-columns")->capture_default_str();

  PredictFlags pf;
  auto* predict = app.add_subcommand("predict", "Posterior of the finite population mean from a draws file");
  predict->add_option("--draws", pf.draws_path, "Draws CSV written by fit")->required()->check(CLI::ExistingFile);
  predict->add_option("--facts", pf.facts_path, "Population facts JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--model", pf.model, "Model label (default: from the draws file name)");
  predict->add_option("--hpd-level", pf.level, "HPD level")->capture_default_str();

  BootstrapFlags bsf;
  auto* bootstrap = app.add_subcommand("bootstrap", "Bootstrap propagation of weight uncertainty");
  add_data_options(bootstrap, data);
  add_weight_options(bootstrap, wf);
  add_scenario_options(bootstrap, sf, true);
  bootstrap->add_option("--replicates", bsf.replicates, "Bootstrap replicates")->capture_default_str();
  bootstrap->add_option("--mode", bsf.mode, "with_replacement or dirichlet_weights")->capture_default_str();
  bootstrap->add_option("--inner-draws", bsf.inner_draws, "Draws per replicate")->capture_default_str();
  bootstrap->add_option("--reference-draws", bsf.reference_draws, "Draws of the fit without bootstrap")
      ->capture_default_str();
  bootstrap->add_option("--ps-bootstrap", bsf.preliminary, "Also run a Bayesian bootstrap of the ps with this many replicates");

  SimulateFlags smf;
  auto* simulate = app.add_subcommand("simulate", "Simulation study over finite populations");
  simulate->add_option("--rho-list", smf.rho_list, "Correlations")->delimiter(',')->capture_default_str();
  simulate->add_option("--replications", smf.replications, "Replications per rho")->capture_default_str();
  simulate->add_option("--scenarios", smf.scenarios, "Scenario letters, e.g. BCDEG")->capture_default_str();
  simulate->add_option("--misspec", smf.misspec, "none, drop-x3-popmodel or drop-x3-both")->capture_default_str();
  simulate->add_option("--draws", smf.draws, "Posterior draws per fit")->capture_default_str();
  simulate->add_option("--grid-size", smf.grid_size, "Grid points for a")->capture_default_str();
  simulate->add_option("--N", smf.N, "Population size")->capture_default_str();
  simulate->add_option("--n1", smf.n1, "Expected nps size")->capture_default_str();
  simulate->add_option("--n2", smf.n2, "ps size")->capture_default_str();
  simulate->add_flag("--known-facts", smf.known_facts, "Predict with the population's N and covariate means");
  simulate->add_flag("--raw-nps-weights", smf.raw_weights, "Skip winsorizing and rescaling of the nps weights");
  simulate->add_flag("--fixed-order-systematic", smf.fixed_order, "Systematic PPS without the random permutation");

  std::string runs_dir;
  auto* report = app.add_subcommand("report", "Merge prediction runs into a comparison table");
  report->add_option("--runs", runs_dir, "Directory holding prediction_*.json (default: --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);
    }
    fail_line("usage", e.what());
    std::cerr << app.help();
    return 1;
  }

  try {
    if (weights->parsed()) {
      run_weights(*weights, common, data, wf);
    } else if (fit->parsed()) {
      run_fit(*fit, common, data, wf, sf);
    } else if (fit_binary->parsed()) {
      run_fit_binary(*fit_binary, common, data, wf, bf);
    } else if (predict->parsed()) {
      run_predict(*predict, common, pf);
    } else if (bootstrap->parsed()) {
      run_bootstrap(*bootstrap, common, data, wf, sf, bsf);
    } else if (simulate->parsed()) {
      run_simulate(*simulate, common, smf);
    } else if (report->parsed()) {
      run_report(*report, common, runs_dir);
    }
  } catch (const UsageError& e) {
    fail_line("usage", e.what());
    return 1;
  } catch (const DataError& e) {
    fail_line("data", e.what());
    return 2;
  } catch (const NumericalError& e) {
    fail_line("numerical", e.what());
    return 3;
  } catch (const fs::filesystem_error& e) {
    fail_line("data", e.what());
    return 2;
  } catch (const std::exception& e) {
    fail_line("internal", e.what());
    return 3;
  }
  return 0;
}
