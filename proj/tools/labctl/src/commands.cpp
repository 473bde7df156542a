#include "labctl/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <auxlab/errors.hpp>
#include <auxlab/format.hpp>
#include <auxlab/random.hpp>

namespace labctl {

using namespace auxlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

json residuals_json(const OracleVerdict& v) {
  json out = json::array();
  for (const Residual& r : v.residuals) {
    json item{{"name", r.name}, {"value", number(r.value)}};
    item["tolerance"] = r.tolerance ? number(*r.tolerance) : json(nullptr);
    out.push_back(item);
  }
  return out;
}

json verdict_json(const OracleVerdict& v) {
  json out{{"check", v.check}, {"pass", v.pass}, {"residuals", residuals_json(v)}};
  if (v.witness) out["witness"] = *v.witness;
  if (!v.notes.empty()) out["notes"] = v.notes;
  return out;
}

std::vector<double> w_colmajor(const Eigen::MatrixXd& W) {
  return std::vector<double>(W.data(), W.data() + W.size());
}

std::string file_label(Variant v, std::size_t index) {
  std::string name = to_string(v);
  for (char& c : name) {
    if (c == '+') c = '_';
  }
  return name + "-" + std::to_string(index);
}

json run_json(const ExperimentRun& run) {
  const RunRecord& r = run.record;
  json events = json::array();
  for (const MonitorEvent& e : r.events) {
    events.push_back({{"iteration", e.iteration}, {"aux_norm", number(e.aux_norm)}, {"action", to_string(e.action)}});
  }
  json out{{"variant", to_string(run.variant)},
           {"seed_index", run.seed_index},
           {"seed", run.seed},
           {"termination", to_string(r.termination)},
           {"iterations", r.iterations},
           {"restarts", r.restarts},
           {"final_loss", number(run.final_loss)},
           {"final_objective", number(r.final_objective)},
           {"final_grad_norm", number(r.final_grad_norm)},
           {"final_aux_norm", number(r.final_aux_norm)},
           {"events", events}};
  if (run.error) out["error"] = *run.error;
  return out;
}

json summary_json(const VariantSummary& s) {
  return {{"variant", to_string(s.variant)},
          {"runs", s.runs},
          {"failures", s.failures},
          {"successes", s.successes},
          {"success_fraction", number(s.success_fraction)},
          {"mean", number(s.mean)},
          {"median", number(s.median)},
          {"min", number(s.min)},
          {"max", number(s.max)},
          {"restarts", s.restarts},
          {"monitor_events", s.monitor_events}};
}

std::string utc_stamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

fs::path output_base(const Options& opts, const RunConfig& config) {
  return opts.out.empty() ? fs::path(config.out) : fs::path(opts.out);
}

std::vector<double> default_theta(const RunConfig& config, const Problem& problem) {
  if (!config.theta.empty()) {
    if (config.theta.size() != problem.model().parameter_count()) {
      throw ConfigError("model theta has " + std::to_string(config.theta.size()) + " entries, expected " +
                        std::to_string(problem.model().parameter_count()));
    }
    return config.theta;
  }
  Rng rng(config.verify_seed);
  return problem.model().initial_parameters(rng);
}

PointFile load_point(const Options& opts, const RunConfig& config, const Problem& problem) {
  if (!opts.params.empty()) return read_point_file(opts.params, problem);
  PointFile p;
  p.theta = default_theta(config, problem);
  p.aux = AuxParams::zeros(problem.model().input_dim(), problem.model().output_dim(), problem.lambda());
  return p;
}

std::vector<double> packed(const PointFile& p) {
  const ParamVector v = pack_augmented(p.theta, p.aux);
  return std::vector<double>(v.values().begin(), v.values().end());
}

}  // namespace

PointFile read_point_file(const std::string& path, const Problem& problem) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open parameter file '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("parameter file '" + path + "': " + e.what());
  }
  const std::size_t dx = problem.model().input_dim();
  const std::size_t dy = problem.model().output_dim();
  PointFile p;
  try {
    p.theta = j.at("theta").get<std::vector<double>>();
    std::vector<double> a(dy, 0.0);
    std::vector<double> b(dy, 0.0);
    std::vector<double> w(dx * dy, 0.0);
    if (j.contains("a")) a = j["a"].get<std::vector<double>>();
    if (j.contains("b")) b = j["b"].get<std::vector<double>>();
    if (j.contains("W")) w = j["W"].get<std::vector<double>>();
    if (w.size() != dx * dy) throw ConfigError("parameter file W needs " + std::to_string(dx * dy) + " entries");
    const Eigen::MatrixXd W =
        Eigen::Map<const Eigen::MatrixXd>(w.data(), static_cast<Eigen::Index>(dx), static_cast<Eigen::Index>(dy));
    p.aux = AuxParams(std::move(a), std::move(b), W, problem.lambda());
  } catch (const json::exception& e) {
    throw ConfigError("parameter file '" + path + "': " + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError("parameter file '" + path + "': " + e.what());
  }
  if (p.theta.size() != problem.model().parameter_count()) {
    throw ConfigError("parameter file theta has " + std::to_string(p.theta.size()) + " entries, expected " +
                      std::to_string(problem.model().parameter_count()));
  }
  return p;
}

std::string point_json(std::span<const double> theta, const AuxParams& aux) {
  json j{{"theta", std::vector<double>(theta.begin(), theta.end())},
         {"a", aux.a},
         {"b", aux.b},
         {"W", w_colmajor(aux.W)}};
  return j.dump(2) + "\n";
}

fs::path make_run_dir(const fs::path& base, const std::string& hash) {
  std::error_code ec;
  fs::create_directories(base, ec);
  if (ec) throw IoError("cannot create '" + base.string() + "': " + ec.message());
  const std::string stem = hash + "-" + utc_stamp();
  fs::path dir = base / stem;
  for (int n = 1; fs::exists(dir); ++n) dir = base / (stem + "-" + std::to_string(n));
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_file(base / "latest", dir.filename().string() + "\n");
  return dir;
}

RunConfig resolve_config(const Options& opts) {
  RunConfig config = opts.config_path.empty() ? RunConfig{} : load_config(opts.config_path);
  if (opts.seed) {
    config.base_seed = *opts.seed;
    config.verify_seed = *opts.seed;
    config.pgb.seed = *opts.seed;
  }
  if (!opts.eps.empty()) config.pgb.eps_ladder = opts.eps;
  if (opts.jobs < 1) throw ConfigError("--jobs must be at least 1");
  return config;
}

int cmd_train(const Options& opts, std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  const Problem problem = build_problem(config);
  const ExperimentConfig ecfg = experiment_config(config, opts.jobs);
  const ExperimentResult result = multi_seed_experiment(problem, ecfg);

  const fs::path dir = make_run_dir(output_base(opts, config), config_hash(config));
  write_file(dir / "config.cfg", to_text(config));

  std::string lines;
  json runs = json::array();
  for (const ExperimentRun& run : result.runs) {
    const json j = run_json(run);
    lines += j.dump() + "\n";
    runs.push_back(j);
  }
  write_file(dir / "runs.jsonl", lines);

  fs::create_directories(dir / "params");
  if (config.write_trajectories) fs::create_directories(dir / "trajectories");
  for (const ExperimentRun& run : result.runs) {
    const std::string label = file_label(run.variant, run.seed_index);
    const ParamVector& fin = run.record.final_params;
    if (fin.size() > 0) {
      if (fin.has_segment("a")) {
        write_file(dir / "params" / (label + ".json"),
                   point_json(fin.segment("theta"), unpack_aux(fin, problem.lambda())));
      } else {
        const auto theta = fin.has_segment("theta") ? fin.segment("theta") : fin.values();
        write_file(dir / "params" / (label + ".json"),
                   json{{"theta", std::vector<double>(theta.begin(), theta.end())}}.dump(2) + "\n");
      }
    }
    if (config.write_trajectories) {
      std::ostringstream csv;
      write_trajectory_csv(csv, run.record);
      write_file(dir / "trajectories" / (label + ".csv"), csv.str());
    }
  }

  const Histogram hist =
      loss_histogram(result, ecfg.variants, config.histogram_lo, config.histogram_hi, config.histogram_bins);
  std::ostringstream hcsv;
  write_histogram_csv(hcsv, hist, ecfg.variants);
  write_file(dir / "histogram.csv", hcsv.str());

  json summaries = json::array();
  for (const VariantSummary& s : result.summaries) summaries.push_back(summary_json(s));
  json summary{{"config_hash", config_hash(config)},
               {"model", problem.model().name()},
               {"loss", config.loss},
               {"lambda", config.lambda},
               {"reduction", to_string(config.reduction)},
               {"seeds", config.seeds},
               {"base_seed", config.base_seed},
               {"optimizer", to_string(config.optimizer.method)},
               {"lr", config.optimizer.lr},
               {"max_iterations", config.optimizer.max_iterations},
               {"monitor_threshold", config.monitor.threshold},
               {"monitor_action", to_string(config.monitor.action)},
               {"success_threshold", config.success_threshold},
               {"summaries", summaries},
               {"runs", runs}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  out << json{{"dir", dir.string()}, {"summaries", summaries}}.dump(2) << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& what, const Options& opts, std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  const Problem problem = build_problem(config);
  const Model& model = problem.model();
  std::vector<OracleVerdict> verdicts;
  json extra = json::object();

  if (what == "grad") {
    Rng rng(config.verify_seed);
    std::vector<std::vector<double>> thetas;
    std::vector<std::vector<double>> full;
    for (std::size_t i = 0; i < config.grad_points; ++i) {
      std::vector<double> theta = model.initial_parameters(rng);
      std::vector<double> p = theta;
      for (std::size_t k = theta.size(); k < problem.augmented_layout().size(); ++k) p.push_back(rng.uniform(-1.0, 1.0));
      thetas.push_back(std::move(theta));
      full.push_back(std::move(p));
    }
    OracleVerdict original = gradient_check(original_objective(problem), thetas);
    original.check = "grad_original";
    OracleVerdict augmented = gradient_check(augmented_objective(problem), full);
    augmented.check = "grad_augmented";
    verdicts.push_back(std::move(original));
    verdicts.push_back(std::move(augmented));
  } else if (what == "stationary-a") {
    const PointFile p = load_point(opts, config, problem);
    const std::vector<double> x = packed(p);
    const std::vector<double> g = augmented_objective(problem).gradient(x);
    const Layout layout = problem.augmented_layout();
    const Segment& sa = layout.at("a");
    const Segment& sb = layout.at("b");
    double max_a = 0.0;
    double identity = 0.0;
    for (std::size_t k = 0; k < sa.length; ++k) {
      const double a = x[sa.offset + k];
      max_a = std::max(max_a, std::abs(a));
      const double lhs = a * g[sa.offset + k] - g[sb.offset + k];
      identity = std::max(identity, std::abs(lhs - 2.0 * problem.lambda() * a * a));
    }
    OracleVerdict v;
    v.check = "stationary-a";
    v.add("grad_norm", norm2(g), 1e-6);
    v.add("max_abs_a", max_a, 1e-4);
    v.add("identity_error", identity, 1e-9);
    v.pass = norm2(g) <= 1e-6 && max_a <= 1e-4 && identity <= 1e-9;
    verdicts.push_back(std::move(v));
  } else if (what == "local-min") {
    const PointFile p = load_point(opts, config, problem);
    verdicts.push_back(
        verify_local_min(augmented_objective(problem), packed(p), config.radius, config.samples, config.verify_seed));
  } else if (what == "pgb") {
    const PointFile p = load_point(opts, config, problem);
    const PgbReport report = pgb_check(problem, p.theta, p.aux, config.pgb);
    extra["result"] = report.refuted ? "REFUTED" : "CONSISTENT";
    extra["q_z"] = number(report.q_z);
    json per = json::array();
    for (const PgbEpsilon& e : report.per_eps) {
      per.push_back({{"eps", e.eps}, {"inner_min", number(e.inner_min)}, {"bound", number(e.bound)}, {"refuted", e.refuted}});
    }
    extra["per_eps"] = per;
    if (report.witness) {
      extra["witness"] = *report.witness;
      extra["witness_verified"] = report.witness_verified;
    }
    verdicts.push_back(report.verdict);
  } else if (what == "realizable") {
    const PointFile p = load_point(opts, config, problem);
    verdicts.push_back(per_sample_gradient_check(model, problem.loss(), problem.data(), p.theta));
  } else if (what == "factorization") {
    const PointFile p = load_point(opts, config, problem);
    const Factorization fac = gradient_factorization(model, problem.loss(), problem.data(), p.theta);
    // A r is the mean-reduced gradient; the sum reduction scales it by m.
    const double scale = problem.reduction() == Reduction::Sum ? static_cast<double>(problem.data().size()) : 1.0;
    const std::vector<double> g = original_objective(problem).gradient(p.theta);
    const Eigen::VectorXd ar = scale * (fac.A * fac.r);
    double err = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) err = std::max(err, std::abs(ar(static_cast<Eigen::Index>(j)) - g[j]));
    const double tol = 1e-9 * (1.0 + norm2(g));
    OracleVerdict v;
    v.check = "factorization";
    v.add("identity_error", err, tol);
    v.add("null_norm", fac.null_norm);
    v.add("relative", fac.relative);
    v.pass = err <= tol;
    verdicts.push_back(std::move(v));
  } else {
    throw ConfigError("unknown verify check '" + what + "'");
  }

  bool pass = true;
  json list = json::array();
  for (const OracleVerdict& v : verdicts) {
    pass = pass && v.pass;
    list.push_back(verdict_json(v));
  }
  json report{{"check", what}, {"pass", pass}, {"verdicts", list}};
  for (auto it = extra.begin(); it != extra.end(); ++it) report[it.key()] = it.value();
  out << report.dump(2) << "\n";
  return pass ? kExitOk : kExitVerdictFail;
}

int cmd_example(const std::string& name, const Options& opts, std::ostream& out) {
  std::vector<std::string> names;
  if (name == "all") {
    names = example_names();
  } else {
    example_fixture(name);
    names.push_back(name);
  }
  std::vector<double> ladder = opts.eps.empty() ? default_eps_ladder() : opts.eps;
  bool pass = true;
  json reports = json::array();
  for (const std::string& n : names) {
    const ExampleReport r = run_example(n, ladder);
    pass = pass && r.pass;
    json points = json::array();
    for (const ExamplePoint& p : r.points) {
      points.push_back({{"eps", p.eps},
                        {"value", number(p.general)},
                        {"closed_form", number(p.closed_form)},
                        {"difference", number(p.difference)},
                        {"distance_to_limit", number(p.distance_to_limit)},
                        {"aux_norm", number(p.aux_norm)},
                        {"printed_path_value", number(p.printed_path_value)}});
    }
    reports.push_back({{"name", r.name},
                       {"pass", r.pass},
                       {"limit", r.limit},
                       {"agreement", r.agreement},
                       {"monotone", r.monotone},
                       {"max_difference", number(r.max_difference)},
                       {"points", points},
                       {"discrepancies", r.discrepancies}});
  }
  out << json{{"pass", pass}, {"reports", reports}}.dump(2) << "\n";
  return pass ? kExitOk : kExitVerdictFail;
}

int cmd_landscape(const Options& opts, std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  const Problem problem = build_problem(config);
  if (problem.model().parameter_count() != 1 || problem.model().output_dim() != 1) {
    throw ConfigError("landscape needs a model with one parameter and one output");
  }
  LandscapeConfig lc = config.landscape;
  lc.jobs = opts.jobs;
  const LandscapeResult result = landscape_grid(problem, lc);

  const fs::path dir = make_run_dir(output_base(opts, config), config_hash(config));
  write_file(dir / "config.cfg", to_text(config));
  std::ostringstream csv;
  write_landscape_csv(csv, result);
  write_file(dir / "landscape.csv", csv.str());

  double best = std::numeric_limits<double>::infinity();
  const LandscapeCell* best_cell = nullptr;
  for (const LandscapeCell& c : result.cells) {
    if (std::isfinite(c.value) && c.value < best) {
      best = c.value;
      best_cell = &c;
    }
  }
  json meta{{"lambda", problem.lambda()},
            {"theta_lo", lc.theta_lo},
            {"theta_hi", lc.theta_hi},
            {"theta_steps", lc.theta_steps},
            {"b_lo", lc.b_lo},
            {"b_hi", lc.b_hi},
            {"b_steps", lc.b_steps},
            {"bracket", lc.bracket},
            {"golden_iterations", lc.golden_iterations},
            {"newton_steps", lc.newton_steps},
            {"cells", result.cells.size()},
            {"inner_solve_failures", result.failures}};
  if (best_cell != nullptr) {
    meta["min"] = {{"theta", best_cell->theta}, {"b", best_cell->b}, {"value", best_cell->value}};
  }
  write_file(dir / "landscape.json", meta.dump(2) + "\n");
  meta["dir"] = dir.string();
  out << meta.dump(2) << "\n";
  return kExitOk;
}

int cmd_oracle(const Options& opts, std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  const Problem problem = build_problem(config);
  if (config.oracle_lo.size() != problem.model().parameter_count()) {
    throw ConfigError("oracle box has " + std::to_string(config.oracle_lo.size()) + " axes, the model has " +
                      std::to_string(problem.model().parameter_count()) + " parameters");
  }
  const GridResult r = grid_global_min(original_objective(problem), config.oracle_lo, config.oracle_hi, config.resolution);
  out << json{{"argmin", r.argmin},
              {"min_value", number(r.min_value)},
              {"evaluations", r.evaluations},
              {"overflows", r.overflows}}
             .dump(2)
      << "\n";
  return kExitOk;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const UnknownFixture& e) {
    err << "error: " << e.what() << "\n";
    return kExitUnknownFixture;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const OverflowError& e) {
    err << "error: " << e.what() << "\n";
    return kExitVerdictFail;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Auxiliary-neuron objective laboratory", "auxlab"};
  app.require_subcommand(1);
  Options opts;
  std::uint64_t seed = 0;
  std::string what;
  std::string name;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "Config file");
    sub->add_option("--out", opts.out, "Output directory root");
    sub->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Override every seed in the config");
    sub->add_option("--eps", opts.eps, "Epsilon ladder")->delimiter(',');
  };
  CLI::App* train = app.add_subcommand("train", "Multi-seed training experiment");
  common(train);
  CLI::App* verify = app.add_subcommand("verify", "Run one verification oracle");
  common(verify);
  verify->add_option("what", what, "grad | stationary-a | local-min | pgb | realizable | factorization")
      ->required()
      ->check(CLI::IsMember({"grad", "stationary-a", "local-min", "pgb", "realizable", "factorization"}));
  verify->add_option("--params", opts.params, "Parameter JSON file");
  CLI::App* example = app.add_subcommand("example", "Closed-form divergence-path examples");
  common(example);
  example->add_option("name", name, "Example name or 'all'")->required();
  CLI::App* landscape = app.add_subcommand("landscape", "(theta, b) landscape grid");
  common(landscape);
  CLI::App* oracle = app.add_subcommand("oracle", "Grid global minimum of L");
  common(oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) opts.seed = seed;
  }

  return guarded(err, [&] {
    if (const char* clamp = std::getenv("AUXLAB_CLAMP"); clamp != nullptr && *clamp != '\0') {
      double value = 0.0;
      try {
        value = parse_double(clamp);
      } catch (const InvalidArgument&) {
        throw ConfigError(std::string("AUXLAB_CLAMP is not a number: ") + clamp);
      }
      if (!(value > 0.0)) throw ConfigError("AUXLAB_CLAMP must be positive");
      set_exp_clamp(value);
    }
    if (train->parsed()) return cmd_train(opts, out);
    if (verify->parsed()) return cmd_verify(what, opts, out);
    if (example->parsed()) return cmd_example(name, opts, out);
    if (landscape->parsed()) return cmd_landscape(opts, out);
    return cmd_oracle(opts, out);
  });
}

}  // namespace labctl
