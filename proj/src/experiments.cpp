#include "mixmax/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "mixmax/baselines.hpp"
#include "mixmax/error.hpp"
#include "mixmax/random.hpp"
#include "mixmax/synthetic.hpp"
#include "mixmax/verify.hpp"

namespace mixmax {

namespace {

using nlohmann::json;

enum class Kind { toy, markov_magnitudes, markov_sample_sizes };

struct ToySetting {
  ToyFamily family;
  const char* variant;
  LossKind loss;
};

Kind kind_of(const std::string& name) {
  if (name == "markov_magnitudes") return Kind::markov_magnitudes;
  if (name == "markov_sample_sizes") return Kind::markov_sample_sizes;
  return Kind::toy;
}

ToySetting toy_setting(const std::string& name) {
  if (name == "toy_ce_mirror") return {ToyFamily::binary_cosine, "mirror", LossKind::cross_entropy};
  if (name == "toy_ce_shifted") return {ToyFamily::binary_cosine, "shifted", LossKind::cross_entropy};
  if (name == "toy_regression_a") return {ToyFamily::regression_cosine, "a", LossKind::squared_error};
  if (name == "toy_regression_b") return {ToyFamily::regression_cosine, "b", LossKind::squared_error};
  throw DomainError("unknown experiment '" + name + "'");
}

json plan_to_json(const SplitPlan& plan) {
  if (plan.mode == SplitPlan::Mode::data_reuse) return {{"mode", "data_reuse"}};
  return {{"mode", "split"}, {"proxy_fraction", plan.proxy_fraction}};
}

SplitPlan plan_from_json(const json& j) {
  const std::string mode = j.at("mode").get<std::string>();
  SplitPlan plan;
  if (mode == "data_reuse") {
    plan.mode = SplitPlan::Mode::data_reuse;
  } else if (mode == "split") {
    plan.mode = SplitPlan::Mode::split;
    plan.proxy_fraction = j.value("proxy_fraction", 0.75);
  } else {
    throw DomainError("unknown split mode '" + mode + "'");
  }
  plan.validate();
  return plan;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw DomainError("unknown key '" + key + "' in " + where);
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// One unit of parallel work: a single trial at one key.
struct Task {
  std::size_t key_index = 0;
  double key = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
};

struct TaskOutput {
  std::vector<ResultRow> rows;
  json artifact;
};

ResultRow error_row(const Task& task, const std::string& method, const std::string& what) {
  ResultRow row;
  row.key = task.key;
  row.trial = task.trial;
  row.method = method;
  row.status = "error: " + what;
  return row;
}

SolverConfig trial_solver(const ExperimentConfig& config, std::uint64_t seed) {
  SolverConfig cfg = config.solver;
  cfg.seed = derive_seed(seed, 3);
  return cfg;
}

SplitPlan trial_plan(SplitPlan plan, std::uint64_t seed) {
  plan.seed = derive_seed(seed, 4);
  return plan;
}

void fill_solver_fields(ResultRow& row, const SolveReport& report) {
  row.weights = report.final_weights.as_vector();
  row.converged = report.converged;
  row.final_change = report.final_change;
}

// Runs each configured method and evaluates its weights with `evaluate`,
// which fills objective, worst-group loss and accuracy.
template <class Evaluate>
void run_methods(const ExperimentConfig& config, const Task& task, const MixMaxProblem& problem,
                 const GroupDatasets& train, const ProxyFamily& proxy_family, LossKind loss, Evaluate&& evaluate,
                 TaskOutput& out) {
  const std::size_t k = problem.group_count();
  for (const std::string& name : config.baselines) {
    try {
      const BaselineName baseline = parse_baseline(name);
      ResultRow row;
      row.key = task.key;
      row.trial = task.trial;
      row.method = baseline.str();
      switch (baseline.kind) {
        case BaselineName::Kind::mixmax:
          fill_solver_fields(row, solve(problem, trial_solver(config, task.seed)));
          break;
        case BaselineName::Kind::balanced:
          row.weights = balanced_weights(k).as_vector();
          break;
        case BaselineName::Kind::vertex:
          row.weights = single_group_weights(k, baseline.index).as_vector();
          break;
      }
      evaluate(row);
      out.rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      out.rows.push_back(error_row(task, name, e.what()));
    }
  }
  for (const SplitPlan& base_plan : config.plans) {
    const std::string method = "e2mixmax:" + base_plan.name();
    try {
      E2MixMaxResult fit =
          e2mixmax_detailed(train, trial_plan(base_plan, task.seed), proxy_family, trial_solver(config, task.seed), loss);
      ResultRow row;
      row.key = task.key;
      row.trial = task.trial;
      row.method = method;
      fill_solver_fields(row, fit.report);
      evaluate(row);
      out.rows.push_back(std::move(row));
      out.artifact["proxies"][method] = fit.proxies.to_json();
    } catch (const std::exception& e) {
      out.rows.push_back(error_row(task, method, e.what()));
    }
  }
}

void fill_from_report(ResultRow& row, const WorstGroupReport& report) {
  double objective = 0.0;
  for (std::size_t p = 0; p < row.weights.size(); ++p) objective += row.weights[p] * report.group_losses[p];
  row.objective = objective;
  row.worst_group_loss = report.worst;
  row.worst_group_accuracy = report.worst_accuracy;
}

TaskOutput run_toy_trial(const ExperimentConfig& config, const Task& task) {
  const ToySetting setting = toy_setting(config.experiment);
  TaskOutput out;
  const ToyProblem toy = toy_oracles(setting.family, setting.variant, config.shift_mode);
  const std::size_t k = toy.spec.group_count();

  Rng rng(derive_seed(task.seed, 1));
  GroupDatasets train;
  for (std::size_t g = 0; g < k; ++g) train.groups.push_back(toy.sample(g, config.samples_per_group, rng));
  const MixMaxProblem problem(train, toy.oracles, setting.loss);

  BinnedProxyFamily family;
  family.classes = setting.family == ToyFamily::binary_cosine ? 2 : 0;
  family.mode = config.shift_mode;

  auto evaluate = [&](ResultRow& row) {
    const MixtureWeights w = MixtureWeights::from_values(row.weights);
    fill_from_report(row, toy_population_eval(toy, w, setting.loss));
  };
  run_methods(config, task, problem, train, family, setting.loss, evaluate, out);
  return out;
}

TaskOutput run_markov_trial(const ExperimentConfig& config, const Task& task, double magnitude,
                            std::size_t per_length, bool population) {
  TaskOutput out;
  Rng chain_rng(derive_seed(task.seed, 0));
  std::vector<MarkovChainSpec> chains;
  for (std::size_t g = 0; g < config.groups; ++g) {
    chains.push_back(sample_chain(config.vocab, magnitude, chain_rng, config.max_length));
  }
  json chain_list = json::array();
  for (const auto& c : chains) chain_list.push_back(to_json(c));
  out.artifact["chains"] = std::move(chain_list);

  const GroupOracleSet exact = chains_as_oracles(chains);
  Rng train_rng(derive_seed(task.seed, 1));
  GroupDatasets train;
  for (const auto& c : chains) train.groups.push_back(sample_sequences(c, per_length, train_rng));
  const MixMaxProblem problem(train, exact, LossKind::cross_entropy);

  std::optional<MixMaxProblem> test_problem;
  if (!population) {
    Rng test_rng(derive_seed(task.seed, 2));
    GroupDatasets test;
    for (const auto& c : chains) test.groups.push_back(sample_sequences(c, config.test_per_length, test_rng));
    test_problem.emplace(test, exact, LossKind::cross_entropy);
  }

  MarkovProxyFamily family{config.vocab, config.max_length, config.proxy_smoothing};
  auto evaluate = [&](ResultRow& row) {
    const MixtureWeights w = MixtureWeights::from_values(row.weights);
    if (population) {
      const ObjectiveValue v = population_value(chains, w);
      row.objective = v.objective;
      row.worst_group_loss = *std::max_element(v.group_losses.begin(), v.group_losses.end());
    } else {
      const WorstGroupReport report = worst_group_eval(w, *test_problem);
      row.objective = test_problem->objective(w);
      row.worst_group_loss = report.worst;
    }
  };
  run_methods(config, task, problem, train, family, LossKind::cross_entropy, evaluate, out);
  return out;
}

TaskOutput run_task(const ExperimentConfig& config, const Task& task) {
  try {
    switch (kind_of(config.experiment)) {
      case Kind::toy:
        return run_toy_trial(config, task);
      case Kind::markov_magnitudes:
        return run_markov_trial(config, task, task.key, config.samples_per_length.front(), false);
      case Kind::markov_sample_sizes:
        return run_markov_trial(config, task, config.magnitudes.front(), static_cast<std::size_t>(task.key), true);
    }
  } catch (const std::exception& e) {
    // The trial's problem could not be built; every method fails with it.
    TaskOutput out;
    for (const auto& name : config.baselines) out.rows.push_back(error_row(task, name, e.what()));
    for (const auto& plan : config.plans) out.rows.push_back(error_row(task, "e2mixmax:" + plan.name(), e.what()));
    return out;
  }
  return {};
}

std::vector<Task> plan_tasks(const ExperimentConfig& config) {
  std::vector<double> keys{0.0};
  switch (kind_of(config.experiment)) {
    case Kind::toy:
      break;
    case Kind::markov_magnitudes:
      keys = config.magnitudes;
      break;
    case Kind::markov_sample_sizes:
      keys.assign(config.samples_per_length.begin(), config.samples_per_length.end());
      break;
  }
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t t = 0; t < config.trials; ++t) {
      tasks.push_back({i, keys[i], t, trial_seed(config.seed, i, t)});
    }
  }
  return tasks;
}

std::size_t lambda_count(const ExperimentConfig& config) {
  if (kind_of(config.experiment) != Kind::toy) return config.groups;
  const ToySetting s = toy_setting(config.experiment);
  return toy_spec(s.family, s.variant).group_count();
}

}  // namespace

const std::vector<std::string>& known_experiments() {
  static const std::vector<std::string> names{"toy_ce_mirror",    "toy_ce_shifted",    "toy_regression_a",
                                              "toy_regression_b", "markov_magnitudes", "markov_sample_sizes"};
  return names;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t key_index, std::size_t trial) {
  return derive_seed(derive_seed(master, key_index), trial);
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown_keys(j,
                      {"experiment", "seed", "trials", "groups", "vocab", "max_length", "magnitudes",
                       "samples_per_length", "test_per_length", "proxy_smoothing", "plans", "samples_per_group",
                       "shift_mode", "solver", "baselines", "output", "workers"},
                      "config");
  ExperimentConfig c;
  c.experiment = j.at("experiment").get<std::string>();
  const auto& known = known_experiments();
  if (std::find(known.begin(), known.end(), c.experiment) == known.end()) {
    throw DomainError("unknown experiment '" + c.experiment + "'");
  }
  c.seed = j.value("seed", c.seed);
  c.trials = j.value("trials", c.trials);
  c.groups = j.value("groups", c.groups);
  c.vocab = j.value("vocab", c.vocab);
  c.max_length = j.value("max_length", c.max_length);
  c.magnitudes = j.value("magnitudes", c.magnitudes);
  c.samples_per_length = j.value("samples_per_length", c.samples_per_length);
  c.test_per_length = j.value("test_per_length", c.test_per_length);
  c.proxy_smoothing = j.value("proxy_smoothing", c.proxy_smoothing);
  if (j.contains("plans")) {
    for (const auto& p : j.at("plans")) c.plans.push_back(plan_from_json(p));
  }
  c.samples_per_group = j.value("samples_per_group", c.samples_per_group);
  if (j.contains("shift_mode")) {
    const std::string mode = j.at("shift_mode").get<std::string>();
    if (mode == "no_shift") {
      c.shift_mode = ShiftMode::no_shift;
    } else if (mode == "covariate_shift") {
      c.shift_mode = ShiftMode::covariate_shift;
    } else {
      throw DomainError("unknown shift mode '" + mode + "'");
    }
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    reject_unknown_keys(s, {"step_size", "steps", "batch_size", "convergence_tol", "early_stop"}, "solver");
    c.solver.step_size = s.value("step_size", c.solver.step_size);
    c.solver.steps = s.value("steps", c.solver.steps);
    if (s.contains("batch_size") && !s.at("batch_size").is_null()) c.solver.batch_size = s.at("batch_size").get<std::size_t>();
    c.solver.convergence_tol = s.value("convergence_tol", c.solver.convergence_tol);
    c.solver.early_stop = s.value("early_stop", c.solver.early_stop);
  }
  c.solver.validate();
  c.baselines = j.value("baselines", c.baselines);
  for (const auto& b : c.baselines) {
    const BaselineName name = parse_baseline(b);
    if (name.kind == BaselineName::Kind::vertex && name.index >= lambda_count(c)) {
      throw DomainError("baseline '" + b + "' is out of range");
    }
  }
  c.output = j.value("output", c.output);
  c.workers = j.value("workers", c.workers);

  if (c.trials == 0) throw DomainError("trials must be positive");
  if (c.workers == 0) throw DomainError("workers must be positive");
  if (c.groups == 0 || c.vocab == 0 || c.max_length == 0) throw DomainError("Markov family sizes must be positive");
  if (c.magnitudes.empty() || c.samples_per_length.empty()) throw DomainError("magnitude and sample lists must be non-empty");
  for (double m : c.magnitudes) {
    if (!(m > 0.0)) throw DomainError("magnitudes must be positive");
  }
  for (std::size_t n : c.samples_per_length) {
    if (n == 0) throw DomainError("samples per length must be positive");
  }
  if (c.test_per_length == 0 || c.samples_per_group == 0) throw DomainError("sample counts must be positive");
  if (!(c.proxy_smoothing >= 0.0)) throw DomainError("proxy smoothing must be nonnegative");
  return c;
}

json ExperimentConfig::to_json() const {
  json solver_json{{"step_size", solver.step_size},
                   {"steps", solver.steps},
                   {"convergence_tol", solver.convergence_tol},
                   {"early_stop", solver.early_stop}};
  solver_json["batch_size"] = solver.batch_size ? json(*solver.batch_size) : json(nullptr);
  json plan_list = json::array();
  for (const auto& p : plans) plan_list.push_back(plan_to_json(p));
  return {{"experiment", experiment},
          {"seed", seed},
          {"trials", trials},
          {"groups", groups},
          {"vocab", vocab},
          {"max_length", max_length},
          {"magnitudes", magnitudes},
          {"samples_per_length", samples_per_length},
          {"test_per_length", test_per_length},
          {"proxy_smoothing", proxy_smoothing},
          {"plans", plan_list},
          {"samples_per_group", samples_per_group},
          {"shift_mode", shift_mode == ShiftMode::no_shift ? "no_shift" : "covariate_shift"},
          {"solver", solver_json},
          {"baselines", baselines},
          {"output", output},
          {"workers", workers}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DomainError(path.string() + ": " + e.what());
  }
  if (j.contains("config") && j.contains("version")) return ExperimentConfig::from_json(j.at("config"));
  return ExperimentConfig::from_json(j);
}

std::string ExperimentResult::csv() const {
  const Kind kind = kind_of(config.experiment);
  const std::size_t k = lambda_count(config);
  std::ostringstream out;
  if (kind == Kind::markov_magnitudes) out << "magnitude,";
  if (kind == Kind::markov_sample_sizes) out << "samples_per_length,";
  out << "trial,method";
  for (std::size_t p = 1; p <= k; ++p) out << ",lambda_" << p;
  out << ",objective,worst_group_loss";
  if (kind == Kind::toy) out << ",worst_group_accuracy";
  out << ",converged,final_change,status\n";

  for (const ResultRow& row : rows) {
    if (kind == Kind::markov_magnitudes) out << format_double(row.key) << ',';
    if (kind == Kind::markov_sample_sizes) out << static_cast<std::size_t>(row.key) << ',';
    out << row.trial << ',' << csv_field(row.method);
    for (std::size_t p = 0; p < k; ++p) {
      out << ',';
      if (row.ok() && p < row.weights.size()) out << format_double(row.weights[p]);
    }
    out << ',';
    if (row.ok()) out << format_double(row.objective);
    out << ',';
    if (row.ok()) out << format_double(row.worst_group_loss);
    if (kind == Kind::toy) {
      out << ',';
      if (row.ok() && row.worst_group_accuracy) out << format_double(*row.worst_group_accuracy);
    }
    out << ',';
    if (row.ok() && row.converged) out << (*row.converged ? "true" : "false");
    out << ',';
    if (row.ok() && row.final_change) out << format_double(*row.final_change);
    out << ',' << csv_field(row.status) << '\n';
  }
  return out.str();
}

std::string ExperimentResult::summary_csv() const {
  const Kind kind = kind_of(config.experiment);
  struct Moments {
    std::size_t n = 0;
    double mean_obj = 0.0, m2_obj = 0.0, mean_worst = 0.0, m2_worst = 0.0;
    void add(double obj, double worst) {
      ++n;
      const double d_obj = obj - mean_obj;
      mean_obj += d_obj / static_cast<double>(n);
      m2_obj += d_obj * (obj - mean_obj);
      const double d_worst = worst - mean_worst;
      mean_worst += d_worst / static_cast<double>(n);
      m2_worst += d_worst * (worst - mean_worst);
    }
  };
  // Keep first-appearance order of (key, method).
  std::vector<std::pair<std::pair<double, std::string>, Moments>> groups;
  for (const ResultRow& row : rows) {
    const auto id = std::make_pair(row.key, row.method);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == id; });
    if (it == groups.end()) {
      groups.push_back({id, {}});
      it = std::prev(groups.end());
    }
    if (row.ok()) it->second.add(row.objective, row.worst_group_loss);
  }

  std::ostringstream out;
  if (kind == Kind::markov_magnitudes) out << "magnitude,";
  if (kind == Kind::markov_sample_sizes) out << "samples_per_length,";
  out << "method,trials,objective_mean,objective_sd,worst_group_loss_mean,worst_group_loss_sd\n";
  for (const auto& [id, m] : groups) {
    if (kind == Kind::markov_magnitudes) out << format_double(id.first) << ',';
    if (kind == Kind::markov_sample_sizes) out << static_cast<std::size_t>(id.first) << ',';
    out << csv_field(id.second) << ',' << m.n << ',';
    if (m.n > 0) out << format_double(m.mean_obj);
    out << ',';
    if (m.n > 1) out << format_double(std::sqrt(m.m2_obj / static_cast<double>(m.n - 1)));
    out << ',';
    if (m.n > 0) out << format_double(m.mean_worst);
    out << ',';
    if (m.n > 1) out << format_double(std::sqrt(m.m2_worst / static_cast<double>(m.n - 1)));
    out << '\n';
  }
  return out.str();
}

json ExperimentResult::manifest() const {
  return {{"config", config.to_json()}, {"seeds", seeds}, {"version", kVersion}, {"timestamp", now_utc()}};
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t workers) {
  if (workers == 0) workers = config.workers;
  const std::vector<Task> tasks = plan_tasks(config);
  std::vector<TaskOutput> outputs(tasks.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) outputs[i] = run_task(config, tasks[i]);
  };
  const std::size_t n_threads = std::min(workers, tasks.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  ExperimentResult result;
  result.config = config;
  result.seeds = json::array();
  json trials = json::array();
  const bool markov = kind_of(config.experiment) != Kind::toy;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    json entry{{"trial", t.trial}, {"seed", t.seed}};
    if (markov) entry["key"] = t.key;
    result.seeds.push_back(entry);
    for (auto& row : outputs[i].rows) result.rows.push_back(std::move(row));
    if (!outputs[i].artifact.is_null()) {
      json a = std::move(outputs[i].artifact);
      a["trial"] = t.trial;
      a["seed"] = t.seed;
      if (markov) a["key"] = t.key;
      trials.push_back(std::move(a));
    }
  }
  result.artifacts = {
      {"experiment", config.experiment},
      {"notes",
       {"Proxies are smoothed transition counts (sequences) or histograms with Gaussian KDE densities (toys), not "
        "trained neural models.",
        "DoReMi and group-DRO model training are not compared: both need trained neural proxies."}},
      {"trials", std::move(trials)}};
  return result;
}

OutputPaths write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem = result.config.experiment;
  OutputPaths paths{dir / (stem + ".csv"), dir / (stem + ".summary.csv"), dir / (stem + ".manifest.json"),
                    dir / (stem + ".artifacts.json")};
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DomainError("cannot write " + p.string());
    out << text;
  };
  write(paths.csv, result.csv());
  write(paths.summary, result.summary_csv());
  write(paths.manifest, result.manifest().dump(2) + "\n");
  write(paths.artifacts, result.artifacts.dump(2) + "\n");
  return paths;
}

}  // namespace mixmax
