#include "psrl/cli.hpp"

#include "psrl/diagnostics.hpp"
#include "psrl/environments.hpp"
#include "psrl/learner.hpp"
#include "psrl/model_io.hpp"
#include "psrl/multiagent.hpp"
#include "psrl/planner.hpp"
#include "psrl/trajectory_prob.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace psrl {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

/// Bad flags, bad config files, or inconsistent settings (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config_path;
  std::string out_dir;
  int seeds = 0;
  int k = 0;
  double planner_eps = 0;
  int jobs = 1;
  std::uint64_t seed_base = 0;
  int episodes = 0;
  double threshold = 0;
  bool posterior_csv = false;

  std::string env;
  std::string model_path;
  double theta = 0;
  std::string theta_star;
  int horizon = 0;
  double beta = 0;
  int dials = 0;
  double lock_eps = 0;
  std::string secret;
  int states = 0, actions = 0, obs = 0;
  std::uint64_t model_seed = 0;
  double alpha_min = 0;
  bool identity_obs = false;
  double grid_lo = 0, grid_hi = 0;
  int grid_count = 0;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_path, "JSON config; explicit flags override it");
  sub->add_option("--out", f.out_dir, "output directory");
  sub->add_option("--seeds", f.seeds, "number of seeds (runs)")->check(CLI::PositiveNumber);
  sub->add_option("--k", f.k, "episodes per run")->check(CLI::NonNegativeNumber);
  sub->add_option("--planner-eps", f.planner_eps, "planner error budget")->check(CLI::NonNegativeNumber);
  sub->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed-base", f.seed_base, "first seed value");
}

void add_env(CLI::App* sub, Flags& f) {
  sub->add_option("--env", f.env, "tiger | lock | random | file | models | coordination");
  sub->add_option("--model", f.model_path, "model JSON file (implies --env file)");
  sub->add_option("--theta", f.theta, "tiger hearing parameter");
  sub->add_option("--horizon", f.horizon, "episode length")->check(CLI::PositiveNumber);
  sub->add_option("--beta", f.beta, "tiger reward discount");
  sub->add_option("--dials", f.dials, "lock action count");
  sub->add_option("--lock-eps", f.lock_eps, "lock signal gap");
  sub->add_option("--secret", f.secret, "lock secret, comma separated");
  sub->add_option("--states", f.states, "random model state count");
  sub->add_option("--actions", f.actions, "random model action count");
  sub->add_option("--obs", f.obs, "random model observation count");
  sub->add_option("--model-seed", f.model_seed, "random model seed");
  sub->add_option("--alpha-min", f.alpha_min, "random model revealing screen");
  sub->add_flag("--identity-obs", f.identity_obs, "random model with Z = I");
}

void add_family(CLI::App* sub, Flags& f) {
  add_env(sub, f);
  sub->add_option("--theta-star", f.theta_star, "true parameter (comma separated) or 'draw'");
  sub->add_option("--grid-lo", f.grid_lo, "tiger grid lower end");
  sub->add_option("--grid-hi", f.grid_hi, "tiger grid upper end");
  sub->add_option("--grid-count", f.grid_count, "tiger grid size")->check(CLI::PositiveNumber);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("cannot parse '{}' as a number list", text));
    }
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

json default_config(const std::string& command) {
  json cfg = {{"command", command},
              {"K", 20},
              {"seeds", 1},
              {"seed_base", 0},
              {"planner_eps", 0.0},
              {"jobs", 1},
              {"eval", {{"exact_cap", 100000}, {"mc_rollouts", 10000}}}};
  const json tiger_env = {{"family", "tiger"}, {"theta", 0.3}, {"horizon", 10}, {"beta", 0.99}};
  const json tiger_family_env = {{"family", "tiger"},
                                 {"horizon", 10},
                                 {"beta", 0.99},
                                 {"grid", {{"lo", 0.1}, {"hi", 0.5}, {"count", 41}}}};
  if (command == "solve" || command == "make-env") {
    cfg["env"] = tiger_env;
  } else if (command == "simulate") {
    cfg["env"] = tiger_env;
    cfg["episodes"] = 10;
  } else if (command == "learn") {
    cfg["env"] = tiger_family_env;
    cfg["theta_star"] = json::array({0.3});
    cfg["posterior_csv"] = false;
  } else if (command == "learn-ma") {
    cfg["env"] = {{"family", "coordination"}};
    cfg["theta_star"] = json::array({1});
    cfg["K"] = 50;
  } else if (command == "diagnose") {
    cfg["env"] = tiger_env;
    cfg["threshold"] = 0.1;
    cfg["seeds"] = 20;
    cfg["sweeps"] = 1000;
  } else if (command == "replicate-tiger") {
    cfg["env"] = tiger_family_env;
    cfg["theta_stars"] = json::array({0.2, 0.3, 0.4});
    cfg["K"] = 100;
    cfg["seeds"] = 20;
  } else if (command == "replicate-lock") {
    cfg["env"] = {{"family", "lock"}, {"dials", 2}, {"horizon", 3}, {"epsilon", 0.25}};
    cfg["K"] = 64;
    cfg["seeds"] = 200;
  }
  return cfg;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
}

json effective_config(const std::string& command, const CLI::App& sub, const Flags& f) {
  json cfg = default_config(command);
  if (!f.config_path.empty()) {
    json file = read_json_file(f.config_path);
    if (!file.is_object()) throw ConfigError("config must be a JSON object");
    if (file.contains("command") && file["command"] != command)
      throw ConfigError(fmt::format("config is for '{}', not '{}'", file["command"].dump(), command));
    if (file.contains("env") && file["env"].is_object() && file["env"].contains("family") &&
        file["env"]["family"] != cfg["env"].value("family", ""))
      cfg["env"] = json::object();
    cfg.merge_patch(file);
  }
  auto given = [&sub](const char* name) { return sub.count(name) > 0; };
  if (given("--out")) cfg["out"] = f.out_dir;
  if (given("--seeds")) cfg["seeds"] = f.seeds;
  if (given("--k")) cfg["K"] = f.k;
  if (given("--planner-eps")) cfg["planner_eps"] = f.planner_eps;
  if (given("--jobs")) cfg["jobs"] = f.jobs;
  if (given("--seed-base")) cfg["seed_base"] = f.seed_base;
  if (sub.get_option_no_throw("--episodes") && given("--episodes")) cfg["episodes"] = f.episodes;
  if (sub.get_option_no_throw("--threshold") && given("--threshold")) cfg["threshold"] = f.threshold;
  if (sub.get_option_no_throw("--posterior-csv") && given("--posterior-csv")) cfg["posterior_csv"] = f.posterior_csv;

  if (!sub.get_option_no_throw("--env")) return cfg;
  json& env = cfg["env"];
  std::string family = f.env;
  if (given("--model")) {
    if (given("--env") && f.env != "file") throw ConfigError("--model conflicts with --env");
    family = "file";
  }
  if (!family.empty() && family != env.value("family", "")) env = {{"family", family}};
  if (given("--model")) env["path"] = f.model_path;
  if (given("--theta")) env["theta"] = f.theta;
  if (given("--horizon")) env["horizon"] = f.horizon;
  if (given("--beta")) env["beta"] = f.beta;
  if (given("--dials")) env["dials"] = f.dials;
  if (given("--lock-eps")) env["epsilon"] = f.lock_eps;
  if (given("--secret")) {
    json secret = json::array();
    for (double x : parse_list(f.secret)) secret.push_back(static_cast<int>(x));
    env["secret"] = secret;
  }
  if (given("--states")) env["states"] = f.states;
  if (given("--actions")) env["actions"] = f.actions;
  if (given("--obs")) env["obs"] = f.obs;
  if (given("--model-seed")) env["seed"] = f.model_seed;
  if (given("--alpha-min")) env["alpha_min"] = f.alpha_min;
  if (given("--identity-obs")) env["identity_obs"] = f.identity_obs;

  if (!sub.get_option_no_throw("--theta-star")) return cfg;
  if (given("--grid-lo") || given("--grid-hi") || given("--grid-count")) {
    json grid = env.contains("grid") && env["grid"].is_object() ? env["grid"] : json{{"lo", 0.1}, {"hi", 0.5}, {"count", 41}};
    if (given("--grid-lo")) grid["lo"] = f.grid_lo;
    if (given("--grid-hi")) grid["hi"] = f.grid_hi;
    if (given("--grid-count")) grid["count"] = f.grid_count;
    env["grid"] = grid;
  }
  if (given("--theta-star")) {
    if (f.theta_star == "draw") {
      cfg["theta_star"] = "draw";
    } else {
      const std::vector<double> values = parse_list(f.theta_star);
      if (command == "replicate-tiger") {
        cfg["theta_stars"] = values;
      } else {
        cfg["theta_star"] = values;
      }
    }
  }
  return cfg;
}

template <typename T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(fmt::format("missing config field '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config field '{}' has the wrong type", key));
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? get<T>(j, key) : fallback;
}

PomdpModel build_model(const json& env) {
  const std::string family = get<std::string>(env, "family");
  PomdpModel m;
  if (family == "tiger") {
    m = make_tiger({get_or(env, "theta", 0.3), get_or(env, "horizon", 10), get_or(env, "beta", 0.99)});
  } else if (family == "lock") {
    const int H = get_or(env, "horizon", 2);
    LockSpec spec{get_or(env, "dials", 2), H, get_or(env, "epsilon", 0.25),
                  get_or(env, "secret", std::vector<int>(std::max(H - 1, 0), 0))};
    m = make_lock(spec);
  } else if (family == "random") {
    RandomModelSpec spec;
    spec.num_states = get_or(env, "states", 2);
    spec.num_actions = get_or(env, "actions", 2);
    spec.num_obs = get_or(env, "obs", 2);
    spec.horizon = get_or(env, "horizon", 2);
    if (env.contains("alpha_min")) spec.alpha_min = get<double>(env, "alpha_min");
    spec.identity_obs = get_or(env, "identity_obs", false);
    m = make_random(spec, get_or<std::uint64_t>(env, "seed", 0));
  } else if (family == "file") {
    m = model_from_json(read_json_file(get<std::string>(env, "path")));
  } else {
    throw ConfigError(fmt::format("unknown environment '{}'", family));
  }
  const auto violations = validate_model(m);
  if (!violations.empty()) throw ConfigError("invalid model: " + violations.front().message);
  return m;
}

FamilyWithPrior build_family(const json& env) {
  const std::string family = get<std::string>(env, "family");
  if (family == "tiger") {
    std::vector<Eigen::VectorXd> grid;
    const json g = env.contains("grid") ? env["grid"] : json{{"lo", 0.1}, {"hi", 0.5}, {"count", 41}};
    if (g.is_array()) {
      for (double x : g.get<std::vector<double>>()) grid.push_back(Eigen::VectorXd::Constant(1, x));
    } else {
      grid = linspace_grid(get<double>(g, "lo"), get<double>(g, "hi"), get<int>(g, "count"));
    }
    return tiger_family(get_or(env, "horizon", 10), get_or(env, "beta", 0.99), std::move(grid));
  }
  if (family == "lock") return lock_family(get_or(env, "dials", 2), get_or(env, "horizon", 2), get_or(env, "epsilon", 0.25));
  if (family == "models") {
    std::vector<PomdpModel> models;
    for (const auto& path : get<std::vector<std::string>>(env, "paths"))
      models.push_back(model_from_json(read_json_file(path)));
    std::vector<Eigen::VectorXd> grid;
    for (std::size_t i = 0; i < models.size(); ++i) grid.push_back(Eigen::VectorXd::Constant(1, double(i)));
    return {std::make_shared<ModelListFamily>(std::move(models)), GridPosterior::uniform(std::move(grid))};
  }
  throw ConfigError(fmt::format("unknown learning family '{}'", family));
}

/// nullopt means "draw from the prior".
std::optional<Eigen::VectorXd> theta_star_of(const json& cfg, const ParamFamily& fam) {
  const json& ts = cfg.at("theta_star");
  if (ts.is_string()) {
    if (ts.get<std::string>() != "draw") throw ConfigError("theta_star must be a number list or \"draw\"");
    return std::nullopt;
  }
  std::vector<double> v = ts.is_number() ? std::vector<double>{ts.get<double>()} : ts.get<std::vector<double>>();
  Eigen::VectorXd theta = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  try {
    fam.check_bounds(theta);
  } catch (const std::out_of_range& e) {
    throw ConfigError(e.what());
  }
  return theta;
}

std::string num(double x) { return fmt::format("{}", x); }

fs::path prepare_out(const json& cfg) {
  const fs::path dir = cfg.value("out", std::string("."));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError(fmt::format("cannot create output directory '{}'", dir.string()));
  std::ofstream(dir / "config_echo.json") << cfg.dump(2) << "\n";
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

void check_ranges(const json& cfg) {
  if (get<int>(cfg, "K") < 0) throw ConfigError("K must be nonnegative");
  if (get<int>(cfg, "seeds") < 1) throw ConfigError("seeds must be >= 1");
  if (get<int>(cfg, "jobs") < 1) throw ConfigError("jobs must be >= 1");
  if (!(get<double>(cfg, "planner_eps") >= 0)) throw ConfigError("planner_eps must be nonnegative");
}

LearnerOptions learner_options(const json& cfg) {
  LearnerOptions opts;
  const json eval = cfg.value("eval", json::object());
  opts.eval.exact_node_cap = get_or<std::int64_t>(eval, "exact_cap", 100000);
  opts.eval.mc_rollouts = get_or(eval, "mc_rollouts", 10000);
  opts.cache = std::make_shared<PlanCache>();
  return opts;
}

// ---- subcommands ----

int run_solve(const json& cfg, std::ostream& out) {
  const PomdpModel m = build_model(cfg["env"]);
  PlannerOptions opts;
  opts.epsilon = get<double>(cfg, "planner_eps");
  const AlphaSolution sol = solve_alpha(m, opts);
  const fs::path dir = prepare_out(cfg);
  write_file(dir / "alpha.json", alpha_set_to_json(sol.policy->alphas()).dump() + "\n");
  json summary = {{"value", sol.value}, {"epsilon", opts.epsilon}};
  out << "value " << num(sol.value) << "\n";
  if (get<std::string>(cfg["env"], "family") == "tiger") {
    const double raw = kTigerRewardScale.raw_return(sol.value, m.horizon);
    summary["raw_value"] = raw;
    out << "raw_value " << num(raw) << "\n";
  }
  write_file(dir / "solve.json", summary.dump(2) + "\n");
  return 0;
}

int run_make_env(const json& cfg, std::ostream& out) {
  const PomdpModel m = build_model(cfg["env"]);
  const std::string text = model_to_json(m).dump() + "\n";
  const fs::path dir = prepare_out(cfg);
  write_file(dir / "model.json", text);
  out << text;
  return 0;
}

int run_simulate(const json& cfg, std::ostream& out) {
  const PomdpModel m = build_model(cfg["env"]);
  const AlphaSolution sol = solve_alpha(m, get<double>(cfg, "planner_eps"));
  const int n = get<int>(cfg, "episodes");
  if (n < 1) throw ConfigError("episodes must be >= 1");
  Rng rng(get<std::uint64_t>(cfg, "seed_base"));
  std::string csv = "episode,return,trajectory\n";
  double mean = 0;
  for (int e = 0; e < n; ++e) {
    const Trajectory tau = sample_episode(m, *sol.policy, rng);
    double ret = 0;
    for (int h = 0; h < m.horizon; ++h) ret += m.reward(h, tau.obs[h], tau.actions[h]);
    mean += ret / n;
    csv += fmt::format("{},{},{}\n", e, ret, fmt::join(tau.flatten(), " "));
  }
  const fs::path dir = prepare_out(cfg);
  write_file(dir / "trajectories.csv", csv);
  out << "planner_value " << num(sol.value) << "\n";
  out << "exact_value " << num(policy_value_exact(m, *sol.policy)) << "\n";
  out << "sample_mean " << num(mean) << "\n";
  return 0;
}

std::string learn_header(int dim, const std::string& extra) {
  std::string h = "seed,k";
  for (int i = 0; i < dim; ++i) h += fmt::format(",theta_sample_{}", i);
  return h + ",planner_value,true_value,regret,cum_regret" + extra + "\n";
}

int run_learn_common(const json& cfg, std::ostream& out, bool multi) {
  check_ranges(cfg);
  const json& env = cfg["env"];
  std::shared_ptr<const MaParamFamily> ma_family;
  GridPosterior prior;
  if (multi && get<std::string>(env, "family") == "coordination") {
    MaFamilyWithPrior fp = coordination_family();
    ma_family = fp.family;
    prior = std::move(fp.prior);
  } else {
    FamilyWithPrior fp = build_family(env);
    ma_family = std::make_shared<SingleAgentFamily>(fp.family);
    prior = std::move(fp.prior);
  }
  const ParamFamily& fam = *ma_family;
  const std::optional<Eigen::VectorXd> fixed_star = theta_star_of(cfg, fam);
  const int K = get<int>(cfg, "K"), seeds = get<int>(cfg, "seeds"), jobs = get<int>(cfg, "jobs");
  const auto base = get<std::uint64_t>(cfg, "seed_base");
  const bool want_posterior = !multi && cfg.value("posterior_csv", false);
  const LearnerOptions shared = learner_options(cfg);
  const Planner planner = multi ? Planner{} : alpha_planner(get<double>(cfg, "planner_eps"));
  const std::vector<int> obs_sizes = ma_family->obs_sizes(), action_sizes = ma_family->action_sizes();

  std::vector<std::string> rows(seeds), posterior_rows(seeds);
  std::vector<double> finals(seeds);
  parallel_for(seeds, jobs, [&](int r) {
    const std::uint64_t seed = base + static_cast<std::uint64_t>(r);
    Rng rng(seed);
    const Eigen::VectorXd theta_star = fixed_star ? *fixed_star : prior.points[posterior_sample(prior, rng)];
    LearnerOptions opts = shared;
    std::ostringstream post_csv;
    if (want_posterior)
      opts.on_posterior = [&](int k, const GridPosterior& p) { write_posterior_csv(post_csv, k, p, false); };
    const LearningLog log =
        multi ? ps4mapomdps_run(*ma_family, prior, theta_star, K, rng, opts)
              : ps4pomdps_run(fam, prior, theta_star, K, planner, rng, opts);
    const RegretSeries series = freq_regret(log);
    std::string text;
    for (std::size_t i = 0; i < log.episodes.size(); ++i) {
      const EpisodeRecord& e = log.episodes[i];
      text += fmt::format("{},{}", seed, e.k);
      for (Eigen::Index c = 0; c < e.theta_sample.size(); ++c) text += "," + num(e.theta_sample(c));
      text += fmt::format(",{},{},{},{}", log.scale.raw_return(e.planner_value, log.horizon),
                          log.scale.raw_return(e.true_value, log.horizon), log.scale.raw_difference(e.regret),
                          series.cumulative[i]);
      if (multi) {
        for (std::size_t a = 0; a < obs_sizes.size(); ++a) {
          std::vector<int> own_obs, own_act;
          for (int h = 0; h < log.horizon; ++h) {
            own_obs.push_back(decode_joint(e.trajectory.obs[h], obs_sizes)[a]);
            own_act.push_back(decode_joint(e.trajectory.actions[h], action_sizes)[a]);
          }
          text += fmt::format(",{},{}", fmt::join(own_obs, " "), fmt::join(own_act, " "));
        }
      }
      text += "\n";
    }
    rows[r] = std::move(text);
    posterior_rows[r] = post_csv.str();
    finals[r] = series.cumulative.empty() ? 0.0 : series.cumulative.back();
  });

  std::string extra;
  if (multi)
    for (std::size_t a = 0; a < obs_sizes.size(); ++a) extra += fmt::format(",obs_agent_{},act_agent_{}", a, a);
  std::string csv = learn_header(fam.dim(), extra);
  for (const auto& r : rows) csv += r;
  const fs::path dir = prepare_out(cfg);
  write_file(dir / (multi ? "learn_ma.csv" : "learn.csv"), csv);
  if (want_posterior) {
    std::string post = "seed,k,index";
    for (int i = 0; i < fam.dim(); ++i) post += fmt::format(",theta_{}", i);
    post += ",weight\n";
    std::string body;
    for (int r = 0; r < seeds; ++r) {
      std::istringstream lines(posterior_rows[r]);
      for (std::string line; std::getline(lines, line);) body += fmt::format("{},{}\n", base + r, line);
    }
    write_file(dir / "posterior.csv", post + body);
  }
  for (int r = 0; r < seeds; ++r) out << fmt::format("seed {} cum_regret {}\n", base + r, finals[r]);
  return 0;
}

int run_replicate_tiger(const json& cfg, std::ostream& out) {
  check_ranges(cfg);
  const FamilyWithPrior fp = build_family(cfg["env"]);
  const auto stars = get<std::vector<double>>(cfg, "theta_stars");
  const int K = get<int>(cfg, "K"), seeds = get<int>(cfg, "seeds"), jobs = get<int>(cfg, "jobs");
  const auto base = get<std::uint64_t>(cfg, "seed_base");
  const LearnerOptions opts = learner_options(cfg);
  const Planner planner = alpha_planner(get<double>(cfg, "planner_eps"));

  const int runs = static_cast<int>(stars.size()) * seeds;
  std::vector<RegretSeries> series(runs);
  std::vector<std::vector<double>> regrets(runs);
  parallel_for(runs, jobs, [&](int r) {
    const int t = r / seeds, s = r % seeds;
    Rng rng(base + static_cast<std::uint64_t>(s));
    const Eigen::VectorXd star = Eigen::VectorXd::Constant(1, stars[t]);
    fp.family->check_bounds(star);
    const LearningLog log = ps4pomdps_run(*fp.family, fp.prior, star, K, planner, rng, opts);
    series[r] = freq_regret(log);
    regrets[r] = log.raw_regrets();
  });

  std::string csv = "theta_star,seed,k,regret,cum_regret,reg_over_k,reg_over_sqrt_k\n";
  std::string summary = "theta_star,k,mean_cum_regret,mean_reg_over_k,mean_reg_over_sqrt_k\n";
  for (std::size_t t = 0; t < stars.size(); ++t) {
    std::vector<double> mean_cum(K, 0.0), mean_k(K, 0.0), mean_sqrt(K, 0.0);
    for (int s = 0; s < seeds; ++s) {
      const int r = static_cast<int>(t) * seeds + s;
      for (int k = 0; k < K; ++k) {
        csv += fmt::format("{},{},{},{},{},{},{}\n", stars[t], base + s, k + 1, regrets[r][k], series[r].cumulative[k],
                           series[r].per_episode[k], series[r].per_sqrt[k]);
        mean_cum[k] += series[r].cumulative[k] / seeds;
        mean_k[k] += series[r].per_episode[k] / seeds;
        mean_sqrt[k] += series[r].per_sqrt[k] / seeds;
      }
    }
    for (int k = 0; k < K; ++k)
      summary += fmt::format("{},{},{},{},{}\n", stars[t], k + 1, mean_cum[k], mean_k[k], mean_sqrt[k]);
    if (K >= 1) {
      const int early = std::min(K, 10) - 1;
      out << fmt::format("theta_star {}: Reg/K at k={} is {}, at k={} is {}\n", stars[t], early + 1, mean_k[early], K,
                         mean_k[K - 1]);
    }
  }
  const fs::path dir = prepare_out(cfg);
  write_file(dir / "tiger_regret.csv", csv);
  write_file(dir / "tiger_summary.csv", summary);
  return 0;
}

int run_replicate_lock(const json& cfg, std::ostream& out) {
  check_ranges(cfg);
  const json& env = cfg["env"];
  if (get<std::string>(env, "family") != "lock") throw ConfigError("replicate-lock needs the lock family");
  const FamilyWithPrior fp = build_family(env);
  const int K = get<int>(cfg, "K"), draws = get<int>(cfg, "seeds");
  const int A = get_or(env, "dials", 2), H = get_or(env, "horizon", 2);
  Rng rng(get<std::uint64_t>(cfg, "seed_base"));
  const BayesRegretEstimate est = bayes_regret(*fp.family, fp.prior, K, draws,
                                               alpha_planner(get<double>(cfg, "planner_eps")), rng,
                                               learner_options(cfg), get<int>(cfg, "jobs"));
  const double bound = std::sqrt(std::pow(double(A), H - 1) * K) / 20.0;
  const bool holds = est.mean >= bound - 2 * est.std_error;
  const json report = {{"mean", est.mean}, {"std_error", est.std_error}, {"bound", bound}, {"holds", holds},
                       {"draws", draws}, {"K", K}};
  std::string csv = "draw,cum_regret\n";
  for (std::size_t d = 0; d < est.samples.size(); ++d) csv += fmt::format("{},{}\n", d, est.samples[d]);
  const fs::path dir = prepare_out(cfg);
  write_file(dir / "lock_regret.json", report.dump(2) + "\n");
  write_file(dir / "lock_draws.csv", csv);
  out << fmt::format("bayes_regret {} std_error {} bound {} holds {}\n", est.mean, est.std_error, bound, holds);
  return 0;
}

int run_diagnose(const json& cfg, std::ostream& out) {
  check_ranges(cfg);
  const PomdpModel m = build_model(cfg["env"]);
  const int sweeps = get_or(cfg, "sweeps", 1000);
  Rng rng(get<std::uint64_t>(cfg, "seed_base"));
  json report;
  const RevealingReport rev = check_revealing(m, get<double>(cfg, "threshold"));
  report["revealing"] = to_json(rev);

  if (rev.pass && m.horizon > 1) {
    double worst = 0;
    std::vector<Trajectory> taus;
    for (int i = 0; i < 50; ++i) {
      Trajectory tau;
      for (int h = 0; h < m.horizon; ++h) {
        tau.obs.push_back(static_cast<int>(rng() % m.num_obs));
        tau.actions.push_back(static_cast<int>(rng() % m.num_actions));
      }
      worst = std::max(worst, std::abs(env_prob_oop(m, tau) - env_prob_matrix(m, tau)));
    }
    report["observable_operators"] = {{"max_abs_diff", worst}, {"tolerance", 1e-8}, {"pass", worst <= 1e-8}};
  }

  int hell_fail = 0, ell_fail = 0, idx_fail = 0;
  for (int i = 0; i < sweeps; ++i) {
    const int n = 2 + static_cast<int>(rng() % 5);
    hell_fail += !hellinger_tv_check(random_simplex(n, rng), random_simplex(n, rng)).pass;

    const int d = 1 + static_cast<int>(rng() % 5), K = 1 + static_cast<int>(rng() % 50);
    std::vector<Eigen::VectorXd> xs, ws;
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXd x(d), w(d);
      for (int c = 0; c < d; ++c) {
        x(c) = standard_normal(rng);
        w(c) = standard_normal(rng);
      }
      xs.push_back(x * (uniform01(rng) / std::max(1.0, x.norm())));
      ws.push_back(w / std::max(1.0, w.norm()));
    }
    ell_fail += !elliptical_potential_check(xs, 0.5 + uniform01(rng)).pass;
    IndexChangeInstance inst{xs, ws, 1.0, 1.0, realized_beta(xs, ws), 0.5 + uniform01(rng)};
    idx_fail += !index_change_check(inst).pass;
  }
  report["hellinger_tv"] = {{"instances", sweeps}, {"failures", hell_fail}};
  report["elliptical_potential"] = {{"instances", sweeps}, {"failures", ell_fail}};
  report["index_change"] = {{"instances", sweeps}, {"failures", idx_fail}};

  const FamilyWithPrior lock = lock_family(2, 2, 0.25);
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < get<int>(cfg, "seeds"); ++s) seeds.push_back(get<std::uint64_t>(cfg, "seed_base") + s);
  const Step1Report step1 = lemma_step1_check(*lock.family, lock.prior, Eigen::VectorXd::Constant(1, 1.0),
                                              std::max(1, get<int>(cfg, "K")), seeds, alpha_planner(0.0), 0,
                                              2'000'000, get<int>(cfg, "jobs"));
  report["confidence_set"] = to_json(step1);

  const fs::path dir = prepare_out(cfg);
  write_file(dir / "diagnose.json", report.dump(2) + "\n");
  out << report.dump(2) << "\n";
  return 0;
}

void configure_logging() {
  auto logger = spdlog::get("psrl");
  if (!logger) {
    logger = spdlog::stderr_color_mt("psrl");
    spdlog::set_default_logger(logger);
  }
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("PSRL_LOG")) level = spdlog::level::from_str(env);
  spdlog::set_level(level);
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out) {
  configure_logging();
  CLI::App app{"Posterior-sampling reinforcement learning for episodic POMDPs"};
  app.require_subcommand(1);
  Flags f;
  struct Command {
    const char* name;
    const char* help;
    bool env;
    bool family;
  };
  const Command commands[] = {
      {"solve", "plan a model and print its optimal value", true, false},
      {"simulate", "plan a model and sample episodes with the plan", true, false},
      {"learn", "run the posterior-sampling learner over seeds", true, true},
      {"learn-ma", "run the multi-agent learner over seeds", true, true},
      {"diagnose", "run the diagnostic checks", true, false},
      {"make-env", "emit an environment as model JSON", true, false},
      {"replicate-tiger", "frequentist regret on Tiger for several true parameters", true, true},
      {"replicate-lock", "Bayesian regret on the combination lock", true, true},
  };
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, f);
    if (c.family) {
      add_family(sub, f);
    } else if (c.env) {
      add_env(sub, f);
    }
    if (std::string(c.name) == "simulate") sub->add_option("--episodes", f.episodes, "episodes to sample");
    if (std::string(c.name) == "diagnose") sub->add_option("--threshold", f.threshold, "revealing threshold");
    if (std::string(c.name) == "learn") sub->add_flag("--posterior-csv", f.posterior_csv, "write posterior snapshots");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    const json cfg = effective_config(command, *sub, f);
    spdlog::info("running {}", command);
    if (command == "solve") return run_solve(cfg, out);
    if (command == "simulate") return run_simulate(cfg, out);
    if (command == "learn") return run_learn_common(cfg, out, false);
    if (command == "learn-ma") return run_learn_common(cfg, out, true);
    if (command == "diagnose") return run_diagnose(cfg, out);
    if (command == "make-env") return run_make_env(cfg, out);
    if (command == "replicate-tiger") return run_replicate_tiger(cfg, out);
    if (command == "replicate-lock") return run_replicate_lock(cfg, out);
    throw ConfigError("unknown subcommand " + command);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cli_main(args, std::cout);
}

}  // namespace psrl
