#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <iostream>
#include <string>

#include "rlsmc/checkpoint.hpp"
#include "rlsmc/config.hpp"
#include "rlsmc/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::string init_csv;
  long long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file");
  cmd->add_option("--preset", args.preset,
                  "bundled preset (paper-msd, desk-msd); default paper-msd");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--init", args.init_csv,
                  "initial state as comma-separated floats, e.g. 2,-1");
  cmd->add_option("--seed", args.seed, "RNG seed override");
}

rlsmc::ExperimentConfig resolve_config(const CommonArgs& args) {
  rlsmc::ExperimentConfig config =
      args.config_path.empty()
          ? rlsmc::preset_config(args.preset.empty() ? "paper-msd" : args.preset)
          : rlsmc::load_config(args.config_path);
  if (!args.config_path.empty() && !args.preset.empty())
    throw rlsmc::ConfigError("--config and --preset are mutually exclusive");
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  if (!args.init_csv.empty()) {
    config.init = rlsmc::parse_double_list(args.init_csv);
    config.init_hat = config.init;
  }
  config.validate();
  return config;
}

rlsmc::StateVector to_state(const std::vector<double>& v) {
  return Eigen::Map<const rlsmc::StateVector>(v.data(),
                                              static_cast<Eigen::Index>(v.size()));
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

int cmd_train(const CommonArgs& common, long long episodes, double alpha_a,
              double alpha_c) {
  rlsmc::ExperimentConfig config = resolve_config(common);
  if (episodes >= 0) config.hyper.episodes = static_cast<int>(episodes);
  if (alpha_a >= 0.0) config.hyper.alpha_a = alpha_a;
  if (alpha_c >= 0.0) config.hyper.alpha_c = alpha_c;
  config.validate();

  fs::create_directories(config.out_dir);
  rlsmc::write_json_file(rlsmc::run_manifest(config), join(config.out_dir, "manifest.json"));

  auto sink = [&](int episode, const rlsmc::Agent& agent) {
    if (config.checkpoint_every > 0 && (episode + 1) % config.checkpoint_every == 0)
      rlsmc::write_json_file(
          rlsmc::agent_to_json(agent),
          join(config.out_dir, "checkpoint_ep" + std::to_string(episode + 1) + ".json"));
  };
  const rlsmc::TrainResult result = rlsmc::train(config, sink);

  rlsmc::write_learning_curve_csv(result.curve, join(config.out_dir, "learning_curve.csv"));
  rlsmc::write_json_file(rlsmc::agent_to_json(result.agent),
                         join(config.out_dir, "checkpoint_final.json"));
  std::cout << "trained " << result.curve.size() << " episodes, final G0 "
            << result.curve.back().g0 << "\n"
            << "wrote " << join(config.out_dir, "learning_curve.csv") << "\n"
            << "wrote " << join(config.out_dir, "checkpoint_final.json") << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& agent_arg) {
  rlsmc::ExperimentConfig config = resolve_config(common);
  fs::create_directories(config.out_dir);
  const rlsmc::StateVector init = to_state(config.init);

  rlsmc::EpisodeLog log;
  if (agent_arg == "zero") {
    log = rlsmc::evaluate_policy(rlsmc::zero_policy(), init, config);
  } else {
    const rlsmc::Agent agent =
        rlsmc::agent_from_json(rlsmc::read_json_file(agent_arg),
                               rlsmc::make_actor_spec(config),
                               rlsmc::make_critic_spec(config));
    log = rlsmc::evaluate(agent, init, config);
  }
  const std::string path = join(config.out_dir, "evaluation.csv");
  rlsmc::write_episode_csv(log, path);
  std::cout << "G0 " << log.g0 << " over " << log.steps.size() << " steps ("
            << log.termination_reason << ")\n"
            << "wrote " << path << "\n";
  return 0;
}

int cmd_simulate(const CommonArgs& common, const std::string& controller) {
  rlsmc::ExperimentConfig config = resolve_config(common);
  rlsmc::SimController mode;
  if (controller == "nominal") mode = rlsmc::SimController::Nominal;
  else if (controller == "ideal-oracle") mode = rlsmc::SimController::IdealOracle;
  else if (controller == "zero") mode = rlsmc::SimController::Zero;
  else
    throw rlsmc::ConfigError(
        "--controller must be one of nominal, ideal-oracle, zero");

  fs::create_directories(config.out_dir);
  const rlsmc::TrajectoryLog log = rlsmc::simulate(config, mode);
  const std::string path = join(config.out_dir, "trajectory.csv");
  rlsmc::write_trajectory_csv(log, path, mode == rlsmc::SimController::IdealOracle);
  std::cout << "simulated " << log.steps.size() << " records\n"
            << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliding-mode control with a learned compensation term"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, sim_args;
  long long episodes = -1;
  double alpha_a = -1.0, alpha_c = -1.0;
  std::string agent_arg = "zero";
  std::string controller = "nominal";

  CLI::App* train = app.add_subcommand("train", "run the training procedure");
  add_common(train, train_args);
  train->add_option("--episodes", episodes, "episode count override");
  train->add_option("--alpha-a", alpha_a, "actor learning-rate override");
  train->add_option("--alpha-c", alpha_c, "critic learning-rate override");

  CLI::App* eval = app.add_subcommand("eval", "noise-free evaluation episode");
  add_common(eval, eval_args);
  eval->add_option("--agent", agent_arg,
                   "'zero' for the u1=0 baseline, or a checkpoint JSON path");

  CLI::App* sim = app.add_subcommand("simulate", "analytic controllers, no learning");
  add_common(sim, sim_args);
  sim->add_option("--controller", controller, "nominal | ideal-oracle | zero");

  std::function<int()> action;
  train->callback([&] { action = [&] { return cmd_train(train_args, episodes, alpha_a, alpha_c); }; });
  eval->callback([&] { action = [&] { return cmd_eval(eval_args, agent_arg); }; });
  sim->callback([&] { action = [&] { return cmd_simulate(sim_args, controller); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return action();
  } catch (const rlsmc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const rlsmc::Error& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
