#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rlsmc/checkpoint.hpp"
#include "rlsmc/config.hpp"

using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CliResult run_cli(const std::string& args, const std::string& label) {
  const fs::path dir = fs::path("cli_tmp") / label;
  fs::create_directories(dir);
  const fs::path out_file = dir / "stdout.txt";
  const fs::path err_file = dir / "stderr.txt";
  const std::string command = std::string(RLSMC_CLI_PATH) + " " + args + " > " +
                              out_file.string() + " 2> " + err_file.string();
  const int status = std::system(command.c_str());
  CliResult result;
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_file);
  result.err = slurp(err_file);
  return result;
}

std::size_t line_count(const fs::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("a subcommand is required", "[cli]") {
  CHECK(run_cli("", "no_args").code == 2);
}

TEST_CASE("a missing config file exits 2 and names the path", "[cli]") {
  const CliResult r =
      run_cli("train --config /nonexistent/rlsmc.cfg", "missing_config");
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("/nonexistent/rlsmc.cfg"));
}

TEST_CASE("config file and preset are mutually exclusive", "[cli]") {
  fs::create_directories("cli_tmp/exclusive");
  const std::string cfg = "cli_tmp/exclusive/run.cfg";
  std::ofstream(cfg) << rlsmc::serialize(rlsmc::preset_config("desk-msd"));
  const CliResult r = run_cli("train --config " + cfg + " --preset desk-msd",
                              "exclusive");
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("mutually exclusive"));
}

TEST_CASE("a config error in a file is reported with its line", "[cli]") {
  fs::create_directories("cli_tmp/bad_line");
  const std::string cfg = "cli_tmp/bad_line/run.cfg";
  std::ofstream(cfg) << "plant.m = 1\nplant.q = 3\n";
  const CliResult r = run_cli("train --config " + cfg, "bad_line");
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring(":2"));
  CHECK_THAT(r.err, ContainsSubstring("plant.q"));
}

TEST_CASE("a short training run writes the documented artifacts", "[cli]") {
  const std::string out = "cli_tmp/train_out";
  fs::remove_all(out);
  const CliResult r = run_cli(
      "train --preset desk-msd --episodes 2 --seed 5 --out " + out, "train");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out + "/manifest.json"));
  CHECK(fs::exists(out + "/learning_curve.csv"));
  CHECK(fs::exists(out + "/checkpoint_final.json"));
  CHECK(line_count(out + "/learning_curve.csv") == 3);

  const std::vector<std::string> expected{"episode,G0,steps,termination_reason"};
  std::ifstream curve(out + "/learning_curve.csv");
  std::string header;
  std::getline(curve, header);
  CHECK(header == expected[0]);

  // The manifest echo re-parses to the exact config that ran.
  const nlohmann::json manifest =
      rlsmc::read_json_file(out + "/manifest.json");
  const rlsmc::ExperimentConfig echoed = rlsmc::parse_config_string(
      manifest.at("config").get<std::string>());
  CHECK(echoed.seed == 5);
  CHECK(echoed.hyper.episodes == 2);
  CHECK(echoed.out_dir == out);
}

TEST_CASE("zero learning rates reproduce the seeded initialization", "[cli]") {
  const std::string out = "cli_tmp/frozen_out";
  fs::remove_all(out);
  const CliResult r = run_cli("train --preset desk-msd --episodes 1 --seed 9 "
                              "--alpha-a 0 --alpha-c 0 --out " + out,
                              "frozen");
  REQUIRE(r.code == 0);

  rlsmc::ExperimentConfig config = rlsmc::preset_config("desk-msd");
  config.seed = 9;
  const rlsmc::Agent restored = rlsmc::agent_from_json(
      rlsmc::read_json_file(out + "/checkpoint_final.json"),
      rlsmc::make_actor_spec(config), rlsmc::make_critic_spec(config));
  const rlsmc::NetParams fresh_actor =
      rlsmc::init_actor(rlsmc::make_actor_spec(config), 9);
  const rlsmc::CriticParams fresh_critic =
      rlsmc::init_critic(rlsmc::make_critic_spec(config), 10);

  REQUIRE(restored.actor.size() == fresh_actor.size());
  for (std::size_t i = 0; i < fresh_actor.size(); ++i) {
    CHECK(restored.actor[i].W == fresh_actor[i].W);
    CHECK(restored.actor[i].b == fresh_actor[i].b);
  }
  for (std::size_t i = 0; i < fresh_critic.trunk.size(); ++i)
    CHECK(restored.critic.trunk[i].W == fresh_critic.trunk[i].W);
}

TEST_CASE("evaluation of the zero baseline writes the episode file", "[cli]") {
  const std::string out = "cli_tmp/eval_out";
  fs::remove_all(out);
  const CliResult r = run_cli(
      "eval --preset desk-msd --agent zero --init 0,0 --out " + out, "eval");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out + "/evaluation.csv"));
  CHECK(line_count(out + "/evaluation.csv") == 71);
  CHECK_THAT(r.out, ContainsSubstring("G0"));
}

TEST_CASE("evaluation accepts a trained checkpoint", "[cli]") {
  const std::string train_out = "cli_tmp/ckpt_out";
  fs::remove_all(train_out);
  REQUIRE(run_cli("train --preset desk-msd --episodes 1 --seed 2 --out " +
                      train_out,
                  "ckpt_train")
              .code == 0);
  const std::string out = "cli_tmp/ckpt_eval";
  const CliResult r =
      run_cli("eval --preset desk-msd --agent " + train_out +
                  "/checkpoint_final.json --init 2,-1 --out " + out,
              "ckpt_eval");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out + "/evaluation.csv"));
}

TEST_CASE("a missing checkpoint path exits 2", "[cli]") {
  const CliResult r = run_cli(
      "eval --preset desk-msd --agent missing.json --out cli_tmp/miss",
      "missing_ckpt");
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("missing.json"));
}

TEST_CASE("the default run uses the full-scale bundled preset", "[cli]") {
  const std::string out = "cli_tmp/default_eval";
  fs::remove_all(out);
  // No --config and no --preset: eval falls back to the bundled default,
  // which carries the full-size network shape.
  const CliResult r = run_cli("eval --agent zero --out " + out, "default_eval");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out + "/evaluation.csv"));
}

TEST_CASE("simulation writes one record per substep plus the endpoint",
          "[cli]") {
  const std::string out = "cli_tmp/sim_out";
  fs::remove_all(out);
  const CliResult r = run_cli(
      "simulate --preset desk-msd --controller nominal --out " + out, "sim");
  REQUIRE(r.code == 0);
  CHECK(line_count(out + "/trajectory.csv") == 702);  // 70*10 + 1 + header
}

TEST_CASE("the oracle simulation logs the Lyapunov column", "[cli]") {
  const std::string out = "cli_tmp/sim_oracle";
  fs::remove_all(out);
  const CliResult r = run_cli(
      "simulate --preset desk-msd --controller ideal-oracle --init 2,-1 --out " +
          out,
      "sim_oracle");
  REQUIRE(r.code == 0);
  std::ifstream traj(out + "/trajectory.csv");
  std::string header;
  std::getline(traj, header);
  CHECK(header == "step,t,x1,x2,ref,e1,e2,sigma,u_hat,u1,u,reward,v");
}

TEST_CASE("an unknown controller exits 2", "[cli]") {
  const CliResult r = run_cli(
      "simulate --preset desk-msd --controller fuzzy --out cli_tmp/bad_ctrl",
      "bad_ctrl");
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("controller"));
}

TEST_CASE("runtime failures exit 3", "[cli]") {
  // A singularity guard above the model's input gain trips at the first
  // control evaluation: a well-formed config, but a failing run.
  fs::create_directories("cli_tmp/guard");
  rlsmc::ExperimentConfig config = rlsmc::preset_config("desk-msd");
  config.surface.epsilon_g = 2.0;
  const std::string cfg = "cli_tmp/guard/run.cfg";
  std::ofstream(cfg) << rlsmc::serialize(config);
  const CliResult r = run_cli(
      "simulate --config " + cfg + " --controller nominal --out cli_tmp/guard",
      "guard");
  CHECK(r.code == 3);
  CHECK_THAT(r.err, ContainsSubstring("runtime error"));
}
