#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlsmc/errors.hpp"
#include "rlsmc/net.hpp"
#include "rlsmc/plant.hpp"
#include "rlsmc/reference.hpp"
#include "rlsmc/smc.hpp"

namespace rlsmc {

enum class TerminationMode { StepReward, CumulativeReturn };
enum class NetShape { Desk, Paper };

/// Scalar learning and episode parameters (Table II block).
struct Hyperparameters {
  double alpha_a = 1e-4;
  double alpha_c = 5e-3;
  double gamma = 1.0;
  double tau = 5e-3;
  int steps = 70;              // N, control steps per episode
  int batch = 70;              // |B1|
  double reward_bound = -20.0; // termination bound
  double t_s = 0.1;
  double horizon = 7.0;        // T = N * t_s
  int episodes = 400;          // N_ep
  std::vector<double> q{1.0, 1.0};
  double q_u = 0.0;
  int substeps = 10;

  void validate() const {
    // Zero learning rates are accepted so diagnostic no-update runs work.
    if (alpha_a < 0.0 || alpha_c < 0.0)
      throw ConfigError("learning rates must be nonnegative");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
    if (tau < 0.0 || tau > 1.0) throw ConfigError("tau must be in [0, 1]");
    if (steps < 1) throw ConfigError("steps must be >= 1");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (t_s <= 0.0) throw ConfigError("t_s must be positive");
    if (std::abs(steps * t_s - horizon) > 1e-9)
      throw ConfigError("steps * t_s must equal horizon");
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    for (double qi : q)
      if (qi <= 0.0) throw ConfigError("state reward weights must be positive");
    if (q_u < 0.0) throw ConfigError("q_u must be nonnegative");
    if (substeps < 1) throw ConfigError("substeps must be >= 1");
  }
};

struct NoiseConfig {
  double theta = 0.15;
  double sigma = 0.1;
};

/// Everything a run needs; parses from a key = value file and serializes
/// back canonically.
struct ExperimentConfig {
  MassSpringDamperParams plant;
  SurfaceSpec surface;
  Hyperparameters hyper;
  NetShape shape = NetShape::Desk;
  double mu_scale = 1.0;
  bool use_adam = false;  // plain gradient steps by default
  NoiseConfig noise;
  std::uint64_t seed = 1;
  std::vector<double> init{0.0, 0.0};
  std::vector<double> init_hat{0.0, 0.0};  // side-by-side simplified loop
  std::string reference = "sine-offset";
  std::string out_dir = "out";
  int checkpoint_every = 0;  // 0 writes only the final checkpoint
  TerminationMode termination = TerminationMode::StepReward;
  bool mask_terminal = false;
  std::size_t replay_capacity = 100000;

  void validate() const {
    plant.validate();
    surface.validate();
    hyper.validate();
    if (mu_scale < 1.0) throw ConfigError("net.mu_scale must be >= 1");
    if (noise.theta < 0.0 || noise.sigma < 0.0)
      throw ConfigError("noise parameters must be nonnegative");
    const auto n = static_cast<std::size_t>(surface.order());
    if (init.size() != n || init_hat.size() != n)
      throw ConfigError("initial state dimension must match the surface order");
    if (hyper.q.size() != n)
      throw ConfigError("reward weight count must match the surface order");
    if (reference != "sine-offset" && reference != "zero")
      throw ConfigError("reference must be 'sine-offset' or 'zero'");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
    if (replay_capacity < static_cast<std::size_t>(hyper.batch))
      throw ConfigError("replay capacity must be >= batch size");
  }
};

// ---------------------------------------------------------------------------
// Value formatting and parsing helpers (shortest round-trip doubles).
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Comma-separated doubles, as used by --init and list-valued config keys.
inline std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = detail::trim(text.substr(pos, comma - pos));
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc{} || res.ptr != item.data() + item.size())
      throw ConfigError("invalid number '" + std::string(item) + "'");
    out.push_back(v);
    pos = comma + 1;
    if (comma == text.size()) break;
  }
  return out;
}

namespace detail {

inline double parse_double(std::string_view v) {
  const auto list = parse_double_list(v);
  if (list.size() != 1) throw ConfigError("expected a single number");
  return list[0];
}

inline long long parse_int(std::string_view v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ConfigError("invalid integer '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("expected 'true' or 'false'");
}

inline bool apply_key(ExperimentConfig& c, std::string_view key,
                      std::string_view value) {
  const std::string v(value);
  if (key == "plant.m") c.plant.m = parse_double(v);
  else if (key == "plant.c") c.plant.c = parse_double(v);
  else if (key == "plant.k") c.plant.k = parse_double(v);
  else if (key == "plant.b") c.plant.b = parse_double(v);
  else if (key == "plant.m_hat") c.plant.m_hat = parse_double(v);
  else if (key == "plant.c_hat") c.plant.c_hat = parse_double(v);
  else if (key == "plant.k_hat") c.plant.k_hat = parse_double(v);
  else if (key == "surface.a") c.surface.a = parse_double_list(v);
  else if (key == "surface.mu_hat") c.surface.mu_hat = parse_double(v);
  else if (key == "surface.epsilon_g") c.surface.epsilon_g = parse_double(v);
  else if (key == "hyper.alpha_a") c.hyper.alpha_a = parse_double(v);
  else if (key == "hyper.alpha_c") c.hyper.alpha_c = parse_double(v);
  else if (key == "hyper.gamma") c.hyper.gamma = parse_double(v);
  else if (key == "hyper.tau") c.hyper.tau = parse_double(v);
  else if (key == "hyper.steps") c.hyper.steps = static_cast<int>(parse_int(v));
  else if (key == "hyper.batch") c.hyper.batch = static_cast<int>(parse_int(v));
  else if (key == "hyper.reward_bound") c.hyper.reward_bound = parse_double(v);
  else if (key == "hyper.t_s") c.hyper.t_s = parse_double(v);
  else if (key == "hyper.horizon") c.hyper.horizon = parse_double(v);
  else if (key == "hyper.episodes") c.hyper.episodes = static_cast<int>(parse_int(v));
  else if (key == "hyper.q") c.hyper.q = parse_double_list(v);
  else if (key == "hyper.q_u") c.hyper.q_u = parse_double(v);
  else if (key == "hyper.substeps") c.hyper.substeps = static_cast<int>(parse_int(v));
  else if (key == "net.shape") {
    if (v == "desk") c.shape = NetShape::Desk;
    else if (v == "paper") c.shape = NetShape::Paper;
    else throw ConfigError("net.shape must be 'desk' or 'paper'");
  } else if (key == "net.mu_scale") c.mu_scale = parse_double(v);
  else if (key == "net.optimizer") {
    if (v == "sgd") c.use_adam = false;
    else if (v == "adam") c.use_adam = true;
    else throw ConfigError("net.optimizer must be 'sgd' or 'adam'");
  } else if (key == "noise.theta") c.noise.theta = parse_double(v);
  else if (key == "noise.sigma") c.noise.sigma = parse_double(v);
  else if (key == "run.seed") c.seed = static_cast<std::uint64_t>(parse_int(v));
  else if (key == "run.init") c.init = parse_double_list(v);
  else if (key == "run.init_hat") c.init_hat = parse_double_list(v);
  else if (key == "run.reference") c.reference = v;
  else if (key == "run.out") c.out_dir = v;
  else if (key == "run.checkpoint_every")
    c.checkpoint_every = static_cast<int>(parse_int(v));
  else if (key == "run.termination") {
    if (v == "step-reward") c.termination = TerminationMode::StepReward;
    else if (v == "cumulative-return") c.termination = TerminationMode::CumulativeReturn;
    else throw ConfigError("run.termination must be 'step-reward' or 'cumulative-return'");
  } else if (key == "run.mask_terminal") c.mask_terminal = parse_bool(v);
  else if (key == "run.replay_capacity")
    c.replay_capacity = static_cast<std::size_t>(parse_int(v));
  else return false;
  return true;
}

}  // namespace detail

/// Parses key = value lines ('#' starts a comment). Unknown keys and
/// malformed values are rejected with the offending line number.
inline ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
  ExperimentConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto where = origin + ":" + std::to_string(line_no);
    std::string_view text(line);
    if (const auto hash = text.find('#'); hash != std::string_view::npos)
      text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(where + ": expected 'key = value'");
    const auto key = detail::trim(text.substr(0, eq));
    const auto value = detail::trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    try {
      if (!detail::apply_key(config, key, value))
        throw ConfigError("unknown key '" + std::string(key) + "'");
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

inline ExperimentConfig parse_config_string(const std::string& text,
                                            const std::string& origin = "<string>") {
  std::istringstream in(text);
  return parse_config(in, origin);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

/// Canonical text form; parse_config_string(serialize(c)) reproduces c
/// exactly (doubles are written with shortest round-trip precision).
inline std::string serialize(const ExperimentConfig& c) {
  using detail::format_double;
  using detail::format_list;
  std::ostringstream out;
  out << "plant.m = " << format_double(c.plant.m) << "\n"
      << "plant.c = " << format_double(c.plant.c) << "\n"
      << "plant.k = " << format_double(c.plant.k) << "\n"
      << "plant.b = " << format_double(c.plant.b) << "\n"
      << "plant.m_hat = " << format_double(c.plant.m_hat) << "\n"
      << "plant.c_hat = " << format_double(c.plant.c_hat) << "\n"
      << "plant.k_hat = " << format_double(c.plant.k_hat) << "\n"
      << "surface.a = " << format_list(c.surface.a) << "\n"
      << "surface.mu_hat = " << format_double(c.surface.mu_hat) << "\n"
      << "surface.epsilon_g = " << format_double(c.surface.epsilon_g) << "\n"
      << "hyper.alpha_a = " << format_double(c.hyper.alpha_a) << "\n"
      << "hyper.alpha_c = " << format_double(c.hyper.alpha_c) << "\n"
      << "hyper.gamma = " << format_double(c.hyper.gamma) << "\n"
      << "hyper.tau = " << format_double(c.hyper.tau) << "\n"
      << "hyper.steps = " << c.hyper.steps << "\n"
      << "hyper.batch = " << c.hyper.batch << "\n"
      << "hyper.reward_bound = " << format_double(c.hyper.reward_bound) << "\n"
      << "hyper.t_s = " << format_double(c.hyper.t_s) << "\n"
      << "hyper.horizon = " << format_double(c.hyper.horizon) << "\n"
      << "hyper.episodes = " << c.hyper.episodes << "\n"
      << "hyper.q = " << format_list(c.hyper.q) << "\n"
      << "hyper.q_u = " << format_double(c.hyper.q_u) << "\n"
      << "hyper.substeps = " << c.hyper.substeps << "\n"
      << "net.shape = " << (c.shape == NetShape::Desk ? "desk" : "paper") << "\n"
      << "net.mu_scale = " << format_double(c.mu_scale) << "\n"
      << "net.optimizer = " << (c.use_adam ? "adam" : "sgd") << "\n"
      << "noise.theta = " << format_double(c.noise.theta) << "\n"
      << "noise.sigma = " << format_double(c.noise.sigma) << "\n"
      << "run.seed = " << c.seed << "\n"
      << "run.init = " << format_list(c.init) << "\n"
      << "run.init_hat = " << format_list(c.init_hat) << "\n"
      << "run.reference = " << c.reference << "\n"
      << "run.out = " << c.out_dir << "\n"
      << "run.checkpoint_every = " << c.checkpoint_every << "\n"
      << "run.termination = "
      << (c.termination == TerminationMode::StepReward ? "step-reward"
                                                       : "cumulative-return")
      << "\n"
      << "run.mask_terminal = " << (c.mask_terminal ? "true" : "false") << "\n"
      << "run.replay_capacity = " << c.replay_capacity << "\n";
  return out.str();
}

/// Bundled presets. "paper-msd" reproduces the reference experiment at full
/// network scale; "desk-msd" keeps the same physics and scalars with small
/// networks for fast runs.
inline ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  if (name == "desk-msd") {
    c.shape = NetShape::Desk;
    c.hyper.episodes = 400;
    c.use_adam = true;
  } else if (name == "paper-msd") {
    c.shape = NetShape::Paper;
    c.hyper.episodes = 500;
    c.use_adam = true;
  } else {
    throw ConfigError("unknown preset '" + name + "' (available: paper-msd, desk-msd)");
  }
  c.validate();
  return c;
}

inline ActorSpec make_actor_spec(const ExperimentConfig& c) {
  ActorSpec spec = c.shape == NetShape::Desk ? desk_actor_spec(c.surface.order())
                                             : paper_actor_spec(c.surface.order());
  spec.mu_scale = c.mu_scale;
  return spec;
}

inline CriticSpec make_critic_spec(const ExperimentConfig& c) {
  return c.shape == NetShape::Desk ? desk_critic_spec(c.surface.order())
                                   : paper_critic_spec(c.surface.order());
}

inline Plant make_plant(const ExperimentConfig& c) { return make_msd_plant(c.plant); }

inline ReferenceSignal make_reference(const ExperimentConfig& c) {
  const int order = c.surface.order();
  return c.reference == "zero" ? zero_reference(order) : sine_offset_reference(order);
}

/// 64-bit FNV-1a, used as the run manifest's content hash.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

/// Config echo plus content hash; the echo re-parses to the same config.
inline nlohmann::json run_manifest(const ExperimentConfig& c) {
  const std::string text = serialize(c);
  std::ostringstream hash;
  hash << "fnv1a64:" << std::hex << fnv1a64(text);
  return {{"schema_version", 1}, {"config", text}, {"config_hash", hash.str()}};
}

}  // namespace rlsmc
