#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlsmc/ddpg.hpp"
#include "rlsmc/errors.hpp"
#include "rlsmc/net.hpp"

namespace rlsmc {

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
  }
  return "linear";
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "linear") return Activation::Linear;
  throw ConfigError("unknown activation '" + name + "'");
}

inline nlohmann::json layer_specs_to_json(const std::vector<LayerSpec>& specs) {
  nlohmann::json out = nlohmann::json::array();
  for (const LayerSpec& s : specs)
    out.push_back({{"width", s.width}, {"act", activation_name(s.act)}});
  return out;
}

inline std::vector<LayerSpec> layer_specs_from_json(const nlohmann::json& j) {
  std::vector<LayerSpec> out;
  for (const auto& item : j)
    out.push_back({item.at("width").get<int>(),
                   activation_from_name(item.at("act").get<std::string>())});
  return out;
}

namespace detail {

inline nlohmann::json layers_to_json(const NetParams& params) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : params) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.W.size()));
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c) w.push_back(layer.W(r, c));
    std::vector<double> b(layer.b.data(), layer.b.data() + layer.b.size());
    layers.push_back({{"W", w}, {"b", b}});
  }
  return layers;
}

/// Reconstructs a layer stack, requiring the stored flat arrays to match the
/// shapes implied by `input_width` and `specs` exactly.
inline NetParams layers_from_json(const nlohmann::json& layers, int input_width,
                                  const std::vector<LayerSpec>& specs,
                                  const std::string& what) {
  if (layers.size() != specs.size())
    throw ConfigError(what + ": expected " + std::to_string(specs.size()) +
                      " layers, found " + std::to_string(layers.size()));
  NetParams params;
  int fan_in = input_width;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto rows = specs[i].width;
    const auto w = layers[i].at("W").get<std::vector<double>>();
    const auto b = layers[i].at("b").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != rows * fan_in ||
        static_cast<int>(b.size()) != rows)
      throw ConfigError(what + ": layer " + std::to_string(i) +
                        " shape mismatch (expected " + std::to_string(rows) + "x" +
                        std::to_string(fan_in) + ")");
    Layer layer;
    layer.W.resize(rows, fan_in);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < fan_in; ++c)
        layer.W(r, c) = w[static_cast<std::size_t>(r) * fan_in + c];
    layer.b = Eigen::Map<const Eigen::VectorXd>(b.data(),
                                                static_cast<Eigen::Index>(rows));
    layer.act = specs[i].act;
    params.push_back(std::move(layer));
    fan_in = rows;
  }
  return params;
}

}  // namespace detail

inline nlohmann::json actor_to_json(const NetParams& params, const ActorSpec& spec) {
  return {{"schema_version", 1},
          {"spec",
           {{"kind", "actor"},
            {"input_width", spec.input_width},
            {"hidden", layer_specs_to_json(spec.hidden)},
            {"mu_scale", spec.mu_scale}}},
          {"layers", detail::layers_to_json(params)}};
}

inline NetParams actor_from_json(const nlohmann::json& j, const ActorSpec& expected) {
  if (j.at("schema_version").get<int>() != 1)
    throw ConfigError("actor checkpoint: unsupported schema_version");
  const auto& spec = j.at("spec");
  if (spec.at("kind").get<std::string>() != "actor" ||
      spec.at("input_width").get<int>() != expected.input_width ||
      layer_specs_from_json(spec.at("hidden")).size() != expected.hidden.size())
    throw ConfigError("actor checkpoint: spec does not match configured shape");
  return detail::layers_from_json(j.at("layers"), expected.input_width,
                                  expected.stack(), "actor checkpoint");
}

inline nlohmann::json critic_to_json(const CriticParams& params,
                                     const CriticSpec& spec) {
  // The three stacks are stored flat, partitioned on load by the spec.
  nlohmann::json layers = detail::layers_to_json(params.state_branch);
  for (auto& l : detail::layers_to_json(params.action_branch))
    layers.push_back(std::move(l));
  for (auto& l : detail::layers_to_json(params.trunk)) layers.push_back(std::move(l));
  return {{"schema_version", 1},
          {"spec",
           {{"kind", "critic"},
            {"state_width", spec.state_width},
            {"state_branch", layer_specs_to_json(spec.state_branch)},
            {"action_branch", layer_specs_to_json(spec.action_branch)},
            {"trunk", layer_specs_to_json(spec.trunk)}}},
          {"layers", layers}};
}

inline CriticParams critic_from_json(const nlohmann::json& j,
                                     const CriticSpec& expected) {
  if (j.at("schema_version").get<int>() != 1)
    throw ConfigError("critic checkpoint: unsupported schema_version");
  const auto& spec = j.at("spec");
  if (spec.at("kind").get<std::string>() != "critic" ||
      spec.at("state_width").get<int>() != expected.state_width)
    throw ConfigError("critic checkpoint: spec does not match configured shape");

  const auto& layers = j.at("layers");
  const std::size_t ns = expected.state_branch.size();
  const std::size_t na = expected.action_branch.size();
  const std::size_t nt = expected.trunk_stack().size();
  if (layers.size() != ns + na + nt)
    throw ConfigError("critic checkpoint: layer count does not match shape");

  auto slice = [&](std::size_t begin, std::size_t count) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < count; ++i) out.push_back(layers[begin + i]);
    return out;
  };

  CriticParams params;
  params.state_branch =
      detail::layers_from_json(slice(0, ns), expected.state_width,
                               expected.state_branch, "critic state branch");
  params.action_branch = detail::layers_from_json(
      slice(ns, na), 1, expected.action_branch, "critic action branch");
  const int cat = expected.branch_width(expected.state_branch) +
                  expected.branch_width(expected.action_branch);
  params.trunk = detail::layers_from_json(slice(ns + na, nt), cat,
                                          expected.trunk_stack(), "critic trunk");
  return params;
}

/// Full agent bundle: both learned networks and their targets.
inline nlohmann::json agent_to_json(const Agent& agent) {
  return {{"schema_version", 1},
          {"actor", actor_to_json(agent.actor, agent.actor_spec)},
          {"actor_target", actor_to_json(agent.actor_target, agent.actor_spec)},
          {"critic", critic_to_json(agent.critic, agent.critic_spec)},
          {"critic_target", critic_to_json(agent.critic_target, agent.critic_spec)}};
}

inline Agent agent_from_json(const nlohmann::json& j, const ActorSpec& actor_spec,
                             const CriticSpec& critic_spec) {
  if (j.at("schema_version").get<int>() != 1)
    throw ConfigError("agent checkpoint: unsupported schema_version");
  Agent agent;
  agent.actor_spec = actor_spec;
  agent.critic_spec = critic_spec;
  agent.actor = actor_from_json(j.at("actor"), actor_spec);
  agent.actor_target = actor_from_json(j.at("actor_target"), actor_spec);
  agent.critic = critic_from_json(j.at("critic"), critic_spec);
  agent.critic_target = critic_from_json(j.at("critic_target"), critic_spec);
  return agent;
}

inline void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << j.dump() << "\n";
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
  return j;
}

}  // namespace rlsmc
