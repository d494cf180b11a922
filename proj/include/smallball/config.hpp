#pragma once

// ExperimentSpec from TOML:
//
//   theorem = "main"
//   [parameters]
//   eps = 1.0
//   t_obs = [1.0, 2.0]
//   [tolerances]
//   ks = 0.05

#include <string>
#include <string_view>

#include <toml.hpp>

#include "smallball/harness.hpp"

namespace smallball {

namespace detail {

inline double toml_number(const toml::node& node, const std::string& key) {
  if (auto v = node.value<double>()) return *v;
  throw spec_error("config: '" + key + "' must be a number or a list of numbers");
}

inline ExperimentSpec spec_from_table(const toml::table& root) {
  ExperimentSpec spec;
  const auto theorem = root["theorem"].value<std::string>();
  if (!theorem) throw spec_error("config: missing string key 'theorem'");
  spec.theorem = parse_theorem(*theorem);
  if (const auto* params = root["parameters"].as_table()) {
    for (const auto& [k, node] : *params) {
      const std::string key(k.str());
      if (const auto* arr = node.as_array()) {
        std::vector<double> values;
        for (const auto& item : *arr) values.push_back(toml_number(item, key));
        spec.parameters[key] = std::move(values);
      } else {
        spec.parameters[key] = {toml_number(node, key)};
      }
    }
  }
  if (const auto* tols = root["tolerances"].as_table()) {
    for (const auto& [k, node] : *tols) {
      const std::string key(k.str());
      spec.tolerances[key] = toml_number(node, key);
    }
  }
  return spec;
}

}  // namespace detail

inline ExperimentSpec parse_experiment_spec(std::string_view text) {
  try {
    return detail::spec_from_table(toml::parse(text));
  } catch (const toml::parse_error& e) {
    throw spec_error(std::string("config: ") + std::string(e.description()));
  }
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
  try {
    return detail::spec_from_table(toml::parse_file(path));
  } catch (const toml::parse_error& e) {
    throw spec_error("config " + path + ": " + std::string(e.description()));
  }
}

}  // namespace smallball
