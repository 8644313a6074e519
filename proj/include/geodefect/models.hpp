#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geodefect/manifold.hpp"

namespace geodefect {

// {type, n, params, seed}; the JSON form of a zoo entry.
struct ModelDescriptor {
  std::string type;
  int n = 4;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ModelDescriptor from_json(const nlohmann::json& j);
};

struct ZooEntry {
  std::string type;
  std::string summary;
  std::vector<std::pair<std::string, std::string>> params;  // name, doc
};

const std::vector<ZooEntry>& model_zoo();
nlohmann::json zoo_json();

// Builds a zoo metric with closed-form partials. Throws ConfigError for
// unknown types or invalid parameters.
MetricField make_model(const ModelDescriptor& desc);

// The same field multiplied by the constant c^2.
MetricField scaled_metric(const MetricField& m, double c);

}  // namespace geodefect
