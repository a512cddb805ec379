#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "survstack/stack.hpp"

namespace survstack {

/// Serialized stacked model: versioned JSON container carrying the training
/// schema, grid, weights, and every fitted candidate. Numbers round-trip
/// exactly.
struct PersistedStack {
  StackedModel model;
  std::vector<std::string> covariate_names;
};

nlohmann::json stack_to_json(const StackedModel& model,
                             const std::vector<std::string>& covariate_names);
PersistedStack stack_from_json(const nlohmann::json& j);

void save_stack(const std::string& path, const StackedModel& model,
                const std::vector<std::string>& covariate_names);
PersistedStack load_stack(const std::string& path);

/// Candidate construction from a config description, shared by the CLI and
/// the persistence layer. kind is one of lognormal|weibull|cox|rsf.
std::shared_ptr<const Candidate> make_candidate(const std::string& id,
                                                const std::string& kind,
                                                const ForestConfig& fc);

}  // namespace survstack
