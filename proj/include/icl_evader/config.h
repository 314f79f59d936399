#ifndef ICL_EVADER_CONFIG_H_
#define ICL_EVADER_CONFIG_H_

// TOML experiment configuration and JSON echoes of configs for reports.

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl_evader/attacks.h"
#include "icl_evader/defenses.h"
#include "icl_evader/experiment.h"

namespace icl_evader {

struct GridAxis {
  std::string name;
  std::vector<std::string> values;
};

struct ConfigFile {
  ExperimentConfig experiment;
  std::vector<GridAxis> grid_axes;
  std::optional<std::string> journal_path;
};

// Throws InvalidArgument with the offending key on unknown keys, wrong types
// or invalid values, and ParseError with the line on TOML syntax errors.
ConfigFile ParseConfigToml(std::string_view text);
ConfigFile LoadConfigFile(const std::string& path);

// The attack section for `kind` with every field at its default, except that
// fake claim starts from the task's default claim.
AttackConfig DefaultAttackConfig(std::string_view task_name, AttackKind kind);

// Template attack label pair: "task" (the task's own label names) or
// "generic" ("bad"/"good").
void SetTemplateLabels(TemplateAttackConfig& config, std::string_view task_name,
                       std::string_view mode);

nlohmann::json ToJson(const AttackConfig& config);
nlohmann::json ToJson(const DefenseRecipe& recipe);
nlohmann::json ToJson(const PromptTemplate& prompt_template);
nlohmann::json ToJson(const BackendConfig& config);
nlohmann::json ToJson(const IclPrompt& prompt);
// Accepts the layout written by ToJson. "task" names a default task; an
// optional "instruction" replaces its instruction. Missing template fields
// keep their defaults.
IclPrompt PromptFromJson(const nlohmann::json& j);

// Echo of everything that determines results; parallelism is excluded.
nlohmann::json ToJson(const ExperimentConfig& config);

}  // namespace icl_evader

#endif  // ICL_EVADER_CONFIG_H_
