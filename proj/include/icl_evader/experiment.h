#ifndef ICL_EVADER_EXPERIMENT_H_
#define ICL_EVADER_EXPERIMENT_H_

// Clean, attack and defense evaluations over a dataset.
//
// A run fixes one demonstration set (the classifier under test), drawn from
// the train split with the master seed. Every per-sample random choice is
// seeded from (master seed, sample_id), so reports do not depend on
// parallelism or scheduling.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl_evader/attacks.h"
#include "icl_evader/backend.h"
#include "icl_evader/dataset.h"
#include "icl_evader/defenses.h"
#include "icl_evader/metrics.h"
#include "icl_evader/prompt.h"

namespace icl_evader {

struct ExperimentConfig {
  std::string task_name = "toxicity";
  // JSONL file; the bundled toy dataset for the task when unset.
  std::optional<std::string> dataset_path;
  std::size_t n_shots = 32;
  double train_fraction = 0.8;
  PromptTemplate prompt_template;
  BackendConfig backend;
  std::optional<AttackConfig> attack;
  std::optional<DefenseRecipe> defense;
  std::uint64_t master_seed = 42;
  // Not part of the experiment's identity; never serialized into reports.
  std::size_t parallelism = 1;
  std::optional<std::size_t> sample_limit;

  void Validate() const;
};

enum class RunKind { kClean, kAttack, kDefense };

std::string_view RunKindName(RunKind kind);
RunKind RunKindOf(const ExperimentConfig& config);

struct Prediction {
  std::string label;
  double confidence = 1.0;
  bool forced_incorrect = false;
  // Set when the backend failed; the prediction then counts as incorrect.
  std::optional<std::string> error;
};

struct SampleRow {
  std::size_t sample_id = 0;
  std::string label;
  Prediction clean;
  // Present for positive-class samples when an attack is configured.
  std::optional<Prediction> adv;
  // Present in defense runs.
  std::optional<Prediction> hardened_clean;
  std::optional<Prediction> hardened_adv;
};

// Whether `p` counts as predicting `label`. Forced and failed predictions
// never match.
bool PredictsLabel(const Prediction& p, const std::string& label);

struct ResultRecord {
  RunKind kind = RunKind::kClean;
  nlohmann::json config;
  std::uint64_t seed = 0;
  nlohmann::json dataset_summary;
  ClassificationReport classification;
  std::optional<AttackReport> attack;
  std::optional<ClassificationReport> hardened_classification;
  std::optional<AttackReport> hardened_attack;
  std::optional<DefenseReport> defense;
  std::vector<SampleRow> rows;  // ordered by sample_id
  // Known real-model result for the same setting; null when none.
  // Informational only: it is not reproducible with the mock backend.
  nlohmann::json reference;
};

// Real-model reference result for `config`, or null. Only undefended attack runs
// whose attack equals a task's best configuration (seed aside) have one.
nlohmann::json ReferenceResult(const ExperimentConfig& config);

// Resolved inputs of a run: splits, the fixed demonstrations and the prompt
// that wraps every test sample.
struct ExperimentContext {
  TaskSpec task;
  Dataset train;
  Dataset test;
  std::vector<LabeledSample> demonstrations;
  IclPrompt base_prompt;
};

ExperimentContext PrepareExperiment(const ExperimentConfig& config);

// Negative train samples outside the demonstrations that the vanilla
// classifier does not predict as positive. Order follows sample_id.
std::vector<std::string> BuildBenignPool(const ExperimentContext& context,
                                         Backend& backend,
                                         std::size_t parallelism);

struct HardeningPools {
  std::vector<LabeledSample> clean_pool;
  AdvPools adv_pools;
};

// Pools for hardening a standalone prompt without querying a model. Clean
// demos are the prompt's own. Adversarial demos apply each kind's best
// attack to the positive samples of `train` outside the prompt, or to the
// prompt's positive demos when `train` is null; benign pools are the
// matching negatives. Needle sizes are capped at the benign pool size.
HardeningPools PoolsForHardening(const IclPrompt& prompt,
                                 const DefenseRecipe& recipe,
                                 const std::vector<LabeledSample>* train,
                                 std::uint64_t seed);

// Dispatches on RunKindOf(config). Throws on configuration errors; backend
// failures are recorded per sample.
ResultRecord RunExperiment(const ExperimentConfig& config, Backend& backend);
ResultRecord RunExperiment(const ExperimentConfig& config);

// Recomputes every aggregate of `record` from its rows.
void Reaggregate(ResultRecord& record, const TaskSpec& task);

nlohmann::json ToJson(const ClassificationReport& report);
nlohmann::json ToJson(const AttackReport& report);
nlohmann::json ToJson(const DefenseReport& report);
nlohmann::json ToJson(const SampleRow& row);
// Full record; rows are omitted when include_rows is false.
nlohmann::json ToJson(const ResultRecord& record, bool include_rows = true);

// Inverse of ToJson for records with rows; aggregates are recomputed from
// the rows rather than read back.
SampleRow RowFromJson(const nlohmann::json& j);
ResultRecord RecordFromJson(const nlohmann::json& j);

// Flat per-sample rows with a header line.
std::string RowsToCsv(const std::vector<SampleRow>& rows);

// Runs `body(i)` for i in [0, n) on up to `parallelism` threads. The first
// exception thrown by any call is rethrown after all threads join.
void ParallelFor(std::size_t n, std::size_t parallelism,
                 const std::function<void(std::size_t)>& body);

}  // namespace icl_evader

#endif  // ICL_EVADER_EXPERIMENT_H_
