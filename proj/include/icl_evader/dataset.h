#ifndef ICL_EVADER_DATASET_H_
#define ICL_EVADER_DATASET_H_

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "icl_evader/prompt.h"

namespace icl_evader {

struct DatasetSample {
  // 1-based line number in the source file.
  std::size_t sample_id;
  LabeledSample sample;

  friend bool operator==(const DatasetSample&, const DatasetSample&) = default;
};

enum class Split { kAll, kTrain, kTest };

struct Dataset {
  std::string task_name;
  Split split = Split::kAll;
  // Ordered by sample_id.
  std::vector<DatasetSample> samples;

  std::map<std::string, std::size_t> ClassCounts() const;
};

// JSON lines of {"text": ..., "label": ...}. Blank lines are skipped but
// still advance the line number. Throws ParseError carrying the line number
// on malformed lines or labels outside the task's label set, and
// InvalidArgument when no sample is found.
Dataset ParseDataset(std::istream& in, const TaskSpec& task);
Dataset LoadDataset(const std::string& path, const TaskSpec& task);

// Stratified seeded split. Each class is shuffled and contributes
// round(train_fraction * n_c), clamped to [1, n_c - 1], samples to train.
// Test samples whose text also occurs in train are dropped. Throws
// InvalidArgument when a class has fewer than two samples.
std::pair<Dataset, Dataset> SplitDataset(const Dataset& dataset,
                                         double train_fraction,
                                         std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic keyword datasets bundled for self-contained mock runs.

inline constexpr std::size_t kToySize = 200;
inline constexpr std::uint64_t kToySeed = 20240601;

// Balanced, duplicate-free samples in a seeded order. Deterministic for a
// given (task, size, seed).
std::vector<LabeledSample> GenerateToySamples(std::string_view task_name,
                                              std::size_t size = kToySize,
                                              std::uint64_t seed = kToySeed);

std::string ToJsonl(const std::vector<LabeledSample>& samples);

// The toy dataset as if loaded from its JSONL file.
Dataset ToyDataset(std::string_view task_name);

}  // namespace icl_evader

#endif  // ICL_EVADER_DATASET_H_
