#ifndef ICL_EVADER_GRID_H_
#define ICL_EVADER_GRID_H_

// Cartesian sweeps over experiment parameters with a resumable journal.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl_evader/backend.h"
#include "icl_evader/config.h"
#include "icl_evader/experiment.h"

namespace icl_evader {

// Axis names understood by ApplyAxis.
const std::vector<std::string>& GridAxisNames();

// Sets one parameter of `config` from its textual grid value. Attack axes
// switch the attack to the axis's kind, starting from the task defaults when
// the current attack has another kind.
void ApplyAxis(ExperimentConfig& config, const std::string& name,
               const std::string& value);

struct GridSpec {
  ExperimentConfig base;
  std::vector<GridAxis> axes;
  // Append-only JSON lines of completed cells; enables resume when set.
  std::optional<std::string> journal_path;
};

struct GridCell {
  std::size_t index = 0;
  std::vector<std::pair<std::string, std::string>> assignment;
  ExperimentConfig config;
};

// Cells in row-major order (last axis fastest). Cell master seeds are
// DeriveSeed(base.master_seed, index). Throws InvalidArgument on an empty
// axis or unknown axis name.
std::vector<GridCell> ExpandGrid(const GridSpec& spec);

struct GridResult {
  std::size_t index = 0;
  std::vector<std::pair<std::string, std::string>> assignment;
  ResultRecord record;
};

// Runs every cell not already in the journal, appending each finished cell.
// Returns all cells, journal ones included, in index order.
std::vector<GridResult> RunGrid(const GridSpec& spec, Backend& backend);
std::vector<GridResult> RunGrid(const GridSpec& spec);

nlohmann::json JournalLine(const GridResult& result);
GridResult GridResultFromJournal(const nlohmann::json& line);
// Reads every complete line; a truncated final line is ignored.
std::vector<GridResult> ReadJournal(const std::string& path);

// Cells sorted by ASR (attack grids) or DE (defense grids), highest first,
// ties by index; clean grids keep index order. Per-sample rows are omitted.
nlohmann::json GridReport(std::vector<GridResult> results);

}  // namespace icl_evader

#endif  // ICL_EVADER_GRID_H_
