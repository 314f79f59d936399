// Command-line front end: attack, harden, eval, grid, report and toy.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "icl_evader/attacks.h"
#include "icl_evader/config.h"
#include "icl_evader/dataset.h"
#include "icl_evader/defenses.h"
#include "icl_evader/error.h"
#include "icl_evader/experiment.h"
#include "icl_evader/grid.h"
#include "icl_evader/random.h"

namespace {

using nlohmann::json;
using namespace icl_evader;

struct CommonOptions {
  std::string config_path;
  std::string task;
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::string recipe;
  std::string out;
  std::optional<std::size_t> limit;
  std::optional<std::size_t> parallelism;
};

void AddCommon(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "TOML config file");
  app->add_option("--task", o.task,
                  "sentiment, toxicity or illicit_promotion");
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--backend", o.backend, "mock or http")
      ->check(CLI::IsMember({"mock", "http"}));
  app->add_option("--recipe", o.recipe, "defense recipe code");
  app->add_option("--out", o.out, "output file or directory");
  app->add_option("--limit", o.limit, "maximum number of evaluated samples");
  app->add_option("--parallelism", o.parallelism, "worker threads")
      ->check(CLI::PositiveNumber);
}

ConfigFile ResolveConfig(const CommonOptions& o) {
  ConfigFile file;
  if (!o.config_path.empty()) file = LoadConfigFile(o.config_path);
  ExperimentConfig& c = file.experiment;
  if (!o.task.empty()) {
    if (c.attack && o.task != c.task_name && !o.config_path.empty()) {
      throw InvalidArgument("--task conflicts with the config's attack task");
    }
    c.task_name = o.task;
  }
  if (o.seed) c.master_seed = *o.seed;
  if (!o.backend.empty()) c.backend.kind = ParseBackendKind(o.backend);
  if (!o.recipe.empty()) c.defense = ParseRecipe(o.recipe);
  if (o.limit) c.sample_limit = *o.limit;
  if (o.parallelism) c.parallelism = *o.parallelism;
  c.Validate();
  return file;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

// Writes to `out` when set, otherwise to stdout.
void Emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    WriteFile(out, text);
  }
}

std::vector<std::string> ReadPool(const std::string& path,
                                  const TaskSpec& task) {
  std::vector<std::string> pool;
  std::istringstream in(ReadFile(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '{') {
      const json j = json::parse(line);
      if (j.contains("label") &&
          j["label"].get<std::string>() != task.negative_label().name()) {
        continue;
      }
      pool.push_back(j.at("text").get<std::string>());
    } else {
      pool.push_back(line);
    }
  }
  return pool;
}

void PrintSummary(const ResultRecord& r) {
  const auto& c = r.classification;
  std::cout << "kind: " << RunKindName(r.kind) << "\n";
  std::cout << "accuracy: " << c.accuracy << "\n";
  if (r.attack) {
    std::cout << "recall clean/adv: " << r.attack->recall_clean << " / "
              << r.attack->recall_adv << "\n";
    std::cout << "ASR (points): " << r.attack->asr << "\n";
  }
  if (r.defense) {
    std::cout << "ASR defended (points): " << r.defense->asr_defended << "\n";
    std::cout << "ASRR (points): " << r.defense->asrr_abs << "\n";
    std::cout << "AD (points): " << r.defense->ad << "\n";
    std::cout << "DE: " << r.defense->de
              << (r.defense->admissible ? "" : " (AD above threshold)") << "\n";
  }
}

int RunAttack(const CommonOptions& o, const std::string& kind_name,
              const std::string& text, const std::string& input,
              const std::string& pool_path, bool best) {
  ConfigFile file = ResolveConfig(o);
  const ExperimentConfig& c = file.experiment;
  const TaskSpec task = DefaultTask(c.task_name);
  AttackConfig attack;
  if (!kind_name.empty()) {
    const AttackKind kind = ParseAttackKind(kind_name);
    if (c.attack && KindOf(*c.attack) == kind && !best) {
      attack = *c.attack;
    } else {
      attack = best ? BestAttackConfig(c.task_name, kind)
                    : DefaultAttackConfig(c.task_name, kind);
    }
  } else if (c.attack) {
    attack = *c.attack;
  } else {
    throw InvalidArgument("set --kind or an [attack] section");
  }
  std::optional<BenignPool> pool;
  if (!pool_path.empty()) pool.emplace(ReadPool(pool_path, task));
  if (KindOf(attack) != AttackKind::kFakeClaim && !pool) {
    throw InvalidArgument("--pool is required for the " +
                          std::string(AttackKindName(KindOf(attack))) +
                          " attack");
  }
  const BenignPool* pool_ptr = pool ? &*pool : nullptr;

  std::string result;
  if (!text.empty()) {
    SetSeed(attack, c.master_seed);
    result = ApplyAttack(text, attack, pool_ptr) + "\n";
  } else if (!input.empty()) {
    const Dataset data = LoadDataset(input, task);
    for (const DatasetSample& s : data.samples) {
      SetSeed(attack, DeriveSeed(c.master_seed, s.sample_id));
      result += json({{"text", ApplyAttack(s.sample.text, attack, pool_ptr)},
                      {"label", s.sample.label.name()}})
                    .dump() +
                "\n";
    }
  } else {
    throw InvalidArgument("set --text or --input");
  }
  Emit(o.out, result);
  return 0;
}

int RunHarden(const CommonOptions& o, const std::string& prompt_path,
              const std::string& train_path, bool rendered_only) {
  if (o.recipe.empty()) throw InvalidArgument("--recipe is required");
  const DefenseRecipe recipe = ParseRecipe(o.recipe);
  IclPrompt prompt = PromptFromJson(json::parse(ReadFile(prompt_path)));
  if (!o.task.empty() && o.task != prompt.task.task_name()) {
    throw InvalidArgument("--task does not match the prompt's task");
  }
  const std::uint64_t seed = o.seed.value_or(42);
  std::vector<LabeledSample> train;
  if (!train_path.empty()) {
    for (DatasetSample& s : LoadDataset(train_path, prompt.task).samples) {
      train.push_back(std::move(s.sample));
    }
  }
  const HardeningPools pools = PoolsForHardening(
      prompt, recipe, train_path.empty() ? nullptr : &train, seed);
  const IclPrompt hardened =
      Harden(prompt, recipe, pools.clean_pool, pools.adv_pools, seed);
  if (rendered_only) {
    Emit(o.out, RenderPrompt(hardened));
  } else {
    Emit(o.out, json({{"recipe", FormatRecipe(recipe)},
                      {"prompt", ToJson(hardened)},
                      {"rendered", RenderPrompt(hardened)}})
                        .dump(2) +
                    "\n");
  }
  return 0;
}

int RunEval(const CommonOptions& o, bool csv) {
  const ConfigFile file = ResolveConfig(o);
  const ResultRecord record = RunExperiment(file.experiment);
  const std::string report = ToJson(record).dump(2) + "\n";
  if (o.out.empty()) {
    PrintSummary(record);
    return 0;
  }
  const std::filesystem::path dir(o.out);
  WriteFile(dir / "report.json", report);
  if (csv) WriteFile(dir / "rows.csv", RowsToCsv(record.rows));
  PrintSummary(record);
  return 0;
}

int RunGridCommand(const CommonOptions& o, const std::string& journal) {
  const ConfigFile file = ResolveConfig(o);
  GridSpec spec{file.experiment, file.grid_axes, file.journal_path};
  if (!journal.empty()) spec.journal_path = journal;
  if (spec.axes.empty()) throw InvalidArgument("the config has no grid axes");
  if (spec.journal_path) {
    const std::filesystem::path parent =
        std::filesystem::path(*spec.journal_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
  }
  const json report = GridReport(RunGrid(spec));
  const std::string text = report.dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << text;
  } else {
    WriteFile(std::filesystem::path(o.out) / "grid_report.json", text);
  }
  return 0;
}

int RunReport(const std::string& journal, const std::string& out) {
  if (!std::filesystem::exists(journal)) {
    throw InvalidArgument("journal " + journal + " does not exist");
  }
  Emit(out, GridReport(ReadJournal(journal)).dump(2) + "\n");
  return 0;
}

int RunToy(const std::string& task, const std::string& out) {
  std::vector<std::string> tasks;
  if (task.empty()) {
    tasks.assign(kTaskNames.begin(), kTaskNames.end());
  } else {
    tasks.push_back(task);
  }
  for (const std::string& t : tasks) {
    const std::string jsonl = ToJsonl(GenerateToySamples(t));
    if (out.empty()) {
      std::cout << jsonl;
    } else {
      WriteFile(std::filesystem::path(out) / (t + ".jsonl"), jsonl);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-query evasion attacks and prompt hardening for "
               "in-context-learning classifiers"};
  app.require_subcommand(1);

  CommonOptions attack_opts;
  std::string kind;
  std::string text;
  std::string input;
  std::string pool;
  bool best = false;
  CLI::App* attack = app.add_subcommand("attack", "transform a sample or file");
  AddCommon(attack, attack_opts);
  attack->add_option("--kind", kind, "fake_claim, template or needle");
  attack->add_option("--text", text, "single sample to attack");
  attack->add_option("--input", input, "JSONL dataset to attack");
  attack->add_option("--pool", pool,
                     "benign pool: JSONL (negative labels kept) or plain lines");
  attack->add_flag("--best", best, "use the task's best setting for --kind");

  CommonOptions harden_opts;
  std::string prompt_path;
  std::string train_path;
  bool rendered_only = false;
  CLI::App* harden = app.add_subcommand("harden", "apply a defense recipe");
  AddCommon(harden, harden_opts);
  harden->add_option("--prompt", prompt_path, "prompt JSON")->required();
  harden->add_option("--train", train_path,
                     "JSONL train data for adversarial demonstrations");
  harden->add_flag("--rendered", rendered_only, "print only the prompt text");

  CommonOptions eval_opts;
  bool csv = false;
  CLI::App* eval = app.add_subcommand("eval", "clean, attack or defense run");
  AddCommon(eval, eval_opts);
  eval->add_flag("--csv", csv, "also write rows.csv");

  CommonOptions grid_opts;
  std::string grid_journal;
  CLI::App* grid = app.add_subcommand("grid", "parameter sweep");
  AddCommon(grid, grid_opts);
  grid->add_option("--journal", grid_journal, "resume journal (JSON lines)");

  std::string report_journal;
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "re-aggregate a journal");
  report->add_option("--journal", report_journal, "grid journal")->required();
  report->add_option("--out", report_out, "output file");

  std::string toy_task;
  std::string toy_out;
  CLI::App* toy = app.add_subcommand("toy", "write the bundled toy datasets");
  toy->add_option("--task", toy_task, "one task (default: all)");
  toy->add_option("--out", toy_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*attack) return RunAttack(attack_opts, kind, text, input, pool, best);
    if (*harden) {
      return RunHarden(harden_opts, prompt_path, train_path, rendered_only);
    }
    if (*eval) return RunEval(eval_opts, csv);
    if (*grid) return RunGridCommand(grid_opts, grid_journal);
    if (*report) return RunReport(report_journal, report_out);
    if (*toy) return RunToy(toy_task, toy_out);
  } catch (const icl_evader::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
