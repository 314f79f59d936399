#include "icl_evader/experiment.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "icl_evader/config.h"
#include "icl_evader/error.h"
#include "icl_evader/random.h"

namespace icl_evader {
namespace {

using nlohmann::json;

std::vector<Label> LabelsOf(const TaskSpec& task) {
  return {task.label_set().begin(), task.label_set().end()};
}

Prediction ClassifyText(Backend& backend, IclPrompt prompt, std::string text,
                        const std::vector<Label>& labels) {
  prompt.test_sample = std::move(text);
  try {
    const ClassificationResult r =
        Classify(backend, RenderPrompt(prompt), labels);
    return {r.predicted.name(), r.confidence, r.forced_incorrect, std::nullopt};
  } catch (const BackendError& e) {
    return {labels.back().name(), 1.0, true, std::string(e.what())};
  }
}

json OptionalToJson(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

// The label a confusion matrix sees: forced or failed predictions are
// recorded as the wrong class.
Label EffectiveLabel(const Prediction& p, const Label& truth,
                     const TaskSpec& task) {
  if (p.forced_incorrect || p.error) {
    return truth == task.positive_label() ? task.negative_label()
                                          : task.positive_label();
  }
  return task.LabelFor(p.label);
}

ClassificationReport ReportFor(
    const std::vector<SampleRow>& rows, const TaskSpec& task,
    std::optional<Prediction> SampleRow::*field) {
  std::vector<Label> predicted;
  std::vector<Label> truth;
  for (const SampleRow& row : rows) {
    const Label label = task.LabelFor(row.label);
    const Prediction& p = field ? *(row.*field) : row.clean;
    predicted.push_back(EffectiveLabel(p, label, task));
    truth.push_back(label);
  }
  return ClassificationReportFor(predicted, truth, task.positive_label());
}

// Recall on the positive rows before and after attack.
AttackReport AttackFor(const std::vector<SampleRow>& rows,
                       const TaskSpec& task, bool hardened) {
  const std::string& pos = task.positive_label().name();
  std::size_t n = 0;
  std::size_t hit_clean = 0;
  std::size_t hit_adv = 0;
  for (const SampleRow& row : rows) {
    if (row.label != pos) continue;
    const Prediction* clean = hardened ? &*row.hardened_clean : &row.clean;
    const Prediction* adv = hardened ? &*row.hardened_adv : &*row.adv;
    ++n;
    hit_clean += PredictsLabel(*clean, pos);
    hit_adv += PredictsLabel(*adv, pos);
  }
  if (n == 0) throw InvalidArgument("no positive-class samples to attack");
  return MakeAttackReport(static_cast<double>(hit_clean) / n,
                          static_cast<double>(hit_adv) / n);
}

std::set<std::string> TextsOf(const std::vector<LabeledSample>& samples) {
  std::set<std::string> out;
  for (const LabeledSample& s : samples) out.insert(s.text);
  return out;
}

void CheckDisjoint(const Dataset& test, const std::set<std::string>& texts,
                   std::string_view what) {
  for (const DatasetSample& s : test.samples) {
    if (texts.count(s.sample.text)) {
      throw Error("evaluation sample " + std::to_string(s.sample_id) +
                  " also appears among the " + std::string(what));
    }
  }
}

json PredictionToJson(const Prediction& p) {
  json j = {{"label", p.label},
            {"confidence", p.confidence},
            {"forced_incorrect", p.forced_incorrect}};
  if (p.error) j["error"] = *p.error;
  return j;
}

Prediction PredictionFromJson(const json& j) {
  Prediction p;
  p.label = j.at("label").get<std::string>();
  p.confidence = j.at("confidence").get<double>();
  p.forced_incorrect = j.at("forced_incorrect").get<bool>();
  if (j.contains("error")) p.error = j["error"].get<std::string>();
  return p;
}

}  // namespace

void ExperimentConfig::Validate() const {
  DefaultTask(task_name);
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie in (0, 1)");
  }
  if (parallelism == 0) throw InvalidArgument("parallelism must be >= 1");
  if (sample_limit && *sample_limit == 0) {
    throw InvalidArgument("sample_limit must be >= 1");
  }
  prompt_template.Validate();
  backend.Validate();
  if (attack) std::visit([](const auto& c) { c.Validate(); }, *attack);
  if (defense) {
    if (defense->empty()) throw InvalidArgument("defense recipe is empty");
    if (!attack) throw InvalidArgument("a defense run needs an attack");
    if (defense->adv_demo) defense->adv_demo->Validate();
    if (defense->random_template) defense->random_template->Validate();
  }
}

std::string_view RunKindName(RunKind kind) {
  switch (kind) {
    case RunKind::kClean:
      return "clean";
    case RunKind::kAttack:
      return "attack";
    case RunKind::kDefense:
      return "defense";
  }
  return "unknown";
}

RunKind RunKindOf(const ExperimentConfig& config) {
  if (config.defense) return RunKind::kDefense;
  if (config.attack) return RunKind::kAttack;
  return RunKind::kClean;
}

bool PredictsLabel(const Prediction& p, const std::string& label) {
  return !p.forced_incorrect && !p.error && p.label == label;
}

void ParallelFor(std::size_t n, std::size_t parallelism,
                 const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::max<std::size_t>(
      1, std::min(parallelism, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (std::thread& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

ExperimentContext PrepareExperiment(const ExperimentConfig& config) {
  config.Validate();
  TaskSpec task = DefaultTask(config.task_name);
  const Dataset full = config.dataset_path
                           ? LoadDataset(*config.dataset_path, task)
                           : ToyDataset(config.task_name);
  auto [train, test] = SplitDataset(full, config.train_fraction,
                                    DeriveSeed(config.master_seed, "split"));
  if (config.sample_limit && test.samples.size() > *config.sample_limit) {
    test.samples.erase(test.samples.begin() + *config.sample_limit,
                       test.samples.end());
  }
  if (config.n_shots > train.samples.size()) {
    throw InvalidArgument("n_shots " + std::to_string(config.n_shots) +
                          " exceeds the train split size " +
                          std::to_string(train.samples.size()));
  }
  Rng rng(DeriveSeed(config.master_seed, "demonstrations"));
  std::vector<LabeledSample> demos;
  for (std::size_t i : SampleWithoutReplacement(rng, train.samples.size(),
                                                config.n_shots)) {
    demos.push_back(train.samples[i].sample);
  }
  CheckDisjoint(test, TextsOf(demos), "demonstrations");
  IclPrompt base{task, config.prompt_template, demos, "", {}};
  return {std::move(task), std::move(train), std::move(test), std::move(demos),
          std::move(base)};
}

std::vector<std::string> BuildBenignPool(const ExperimentContext& context,
                                         Backend& backend,
                                         std::size_t parallelism) {
  const std::set<std::string> demo_texts = TextsOf(context.demonstrations);
  const std::string& negative = context.task.negative_label().name();
  std::vector<std::string> candidates;
  for (const DatasetSample& s : context.train.samples) {
    if (s.sample.label.name() == negative && !demo_texts.count(s.sample.text)) {
      candidates.push_back(s.sample.text);
    }
  }
  const std::vector<Label> labels = LabelsOf(context.task);
  std::vector<char> keep(candidates.size(), 0);
  ParallelFor(candidates.size(), parallelism, [&](std::size_t i) {
    const Prediction p =
        ClassifyText(backend, context.base_prompt, candidates[i], labels);
    keep[i] = PredictsLabel(p, negative);
  });
  std::vector<std::string> pool;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (keep[i]) pool.push_back(candidates[i]);
  }
  return pool;
}

HardeningPools PoolsForHardening(const IclPrompt& prompt,
                                 const DefenseRecipe& recipe,
                                 const std::vector<LabeledSample>* train,
                                 std::uint64_t seed) {
  HardeningPools out;
  out.clean_pool = prompt.demonstrations;
  if (!recipe.adv_demo) return out;

  const std::set<std::string> demo_texts = TextsOf(prompt.demonstrations);
  const std::vector<LabeledSample>& source =
      train ? *train : prompt.demonstrations;
  std::vector<const LabeledSample*> positives;
  std::vector<std::string> negatives;
  for (const LabeledSample& s : source) {
    if (train && demo_texts.count(s.text)) continue;
    if (s.label == prompt.task.positive_label()) {
      positives.push_back(&s);
    } else {
      negatives.push_back(s.text);
    }
  }
  std::optional<BenignPool> pool;
  if (!negatives.empty()) pool.emplace(negatives);

  for (AttackKind k : kAttackKinds) {
    const auto ki = static_cast<std::size_t>(k);
    if (recipe.adv_demo->ratio_per_attack[ki] <= 0.0) continue;
    AttackConfig attack = BestAttackConfig(prompt.task.task_name(), k);
    if (k != AttackKind::kFakeClaim && !pool) {
      throw PoolExhausted("no negative samples to build " +
                          std::string(AttackKindName(k)) +
                          " demonstrations from");
    }
    if (auto* needle = std::get_if<NeedleConfig>(&attack)) {
      needle->n_benign = std::min(needle->n_benign, pool->size());
    }
    const std::uint64_t stream =
        DeriveSeed(seed, "adv_pool/" + std::string(AttackKindName(k)));
    for (std::size_t i = 0; i < positives.size(); ++i) {
      SetSeed(attack, DeriveSeed(stream, i));
      out.adv_pools[ki].emplace_back(
          ApplyAttack(positives[i]->text, attack, pool ? &*pool : nullptr),
          positives[i]->label);
    }
  }
  return out;
}

json ReferenceResult(const ExperimentConfig& config) {
  if (RunKindOf(config) != RunKind::kAttack) return nullptr;
  if (config.task_name != "toxicity" ||
      KindOf(*config.attack) != AttackKind::kTemplate) {
    return nullptr;
  }
  AttackConfig attack = *config.attack;
  SetSeed(attack, 0);
  if (ToJson(attack) != ToJson(BestAttackConfig("toxicity",
                                                AttackKind::kTemplate))) {
    return nullptr;
  }
  return {{"model", "Llama 3.1 8B"},
          {"asr", 88.4},
          {"rasr", 1.0},
          {"reproducible_with_mock", false}};
}

ResultRecord RunExperiment(const ExperimentConfig& config, Backend& backend) {
  const ExperimentContext ctx = PrepareExperiment(config);
  const RunKind kind = RunKindOf(config);
  const std::vector<Label> labels = LabelsOf(ctx.task);
  const std::string& positive = ctx.task.positive_label().name();

  ResultRecord record;
  record.kind = kind;
  record.config = ToJson(config);
  record.seed = config.master_seed;
  record.reference = ReferenceResult(config);
  record.dataset_summary = {
      {"train_size", ctx.train.samples.size()},
      {"test_size", ctx.test.samples.size()},
      {"train_class_counts", ctx.train.ClassCounts()},
      {"test_class_counts", ctx.test.ClassCounts()},
      {"n_demonstrations", ctx.demonstrations.size()},
  };

  std::optional<BenignPool> pool;
  const bool needs_pool =
      kind != RunKind::kClean &&
      (KindOf(*config.attack) != AttackKind::kFakeClaim ||
       (config.defense && config.defense->adv_demo));
  if (needs_pool) {
    std::vector<std::string> texts =
        BuildBenignPool(ctx, backend, config.parallelism);
    record.dataset_summary["benign_pool_size"] = texts.size();
    CheckDisjoint(ctx.test, std::set<std::string>(texts.begin(), texts.end()),
                  "benign pool");
    if (!texts.empty()) pool.emplace(std::move(texts));
  }
  auto pool_or_throw = [&]() -> const BenignPool* {
    if (!pool) throw PoolExhausted("benign pool is empty after exclusions");
    return &*pool;
  };

  std::optional<IclPrompt> hardened;
  if (kind == RunKind::kDefense) {
    const DefenseRecipe& recipe = *config.defense;
    AdvPools adv_pools;
    if (recipe.adv_demo) {
      const std::set<std::string> demo_texts = TextsOf(ctx.demonstrations);
      std::vector<const DatasetSample*> sources;
      for (const DatasetSample& s : ctx.train.samples) {
        if (s.sample.label.name() == positive &&
            !demo_texts.count(s.sample.text)) {
          sources.push_back(&s);
        }
      }
      std::set<std::string> source_texts;
      for (const DatasetSample* s : sources) source_texts.insert(s->sample.text);
      CheckDisjoint(ctx.test, source_texts, "adversarial demonstration sources");
      for (AttackKind k : kAttackKinds) {
        const auto ki = static_cast<std::size_t>(k);
        if (recipe.adv_demo->ratio_per_attack[ki] <= 0.0) continue;
        AttackConfig attack = KindOf(*config.attack) == k
                                  ? *config.attack
                                  : BestAttackConfig(config.task_name, k);
        const std::uint64_t stream =
            DeriveSeed(config.master_seed, "adv_pool/" +
                                               std::string(AttackKindName(k)));
        for (const DatasetSample* s : sources) {
          SetSeed(attack, DeriveSeed(stream, s->sample_id));
          adv_pools[ki].emplace_back(
              ApplyAttack(s->sample.text, attack,
                          k == AttackKind::kFakeClaim ? nullptr
                                                      : pool_or_throw()),
              s->sample.label);
        }
      }
    }
    hardened = Harden(ctx.base_prompt, recipe, ctx.demonstrations, adv_pools,
                      DeriveSeed(config.master_seed, "harden"));
    CheckDisjoint(ctx.test, TextsOf(hardened->demonstrations),
                  "hardened demonstrations");
  }

  const BenignPool* attack_pool = nullptr;
  if (kind != RunKind::kClean &&
      KindOf(*config.attack) != AttackKind::kFakeClaim) {
    attack_pool = pool_or_throw();
  }
  if (kind != RunKind::kClean) {
    const bool any_positive = std::any_of(
        ctx.test.samples.begin(), ctx.test.samples.end(),
        [&](const DatasetSample& s) { return s.sample.label.name() == positive; });
    if (!any_positive) {
      throw InvalidArgument("no positive-class samples in the evaluation set");
    }
  }

  record.rows.resize(ctx.test.samples.size());
  ParallelFor(ctx.test.samples.size(), config.parallelism, [&](std::size_t i) {
    const DatasetSample& s = ctx.test.samples[i];
    SampleRow row;
    row.sample_id = s.sample_id;
    row.label = s.sample.label.name();
    row.clean = ClassifyText(backend, ctx.base_prompt, s.sample.text, labels);
    std::optional<std::string> adv_text;
    if (kind != RunKind::kClean && row.label == positive) {
      AttackConfig attack = *config.attack;
      SetSeed(attack, DeriveSeed(config.master_seed, s.sample_id));
      adv_text = ApplyAttack(s.sample.text, attack, attack_pool);
      row.adv = ClassifyText(backend, ctx.base_prompt, *adv_text, labels);
    }
    if (hardened) {
      row.hardened_clean =
          ClassifyText(backend, *hardened, s.sample.text, labels);
      if (adv_text) {
        row.hardened_adv = ClassifyText(backend, *hardened, *adv_text, labels);
      }
    }
    record.rows[i] = std::move(row);
  });

  Reaggregate(record, ctx.task);
  return record;
}

ResultRecord RunExperiment(const ExperimentConfig& config) {
  const std::unique_ptr<Backend> backend = MakeBackend(config.backend);
  return RunExperiment(config, *backend);
}

void Reaggregate(ResultRecord& record, const TaskSpec& task) {
  std::sort(record.rows.begin(), record.rows.end(),
            [](const SampleRow& a, const SampleRow& b) {
              return a.sample_id < b.sample_id;
            });
  record.classification = ReportFor(record.rows, task, nullptr);
  record.attack.reset();
  record.hardened_classification.reset();
  record.hardened_attack.reset();
  record.defense.reset();
  if (record.kind == RunKind::kClean) return;
  record.attack = AttackFor(record.rows, task, false);
  if (record.kind == RunKind::kAttack) return;
  record.hardened_classification =
      ReportFor(record.rows, task, &SampleRow::hardened_clean);
  record.hardened_attack = AttackFor(record.rows, task, true);
  record.defense = MakeDefenseReport(
      record.attack->asr, record.hardened_attack->asr,
      record.classification.accuracy, record.hardened_classification->accuracy);
}

// ---------------------------------------------------------------------------

json ToJson(const ClassificationReport& r) {
  return {{"tp", r.counts.tp},
          {"fp", r.counts.fp},
          {"tn", r.counts.tn},
          {"fn", r.counts.fn},
          {"accuracy", r.accuracy},
          {"precision", OptionalToJson(r.precision)},
          {"recall", OptionalToJson(r.recall)},
          {"f1", OptionalToJson(r.f1)},
          {"fpr", OptionalToJson(r.fpr)}};
}

json ToJson(const AttackReport& r) {
  return {{"recall_clean", r.recall_clean},
          {"recall_adv", r.recall_adv},
          {"asr", r.asr},
          {"rasr", r.rasr ? json(*r.rasr) : json("undefined")}};
}

json ToJson(const DefenseReport& r) {
  return {{"asr_baseline", r.asr_baseline},
          {"asr_defended", r.asr_defended},
          {"asrr_abs", r.asrr_abs},
          {"asrr_rel", OptionalToJson(r.asrr_rel)},
          {"accuracy_clean_baseline", r.accuracy_clean_baseline},
          {"accuracy_clean_defended", r.accuracy_clean_defended},
          {"ad", r.ad},
          {"de", r.de},
          {"lambda", r.lambda},
          {"ad_threshold", r.ad_threshold},
          {"admissible", r.admissible}};
}

json ToJson(const SampleRow& row) {
  json j = {{"sample_id", row.sample_id},
            {"label", row.label},
            {"clean", PredictionToJson(row.clean)}};
  if (row.adv) j["adv"] = PredictionToJson(*row.adv);
  if (row.hardened_clean) {
    j["hardened_clean"] = PredictionToJson(*row.hardened_clean);
  }
  if (row.hardened_adv) j["hardened_adv"] = PredictionToJson(*row.hardened_adv);
  return j;
}

json ToJson(const ResultRecord& record, bool include_rows) {
  json j = {{"kind", RunKindName(record.kind)},
            {"config", record.config},
            {"seed", record.seed},
            {"dataset", record.dataset_summary},
            {"classification", ToJson(record.classification)}};
  if (record.attack) j["attack"] = ToJson(*record.attack);
  if (record.hardened_classification) {
    j["hardened_classification"] = ToJson(*record.hardened_classification);
  }
  if (record.hardened_attack) {
    j["hardened_attack"] = ToJson(*record.hardened_attack);
  }
  if (record.defense) j["defense"] = ToJson(*record.defense);
  if (!record.reference.is_null()) j["reference"] = record.reference;
  if (include_rows) {
    json rows = json::array();
    for (const SampleRow& row : record.rows) rows.push_back(ToJson(row));
    j["rows"] = std::move(rows);
  }
  return j;
}

SampleRow RowFromJson(const json& j) {
  SampleRow row;
  row.sample_id = j.at("sample_id").get<std::size_t>();
  row.label = j.at("label").get<std::string>();
  row.clean = PredictionFromJson(j.at("clean"));
  if (j.contains("adv")) row.adv = PredictionFromJson(j["adv"]);
  if (j.contains("hardened_clean")) {
    row.hardened_clean = PredictionFromJson(j["hardened_clean"]);
  }
  if (j.contains("hardened_adv")) {
    row.hardened_adv = PredictionFromJson(j["hardened_adv"]);
  }
  return row;
}

ResultRecord RecordFromJson(const json& j) {
  ResultRecord record;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "clean") {
    record.kind = RunKind::kClean;
  } else if (kind == "attack") {
    record.kind = RunKind::kAttack;
  } else if (kind == "defense") {
    record.kind = RunKind::kDefense;
  } else {
    throw InvalidArgument("unknown record kind '" + kind + "'");
  }
  record.config = j.at("config");
  record.seed = j.at("seed").get<std::uint64_t>();
  record.dataset_summary = j.at("dataset");
  if (j.contains("reference")) record.reference = j["reference"];
  for (const json& row : j.at("rows")) record.rows.push_back(RowFromJson(row));
  Reaggregate(record, DefaultTask(record.config.at("task").get<std::string>()));
  return record;
}

std::string RowsToCsv(const std::vector<SampleRow>& rows) {
  std::ostringstream out;
  out << "sample_id,label,clean_prediction,clean_confidence,clean_forced,"
         "adv_prediction,adv_confidence,adv_forced,"
         "hardened_clean_prediction,hardened_clean_confidence,"
         "hardened_clean_forced,hardened_adv_prediction,"
         "hardened_adv_confidence,hardened_adv_forced\n";
  auto cells = [&out](const std::optional<Prediction>& p) {
    if (!p) {
      out << ",,,";
      return;
    }
    out << ',' << p->label << ',' << p->confidence << ','
        << (p->forced_incorrect || p->error ? 1 : 0);
  };
  out.precision(17);
  for (const SampleRow& row : rows) {
    out << row.sample_id << ',' << row.label;
    cells(row.clean);
    cells(row.adv);
    cells(row.hardened_clean);
    cells(row.hardened_adv);
    out << '\n';
  }
  return out.str();
}

}  // namespace icl_evader
