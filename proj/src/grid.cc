#include "icl_evader/grid.h"

#include <algorithm>
#include <fstream>
#include <map>

#include "icl_evader/error.h"
#include "icl_evader/random.h"

namespace icl_evader {
namespace {

using nlohmann::json;

std::size_t ToCount(const std::string& name, const std::string& value) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty() || value[0] == '-') {
    throw InvalidArgument("grid axis " + name + ": '" + value +
                          "' is not a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

std::size_t ToIndex(const std::string& name, const std::string& value,
                    std::size_t size) {
  const std::size_t v = ToCount(name, value);
  if (v >= size) {
    throw InvalidArgument("grid axis " + name + ": " + value +
                          " is out of range [0, " + std::to_string(size - 1) +
                          "]");
  }
  return v;
}

bool ToBool(const std::string& name, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InvalidArgument("grid axis " + name + ": '" + value +
                        "' is not a boolean");
}

template <typename T>
T& AttackAs(ExperimentConfig& config, AttackKind kind) {
  if (!config.attack || KindOf(*config.attack) != kind) {
    config.attack = DefaultAttackConfig(config.task_name, kind);
  }
  return std::get<T>(*config.attack);
}

DefenseRecipe& Recipe(ExperimentConfig& config) {
  if (!config.defense) config.defense = DefenseRecipe{};
  return *config.defense;
}

AdvDemoConfig& AdvDemo(ExperimentConfig& config) {
  DefenseRecipe& r = Recipe(config);
  if (!r.adv_demo) r.adv_demo = AdvDemoConfig{};
  return *r.adv_demo;
}

RandomTemplateConfig& RandomTemplate(ExperimentConfig& config) {
  DefenseRecipe& r = Recipe(config);
  if (!r.random_template) r.random_template = RandomTemplateConfig{};
  return *r.random_template;
}

CautionaryWarningConfig& Warning(ExperimentConfig& config) {
  DefenseRecipe& r = Recipe(config);
  if (!r.cw) r.cw = CautionaryWarningConfig{};
  return *r.cw;
}

using Setter = void (*)(ExperimentConfig&, const std::string&,
                        const std::string&);

const std::map<std::string, Setter>& Setters() {
  static const std::map<std::string, Setter> kSetters = {
      {"n_shots",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         c.n_shots = ToCount(n, v);
       }},
      {"attack_kind",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         const AttackKind kind = ParseAttackKind(v);
         if (!c.attack || KindOf(*c.attack) != kind) {
           c.attack = DefaultAttackConfig(c.task_name, kind);
         }
       }},
      {"best_attack",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.attack = BestAttackConfig(c.task_name, ParseAttackKind(v));
       }},
      {"n_claims",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         AttackAs<FakeClaimConfig>(c, AttackKind::kFakeClaim).n_claims =
             ToCount(n, v);
       }},
      {"claim_position",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         AttackAs<FakeClaimConfig>(c, AttackKind::kFakeClaim).position =
             ParseClaimPosition(v);
       }},
      {"claim",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         AttackAs<FakeClaimConfig>(c, AttackKind::kFakeClaim).claims =
             ClaimOption(c.task_name, v);
       }},
      {"template_preset",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         auto& t = AttackAs<TemplateAttackConfig>(c, AttackKind::kTemplate);
         const PrefixPair& p =
             kAttackerPrefixPresets[ToIndex(n, v, kAttackerPrefixPresets.size())];
         t.sample_prefix = p.sample;
         t.answer_prefix = p.answer;
       }},
      {"template_labels",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         SetTemplateLabels(
             AttackAs<TemplateAttackConfig>(c, AttackKind::kTemplate),
             c.task_name, v);
       }},
      {"template_n_demos",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         auto& t = AttackAs<TemplateAttackConfig>(c, AttackKind::kTemplate);
         t.n_demos = ToCount(n, v);
         t.test_position = std::min(t.test_position, t.n_demos);
       }},
      {"template_test_position",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         AttackAs<TemplateAttackConfig>(c, AttackKind::kTemplate)
             .test_position = ToCount(n, v);
       }},
      {"n_benign",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         AttackAs<NeedleConfig>(c, AttackKind::kNeedle).n_benign =
             ToCount(n, v);
       }},
      {"hide_format",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         AttackAs<NeedleConfig>(c, AttackKind::kNeedle).hide_format =
             static_cast<HideFormat>(ToIndex(n, v, HideFormatCatalog().size()));
       }},
      {"highlight_format",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         AttackAs<NeedleConfig>(c, AttackKind::kNeedle).highlight_format =
             static_cast<HighlightFormat>(
                 ToIndex(n, v, HighlightFormatCatalog().size()));
       }},
      {"insert_location",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         AttackAs<NeedleConfig>(c, AttackKind::kNeedle).insert_location =
             ParseInsertLocation(v);
       }},
      {"recipe",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         if (v == "none") {
           c.defense.reset();
         } else {
           c.defense = ParseRecipe(v);
         }
       }},
      {"adv_ratio",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         const double r = static_cast<double>(ToCount(n, v)) / 100.0;
         AdvDemo(c).ratio_per_attack = {r, r, r};
       }},
      {"placement",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         AdvDemo(c).placement = ParseAdvDemoPlacement(v);
       }},
      {"rt_length",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         RandomTemplate(c).length = ToCount(n, v);
       }},
      {"rt_tag",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         RandomTemplate(c).use_tag = ToBool(n, v);
       }},
      {"cw_message",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         Warning(c).message = WarningMessage::Builtin(
             static_cast<WarningVariant>(ToIndex(n, v, 3)));
       }},
      {"cw_position",
       [](ExperimentConfig& c, const std::string& n, const std::string& v) {
         Warning(c).position = static_cast<WarningPosition>(ToIndex(n, v, 3));
       }},
  };
  return kSetters;
}

json AssignmentToJson(
    const std::vector<std::pair<std::string, std::string>>& assignment) {
  json j = json::array();
  for (const auto& [name, value] : assignment) j.push_back({name, value});
  return j;
}

}  // namespace

const std::vector<std::string>& GridAxisNames() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> names;
    for (const auto& [name, setter] : Setters()) names.push_back(name);
    return names;
  }();
  return kNames;
}

void ApplyAxis(ExperimentConfig& config, const std::string& name,
               const std::string& value) {
  const auto it = Setters().find(name);
  if (it == Setters().end()) {
    throw InvalidArgument("unknown grid axis '" + name + "'");
  }
  it->second(config, name, value);
}

std::vector<GridCell> ExpandGrid(const GridSpec& spec) {
  std::size_t total = 1;
  for (const GridAxis& axis : spec.axes) {
    if (axis.values.empty()) {
      throw InvalidArgument("grid axis '" + axis.name + "' is empty");
    }
    if (!Setters().count(axis.name)) {
      throw InvalidArgument("unknown grid axis '" + axis.name + "'");
    }
    total *= axis.values.size();
  }
  std::vector<GridCell> cells;
  cells.reserve(total);
  for (std::size_t index = 0; index < total; ++index) {
    GridCell cell;
    cell.index = index;
    cell.config = spec.base;
    std::size_t rest = index;
    std::vector<std::size_t> picks(spec.axes.size());
    for (std::size_t a = spec.axes.size(); a-- > 0;) {
      picks[a] = rest % spec.axes[a].values.size();
      rest /= spec.axes[a].values.size();
    }
    for (std::size_t a = 0; a < spec.axes.size(); ++a) {
      const std::string& value = spec.axes[a].values[picks[a]];
      cell.assignment.emplace_back(spec.axes[a].name, value);
      ApplyAxis(cell.config, spec.axes[a].name, value);
    }
    cell.config.master_seed = DeriveSeed(spec.base.master_seed, index);
    cell.config.Validate();
    cells.push_back(std::move(cell));
  }
  return cells;
}

json JournalLine(const GridResult& result) {
  return {{"cell", result.index},
          {"assignment", AssignmentToJson(result.assignment)},
          {"record", ToJson(result.record)}};
}

GridResult GridResultFromJournal(const json& line) {
  GridResult r;
  r.index = line.at("cell").get<std::size_t>();
  for (const json& pair : line.at("assignment")) {
    r.assignment.emplace_back(pair.at(0).get<std::string>(),
                              pair.at(1).get<std::string>());
  }
  r.record = RecordFromJson(line.at("record"));
  return r;
}

std::vector<GridResult> ReadJournal(const std::string& path) {
  std::vector<GridResult> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    json line;
    try {
      line = json::parse(text);
    } catch (const json::parse_error&) {
      // Only the last line may be cut short by an interrupted run.
      if (in.peek() == std::ifstream::traits_type::eof()) break;
      throw ParseError("journal line is not valid JSON", line_no);
    }
    out.push_back(GridResultFromJournal(line));
  }
  return out;
}

std::vector<GridResult> RunGrid(const GridSpec& spec, Backend& backend) {
  const std::vector<GridCell> cells = ExpandGrid(spec);
  std::map<std::size_t, GridResult> done;
  if (spec.journal_path) {
    for (GridResult& r : ReadJournal(*spec.journal_path)) {
      if (r.index >= cells.size() || r.assignment != cells[r.index].assignment) {
        throw InvalidArgument("journal " + *spec.journal_path +
                              " does not match this grid at cell " +
                              std::to_string(r.index));
      }
      done.emplace(r.index, std::move(r));
    }
  }
  std::ofstream journal;
  if (spec.journal_path) {
    journal.open(*spec.journal_path, std::ios::app);
    if (!journal) {
      throw InvalidArgument("cannot open journal " + *spec.journal_path);
    }
  }
  for (const GridCell& cell : cells) {
    if (done.count(cell.index)) continue;
    GridResult r{cell.index, cell.assignment,
                 RunExperiment(cell.config, backend)};
    if (journal.is_open()) {
      journal << JournalLine(r).dump() << '\n';
      journal.flush();
    }
    done.emplace(cell.index, std::move(r));
  }
  std::vector<GridResult> out;
  for (auto& [index, r] : done) out.push_back(std::move(r));
  return out;
}

std::vector<GridResult> RunGrid(const GridSpec& spec) {
  const std::unique_ptr<Backend> backend = MakeBackend(spec.base.backend);
  return RunGrid(spec, *backend);
}

json GridReport(std::vector<GridResult> results) {
  auto score = [](const GridResult& r) -> double {
    if (r.record.defense) return r.record.defense->de;
    if (r.record.attack) return r.record.attack->asr;
    return 0.0;
  };
  std::stable_sort(results.begin(), results.end(),
                   [&](const GridResult& a, const GridResult& b) {
                     const double sa = score(a);
                     const double sb = score(b);
                     if (sa != sb) return sa > sb;
                     return a.index < b.index;
                   });
  json cells = json::array();
  for (const GridResult& r : results) {
    cells.push_back({{"cell", r.index},
                     {"assignment", AssignmentToJson(r.assignment)},
                     {"record", ToJson(r.record, false)}});
  }
  std::string sort_key = "index";
  if (!results.empty()) {
    if (results.front().record.defense) {
      sort_key = "de";
    } else if (results.front().record.attack) {
      sort_key = "asr";
    }
  }
  return {{"sorted_by", sort_key}, {"cells", cells}};
}

}  // namespace icl_evader
