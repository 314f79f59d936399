#include "icl_evader/config.h"

#include <fstream>
#include <set>
#include <sstream>
#include <toml.hpp>

#include "icl_evader/error.h"

namespace icl_evader {
namespace {

using nlohmann::json;

// Typed accessors over one TOML table that reject unknown keys.
class Section {
 public:
  Section(const toml::table& table, std::string name)
      : table_(table), name_(std::move(name)) {}

  void Allow(std::initializer_list<std::string_view> keys) const {
    std::set<std::string_view> allowed(keys);
    for (auto&& [key, node] : table_) {
      if (!allowed.count(key.str())) {
        throw InvalidArgument("unknown key '" + Path(key.str()) + "'");
      }
    }
  }

  bool Has(std::string_view key) const { return table_.contains(key); }

  std::optional<std::string> String(std::string_view key) const {
    const toml::node* node = table_.get(key);
    if (node == nullptr) return std::nullopt;
    if (auto s = node->value<std::string>(); s && node->is_string()) return s;
    throw InvalidArgument("'" + Path(key) + "' must be a string");
  }

  // Accepts strings and integers; integers become their decimal text.
  std::optional<std::string> Scalar(std::string_view key) const {
    const toml::node* node = table_.get(key);
    if (node == nullptr) return std::nullopt;
    if (node->is_integer()) return std::to_string(*node->value<std::int64_t>());
    return String(key);
  }

  std::optional<std::int64_t> Int(std::string_view key, std::int64_t min,
                                  std::int64_t max) const {
    const toml::node* node = table_.get(key);
    if (node == nullptr) return std::nullopt;
    if (!node->is_integer()) {
      throw InvalidArgument("'" + Path(key) + "' must be an integer");
    }
    const std::int64_t v = *node->value<std::int64_t>();
    if (v < min || v > max) {
      throw InvalidArgument("'" + Path(key) + "' must lie in [" +
                            std::to_string(min) + ", " + std::to_string(max) +
                            "]");
    }
    return v;
  }

  std::optional<double> Double(std::string_view key) const {
    const toml::node* node = table_.get(key);
    if (node == nullptr) return std::nullopt;
    if (!node->is_floating_point() && !node->is_integer()) {
      throw InvalidArgument("'" + Path(key) + "' must be a number");
    }
    return *node->value<double>();
  }

  std::optional<bool> Bool(std::string_view key) const {
    const toml::node* node = table_.get(key);
    if (node == nullptr) return std::nullopt;
    if (!node->is_boolean()) {
      throw InvalidArgument("'" + Path(key) + "' must be a boolean");
    }
    return *node->value<bool>();
  }

  std::optional<std::vector<std::string>> Strings(std::string_view key) const {
    const toml::node* node = table_.get(key);
    if (node == nullptr) return std::nullopt;
    const toml::array* arr = node->as_array();
    if (arr == nullptr) {
      throw InvalidArgument("'" + Path(key) + "' must be an array");
    }
    std::vector<std::string> out;
    for (const toml::node& el : *arr) {
      if (el.is_string()) {
        out.push_back(*el.value<std::string>());
      } else if (el.is_integer()) {
        out.push_back(std::to_string(*el.value<std::int64_t>()));
      } else if (el.is_boolean()) {
        out.push_back(*el.value<bool>() ? "true" : "false");
      } else {
        throw InvalidArgument("'" + Path(key) +
                              "' entries must be strings, integers or booleans");
      }
    }
    return out;
  }

  std::optional<Section> Table(std::string_view key) const {
    const toml::node* node = table_.get(key);
    if (node == nullptr) return std::nullopt;
    const toml::table* t = node->as_table();
    if (t == nullptr) {
      throw InvalidArgument("'" + Path(key) + "' must be a table");
    }
    return Section(*t, Path(key));
  }

  const toml::table& table() const { return table_; }
  std::string Path(std::string_view key) const {
    return name_.empty() ? std::string(key) : name_ + "." + std::string(key);
  }

 private:
  const toml::table& table_;
  std::string name_;
};

constexpr std::int64_t kMaxCount = 1'000'000;

AttackConfig ParseAttackSection(const Section& s, std::string_view task_name) {
  s.Allow({"kind", "best", "claims", "claim", "n_claims", "position", "preset",
           "sample_prefix", "answer_prefix", "labels", "label_pos",
           "label_neg", "n_demos", "test_position", "demo_separator",
           "n_benign", "hide_format", "highlight_format", "insert_location",
           "joiner"});
  const auto kind_name = s.String("kind");
  if (!kind_name) throw InvalidArgument("'attack.kind' is required");
  const AttackKind kind = ParseAttackKind(*kind_name);
  AttackConfig config = s.Bool("best").value_or(false)
                            ? BestAttackConfig(task_name, kind)
                            : DefaultAttackConfig(task_name, kind);

  auto reject = [&](std::initializer_list<std::string_view> keys) {
    for (std::string_view k : keys) {
      if (s.Has(k)) {
        throw InvalidArgument("'" + s.Path(k) + "' does not apply to the " +
                              std::string(AttackKindName(kind)) + " attack");
      }
    }
  };

  if (auto* fc = std::get_if<FakeClaimConfig>(&config)) {
    reject({"preset", "sample_prefix", "answer_prefix", "labels", "label_pos",
            "label_neg", "n_demos", "test_position", "demo_separator",
            "n_benign", "hide_format", "highlight_format", "insert_location",
            "joiner"});
    if (s.Has("claims") && s.Has("claim")) {
      throw InvalidArgument("set at most one of attack.claims, attack.claim");
    }
    if (auto v = s.Strings("claims")) fc->claims = *v;
    if (auto v = s.Scalar("claim")) fc->claims = ClaimOption(task_name, *v);
    if (auto v = s.Int("n_claims", 1, kMaxCount)) fc->n_claims = *v;
    if (auto v = s.String("position")) fc->position = ParseClaimPosition(*v);
  } else if (auto* tc = std::get_if<TemplateAttackConfig>(&config)) {
    reject({"claims", "claim", "n_claims", "position", "n_benign",
            "hide_format", "highlight_format", "insert_location", "joiner"});
    if (auto v = s.Int("preset", 0, kAttackerPrefixPresets.size() - 1)) {
      tc->sample_prefix = kAttackerPrefixPresets[*v].sample;
      tc->answer_prefix = kAttackerPrefixPresets[*v].answer;
    }
    if (auto v = s.String("sample_prefix")) tc->sample_prefix = *v;
    if (auto v = s.String("answer_prefix")) tc->answer_prefix = *v;
    if (auto v = s.String("labels")) SetTemplateLabels(*tc, task_name, *v);
    if (auto v = s.String("label_pos")) tc->label_pos = *v;
    if (auto v = s.String("label_neg")) tc->label_neg = *v;
    if (auto v = s.Int("n_demos", 1, kMaxCount)) tc->n_demos = *v;
    if (auto v = s.Int("test_position", 1, kMaxCount)) tc->test_position = *v;
    if (auto v = s.String("demo_separator")) tc->demo_separator = *v;
  } else {
    auto& nc = std::get<NeedleConfig>(config);
    reject({"claims", "claim", "n_claims", "position", "preset",
            "sample_prefix", "answer_prefix", "labels", "label_pos",
            "label_neg", "n_demos", "test_position", "demo_separator"});
    if (auto v = s.Int("n_benign", 1, kMaxCount)) nc.n_benign = *v;
    if (auto v = s.Int("hide_format", 0, 6)) {
      nc.hide_format = static_cast<HideFormat>(*v);
    }
    if (auto v = s.Int("highlight_format", 0, 7)) {
      nc.highlight_format = static_cast<HighlightFormat>(*v);
    }
    if (auto v = s.String("insert_location")) {
      nc.insert_location = ParseInsertLocation(*v);
    }
    if (auto v = s.String("joiner")) nc.joiner = *v;
  }
  std::visit([](const auto& c) { c.Validate(); }, config);
  return config;
}

DefenseRecipe ParseDefenseSection(const Section& s) {
  s.Allow({"recipe", "placement", "rt_tag", "cw_text"});
  const auto code = s.String("recipe");
  if (!code) throw InvalidArgument("'defense.recipe' is required");
  DefenseRecipe recipe = ParseRecipe(*code);
  if (auto v = s.String("placement")) {
    if (!recipe.adv_demo) {
      throw InvalidArgument("'defense.placement' needs a p component");
    }
    recipe.adv_demo->placement = ParseAdvDemoPlacement(*v);
  }
  if (auto v = s.Bool("rt_tag")) {
    if (!recipe.random_template) {
      throw InvalidArgument("'defense.rt_tag' needs a length component");
    }
    recipe.random_template->use_tag = *v;
  }
  if (auto v = s.String("cw_text")) {
    if (!recipe.cw) {
      throw InvalidArgument("'defense.cw_text' needs a CWmessage component");
    }
    recipe.cw->message.text = *v;
  }
  return recipe;
}

}  // namespace

AttackConfig DefaultAttackConfig(std::string_view task_name, AttackKind kind) {
  switch (kind) {
    case AttackKind::kFakeClaim: {
      FakeClaimConfig c;
      c.claims = {FakeClaimCandidates(task_name)[kDefaultClaimIndex]};
      return c;
    }
    case AttackKind::kTemplate:
      return TemplateAttackConfig{};
    case AttackKind::kNeedle:
      return NeedleConfig{};
  }
  throw InvalidArgument("unknown attack kind");
}

void SetTemplateLabels(TemplateAttackConfig& config, std::string_view task_name,
                       std::string_view mode) {
  if (mode == "task") {
    const TaskSpec task = DefaultTask(task_name);
    config.label_pos = task.positive_label().name();
    config.label_neg = task.negative_label().name();
  } else if (mode == "generic") {
    config.label_pos = "bad";
    config.label_neg = "good";
  } else {
    throw InvalidArgument("template labels must be task or generic, got '" +
                          std::string(mode) + "'");
  }
}

ConfigFile ParseConfigToml(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ParseError(std::string("config: ") + std::string(e.description()),
                     e.source().begin.line);
  }
  const Section s(root, "");
  s.Allow({"task", "dataset", "n_shots", "train_fraction", "master_seed",
           "parallelism", "sample_limit", "template", "backend", "attack",
           "defense", "grid"});

  ConfigFile out;
  ExperimentConfig& cfg = out.experiment;
  if (auto v = s.String("task")) cfg.task_name = *v;
  DefaultTask(cfg.task_name);  // validates the name
  if (auto v = s.String("dataset")) cfg.dataset_path = *v;
  if (auto v = s.Int("n_shots", 0, kMaxCount)) cfg.n_shots = *v;
  if (auto v = s.Double("train_fraction")) cfg.train_fraction = *v;
  if (auto v = s.Int("master_seed", 0, INT64_MAX)) cfg.master_seed = *v;
  if (auto v = s.Int("parallelism", 1, 1024)) cfg.parallelism = *v;
  if (auto v = s.Int("sample_limit", 1, INT64_MAX)) cfg.sample_limit = *v;

  if (auto t = s.Table("template")) {
    t->Allow({"sample_prefix", "answer_prefix", "separator", "test_tag"});
    if (auto v = t->String("sample_prefix")) cfg.prompt_template.sample_prefix = *v;
    if (auto v = t->String("answer_prefix")) cfg.prompt_template.answer_prefix = *v;
    if (auto v = t->String("separator")) cfg.prompt_template.separator = *v;
    if (auto v = t->String("test_tag")) cfg.prompt_template.test_tag = *v;
  }
  if (auto t = s.Table("backend")) {
    t->Allow({"kind", "base_url", "model", "api_key_env", "top_candidates",
              "max_tokens", "timeout_seconds", "max_parallel_requests"});
    BackendConfig& b = cfg.backend;
    if (auto v = t->String("kind")) b.kind = ParseBackendKind(*v);
    if (auto v = t->String("base_url")) b.base_url = *v;
    if (auto v = t->String("model")) b.model_name = *v;
    if (auto v = t->String("api_key_env")) b.api_key_env = *v;
    if (auto v = t->Int("top_candidates", 1, 100)) b.top_candidates = *v;
    if (auto v = t->Int("max_tokens", 1, 8)) b.max_tokens = *v;
    if (auto v = t->Double("timeout_seconds")) b.request_timeout_seconds = *v;
    if (auto v = t->Int("max_parallel_requests", 1, 1024)) {
      b.max_parallel_requests = *v;
    }
  }
  if (auto t = s.Table("attack")) cfg.attack = ParseAttackSection(*t, cfg.task_name);
  if (auto t = s.Table("defense")) cfg.defense = ParseDefenseSection(*t);
  if (auto t = s.Table("grid")) {
    t->Allow({"journal", "axis"});
    if (auto v = t->String("journal")) out.journal_path = *v;
    if (const toml::node* axes = t->table().get("axis")) {
      const toml::array* arr = axes->as_array();
      if (arr == nullptr) {
        throw InvalidArgument("'grid.axis' must be an array of tables");
      }
      for (const toml::node& el : *arr) {
        const toml::table* at = el.as_table();
        if (at == nullptr) {
          throw InvalidArgument("'grid.axis' entries must be tables");
        }
        const Section axis(*at, "grid.axis");
        axis.Allow({"name", "values"});
        GridAxis a;
        a.name = axis.String("name").value_or("");
        if (a.name.empty()) throw InvalidArgument("'grid.axis.name' is required");
        a.values = axis.Strings("values").value_or(std::vector<std::string>{});
        if (a.values.empty()) {
          throw InvalidArgument("grid axis '" + a.name + "' has no values");
        }
        out.grid_axes.push_back(std::move(a));
      }
    }
  }
  cfg.Validate();
  return out;
}

ConfigFile LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseConfigToml(buf.str());
}

// ---------------------------------------------------------------------------

json ToJson(const AttackConfig& config) {
  json j;
  j["kind"] = AttackKindName(KindOf(config));
  if (const auto* fc = std::get_if<FakeClaimConfig>(&config)) {
    j["claims"] = fc->claims;
    j["n_claims"] = fc->n_claims;
    j["position"] = ClaimPositionName(fc->position);
  } else if (const auto* tc = std::get_if<TemplateAttackConfig>(&config)) {
    j["sample_prefix"] = tc->sample_prefix;
    j["answer_prefix"] = tc->answer_prefix;
    j["label_pos"] = tc->label_pos;
    j["label_neg"] = tc->label_neg;
    j["n_demos"] = tc->n_demos;
    j["test_position"] = tc->test_position;
    j["demo_separator"] = tc->demo_separator;
  } else {
    const auto& nc = std::get<NeedleConfig>(config);
    j["n_benign"] = nc.n_benign;
    j["hide_format"] = static_cast<int>(nc.hide_format);
    j["highlight_format"] = static_cast<int>(nc.highlight_format);
    j["insert_location"] = InsertLocationName(nc.insert_location);
    j["joiner"] = nc.joiner;
  }
  return j;
}

json ToJson(const DefenseRecipe& recipe) {
  json j;
  try {
    j["code"] = FormatRecipe(recipe);
  } catch (const InvalidArgument&) {
    j["code"] = nullptr;
  }
  if (recipe.adv_demo) {
    j["adv_demo"] = {
        {"ratios", recipe.adv_demo->ratio_per_attack},
        {"placement", AdvDemoPlacementName(recipe.adv_demo->placement)}};
  } else {
    j["adv_demo"] = nullptr;
  }
  if (recipe.random_template) {
    j["random_template"] = {{"length", recipe.random_template->length},
                           {"use_tag", recipe.random_template->use_tag}};
  } else {
    j["random_template"] = nullptr;
  }
  if (recipe.cw) {
    j["cw"] = {{"variant", WarningVariantName(recipe.cw->message.variant)},
               {"position", WarningPositionName(recipe.cw->position)},
               {"text", recipe.cw->message.text}};
  } else {
    j["cw"] = nullptr;
  }
  return j;
}

json ToJson(const PromptTemplate& t) {
  return {{"sample_prefix", t.sample_prefix},
          {"answer_prefix", t.answer_prefix},
          {"separator", t.separator},
          {"test_tag", t.test_tag ? json(*t.test_tag) : json(nullptr)}};
}

json ToJson(const BackendConfig& b) {
  json j = {{"kind", BackendKindName(b.kind)}};
  if (b.kind == BackendKind::kHttp) {
    j["base_url"] = b.base_url.value_or("");
    j["model"] = b.model_name.value_or("");
    j["top_candidates"] = b.top_candidates;
    j["max_tokens"] = b.max_tokens;
  }
  return j;
}

json ToJson(const IclPrompt& prompt) {
  json demos = json::array();
  for (const LabeledSample& d : prompt.demonstrations) {
    demos.push_back({{"text", d.text}, {"label", d.label.name()}});
  }
  json warnings = json::array();
  for (const PlacedWarning& w : prompt.warnings) {
    warnings.push_back({{"variant", WarningVariantName(w.message.variant)},
                        {"position", WarningPositionName(w.position)},
                        {"text", w.message.text}});
  }
  return {{"task", prompt.task.task_name()},
          {"instruction", prompt.task.instruction()},
          {"template", ToJson(prompt.prompt_template)},
          {"demonstrations", demos},
          {"test_sample", prompt.test_sample},
          {"warnings", warnings}};
}

IclPrompt PromptFromJson(const json& j) {
  try {
    TaskSpec task = DefaultTask(j.at("task").get<std::string>());
    if (j.contains("instruction")) {
      task.set_instruction(j["instruction"].get<std::string>());
    }
    PromptTemplate tpl;
    if (j.contains("template")) {
      const json& t = j["template"];
      if (t.contains("sample_prefix")) {
        tpl.sample_prefix = t["sample_prefix"].get<std::string>();
      }
      if (t.contains("answer_prefix")) {
        tpl.answer_prefix = t["answer_prefix"].get<std::string>();
      }
      if (t.contains("separator")) tpl.separator = t["separator"].get<std::string>();
      if (t.contains("test_tag") && !t["test_tag"].is_null()) {
        tpl.test_tag = t["test_tag"].get<std::string>();
      }
    }
    std::vector<LabeledSample> demos;
    for (const json& d : j.value("demonstrations", json::array())) {
      demos.emplace_back(d.at("text").get<std::string>(),
                         task.LabelFor(d.at("label").get<std::string>()));
    }
    std::vector<PlacedWarning> warnings;
    for (const json& w : j.value("warnings", json::array())) {
      WarningVariant variant = WarningVariant::kMedium;
      const std::string v = w.at("variant").get<std::string>();
      bool known = false;
      for (WarningVariant candidate :
           {WarningVariant::kShort, WarningVariant::kMedium,
            WarningVariant::kLong}) {
        if (WarningVariantName(candidate) == v) {
          variant = candidate;
          known = true;
        }
      }
      if (!known) throw InvalidArgument("unknown warning variant '" + v + "'");
      WarningPosition position = WarningPosition::kDemosTest;
      const std::string p = w.at("position").get<std::string>();
      known = false;
      for (WarningPosition candidate :
           {WarningPosition::kInstructionDemos, WarningPosition::kDemosTest,
            WarningPosition::kBoth}) {
        if (WarningPositionName(candidate) == p) {
          position = candidate;
          known = true;
        }
      }
      if (!known) throw InvalidArgument("unknown warning position '" + p + "'");
      WarningMessage message = WarningMessage::Builtin(variant);
      if (w.contains("text")) message.text = w["text"].get<std::string>();
      warnings.push_back({message, position});
    }
    IclPrompt prompt{std::move(task), std::move(tpl), std::move(demos),
                     j.value("test_sample", std::string()),
                     std::move(warnings)};
    prompt.Validate();
    return prompt;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed prompt JSON: ") + e.what());
  }
}

json ToJson(const ExperimentConfig& c) {
  return {
      {"task", c.task_name},
      {"dataset", c.dataset_path ? json(*c.dataset_path)
                                 : json("toy:" + c.task_name)},
      {"n_shots", c.n_shots},
      {"train_fraction", c.train_fraction},
      {"template", ToJson(c.prompt_template)},
      {"backend", ToJson(c.backend)},
      {"attack", c.attack ? ToJson(*c.attack) : json(nullptr)},
      {"defense", c.defense ? ToJson(*c.defense) : json(nullptr)},
      {"master_seed", c.master_seed},
      {"sample_limit", c.sample_limit ? json(*c.sample_limit) : json(nullptr)},
  };
}

}  // namespace icl_evader
