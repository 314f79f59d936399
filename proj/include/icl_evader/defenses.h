#ifndef ICL_EVADER_DEFENSES_H_
#define ICL_EVADER_DEFENSES_H_

// Prompt-level defenses and the joint-recipe hardener.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icl_evader/attacks.h"
#include "icl_evader/prompt.h"

namespace icl_evader {

// ---------------------------------------------------------------------------
// AdvDemo

enum class AdvDemoPlacement { kRandom, kBegin, kMiddle, kEnd };

std::string_view AdvDemoPlacementName(AdvDemoPlacement placement);
AdvDemoPlacement ParseAdvDemoPlacement(std::string_view name);

struct AdvDemoConfig {
  // Indexed by AttackKind: fake claim, template, needle.
  std::array<double, 3> ratio_per_attack = {0.0, 0.0, 0.0};
  AdvDemoPlacement placement = AdvDemoPlacement::kRandom;
  std::uint64_t seed = 0;

  // Each ratio in [0, 1] and their sum <= 1.
  void Validate() const;

  friend bool operator==(const AdvDemoConfig&, const AdvDemoConfig&) = default;
};

// Adversarial demonstrations available per attack kind, indexed by AttackKind.
using AdvPools = std::array<std::vector<LabeledSample>, 3>;

// floor(r_k * N) per kind. Throws InvalidArgument when the counts exceed N.
std::array<std::size_t, 3> AdvDemoCounts(const AdvDemoConfig& config,
                                         std::size_t n_total);

// Returns exactly n_total demonstrations. All draws are without replacement
// and happen before arrangement: each kind in AttackKind order, then the clean
// demos. Begin/End put the adversarial block first/last; Middle inserts it
// after floor(N_clean / 2) clean demos; Random shuffles the whole list.
std::vector<LabeledSample> AdvDemoAugment(
    const std::vector<LabeledSample>& clean, const AdvPools& adv_pools,
    std::size_t n_total, const AdvDemoConfig& config);

// ---------------------------------------------------------------------------
// Cautionary Warning

struct CautionaryWarningConfig {
  WarningMessage message = WarningMessage::Builtin(WarningVariant::kMedium);
  WarningPosition position = WarningPosition::kDemosTest;

  friend bool operator==(const CautionaryWarningConfig&,
                         const CautionaryWarningConfig&) = default;
};

IclPrompt CautionaryWarningInsert(IclPrompt prompt,
                                  const WarningMessage& message,
                                  WarningPosition position);

// ---------------------------------------------------------------------------
// Random Template

struct RandomTemplateConfig {
  std::size_t length = 10;
  bool use_tag = false;
  std::uint64_t seed = 0;

  void Validate() const;

  friend bool operator==(const RandomTemplateConfig&,
                         const RandomTemplateConfig&) = default;
};

// Draws the sample prefix S, the label prefix A and, with use_tag, the tag T
// (in that order), each `length` characters from [A-Za-z0-9]. A is redrawn
// while it equals S. Prefixes become "S: " and "A: " and the instruction
// gains a line announcing them.
IclPrompt RandomTemplateApply(IclPrompt prompt,
                              const RandomTemplateConfig& config);

// ---------------------------------------------------------------------------
// Recipes

struct DefenseRecipe {
  std::optional<AdvDemoConfig> adv_demo;
  std::optional<RandomTemplateConfig> random_template;
  std::optional<CautionaryWarningConfig> cw;

  bool empty() const { return !adv_demo && !random_template && !cw; }

  friend bool operator==(const DefenseRecipe&, const DefenseRecipe&) = default;
};

// Grammar in RECIPES.md. Throws ParseError carrying the byte offset of the
// offending token.
DefenseRecipe ParseRecipe(std::string_view code);

// Canonical code: a single p value when all ratios agree, otherwise three.
// Throws InvalidArgument for non-builtin warnings, non-integral percentages,
// or an empty recipe.
std::string FormatRecipe(const DefenseRecipe& recipe);

// Applies AdvDemo, then Random Template, then Cautionary Warning. AdvDemo
// keeps the prompt's shot count and draws clean demos from `clean_pool`.
// Component seeds are derived from `seed`. A warning already present at the
// same seam is not inserted again. Throws InvalidArgument on an empty recipe.
IclPrompt Harden(IclPrompt prompt, const DefenseRecipe& recipe,
                 const std::vector<LabeledSample>& clean_pool,
                 const AdvPools& adv_pools, std::uint64_t seed);

}  // namespace icl_evader

#endif  // ICL_EVADER_DEFENSES_H_
