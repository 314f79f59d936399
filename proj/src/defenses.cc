#include "icl_evader/defenses.h"

#include <cmath>
#include <numeric>

#include "icl_evader/error.h"
#include "icl_evader/random.h"

namespace icl_evader {
namespace {

constexpr std::string_view kAlphanumeric =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";

std::string RandomAlphanumeric(Rng& rng, std::size_t length) {
  std::string out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    out += kAlphanumeric[UniformIndex(rng, kAlphanumeric.size())];
  }
  return out;
}

std::vector<LabeledSample> Draw(const std::vector<LabeledSample>& pool,
                                std::size_t k, Rng& rng,
                                std::string_view what) {
  if (k > pool.size()) {
    throw PoolExhausted("AdvDemo needs " + std::to_string(k) + " " +
                        std::string(what) + " demonstrations but the pool has " +
                        std::to_string(pool.size()));
  }
  std::vector<LabeledSample> out;
  out.reserve(k);
  for (std::size_t i : SampleWithoutReplacement(rng, pool.size(), k)) {
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace

std::string_view AdvDemoPlacementName(AdvDemoPlacement placement) {
  switch (placement) {
    case AdvDemoPlacement::kRandom:
      return "random";
    case AdvDemoPlacement::kBegin:
      return "begin";
    case AdvDemoPlacement::kMiddle:
      return "middle";
    case AdvDemoPlacement::kEnd:
      return "end";
  }
  return "unknown";
}

AdvDemoPlacement ParseAdvDemoPlacement(std::string_view name) {
  if (name == "random") return AdvDemoPlacement::kRandom;
  if (name == "begin") return AdvDemoPlacement::kBegin;
  if (name == "middle") return AdvDemoPlacement::kMiddle;
  if (name == "end") return AdvDemoPlacement::kEnd;
  throw InvalidArgument("placement must be random, begin, middle or end, got '" +
                        std::string(name) + "'");
}

void AdvDemoConfig::Validate() const {
  double sum = 0.0;
  for (double r : ratio_per_attack) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw InvalidArgument("AdvDemo ratio must lie in [0, 1]");
    }
    sum += r;
  }
  if (sum > 1.0 + 1e-9) {
    throw InvalidArgument("AdvDemo ratios sum to more than 1");
  }
}

std::array<std::size_t, 3> AdvDemoCounts(const AdvDemoConfig& config,
                                         std::size_t n_total) {
  config.Validate();
  std::array<std::size_t, 3> counts{};
  std::size_t sum = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    // The epsilon keeps exact products such as 0.1 * 30 from flooring to 2.
    counts[k] = static_cast<std::size_t>(
        std::floor(config.ratio_per_attack[k] * static_cast<double>(n_total) +
                   1e-9));
    sum += counts[k];
  }
  if (sum > n_total) {
    throw InvalidArgument("AdvDemo adversarial counts exceed N");
  }
  return counts;
}

std::vector<LabeledSample> AdvDemoAugment(
    const std::vector<LabeledSample>& clean, const AdvPools& adv_pools,
    std::size_t n_total, const AdvDemoConfig& config) {
  const std::array<std::size_t, 3> counts = AdvDemoCounts(config, n_total);
  const std::size_t n_adv = std::accumulate(counts.begin(), counts.end(),
                                            std::size_t{0});
  const std::size_t n_clean = n_total - n_adv;

  Rng rng(config.seed);
  std::vector<LabeledSample> adversarial;
  for (AttackKind kind : kAttackKinds) {
    const auto k = static_cast<std::size_t>(kind);
    for (LabeledSample& s :
         Draw(adv_pools[k], counts[k], rng, AttackKindName(kind))) {
      adversarial.push_back(std::move(s));
    }
  }
  std::vector<LabeledSample> clean_demos = Draw(clean, n_clean, rng, "clean");

  std::vector<LabeledSample> out;
  out.reserve(n_total);
  switch (config.placement) {
    case AdvDemoPlacement::kRandom:
      out = std::move(adversarial);
      out.insert(out.end(), clean_demos.begin(), clean_demos.end());
      Shuffle(out, rng);
      break;
    case AdvDemoPlacement::kBegin:
      out = std::move(adversarial);
      out.insert(out.end(), clean_demos.begin(), clean_demos.end());
      break;
    case AdvDemoPlacement::kEnd:
      out = std::move(clean_demos);
      out.insert(out.end(), adversarial.begin(), adversarial.end());
      break;
    case AdvDemoPlacement::kMiddle: {
      const auto split = static_cast<std::ptrdiff_t>(n_clean / 2);
      out.assign(clean_demos.begin(), clean_demos.begin() + split);
      out.insert(out.end(), adversarial.begin(), adversarial.end());
      out.insert(out.end(), clean_demos.begin() + split, clean_demos.end());
      break;
    }
  }
  return out;
}

IclPrompt CautionaryWarningInsert(IclPrompt prompt,
                                  const WarningMessage& message,
                                  WarningPosition position) {
  prompt.warnings.push_back({message, position});
  return prompt;
}

void RandomTemplateConfig::Validate() const {
  if (length == 0) throw InvalidArgument("random template length must be >= 1");
}

IclPrompt RandomTemplateApply(IclPrompt prompt,
                              const RandomTemplateConfig& config) {
  config.Validate();
  Rng rng(config.seed);
  const std::string sample = RandomAlphanumeric(rng, config.length);
  std::string answer = RandomAlphanumeric(rng, config.length);
  while (answer == sample) answer = RandomAlphanumeric(rng, config.length);

  std::string note = "\n";
  if (config.use_tag) {
    const std::string tag = RandomAlphanumeric(rng, config.length);
    prompt.prompt_template.test_tag = tag;
    note += "The test sample is enclosed between <" + tag + "> and </" + tag +
            ">.\n";
  } else {
    prompt.prompt_template.test_tag.reset();
  }
  note += "Please note that the example prefix is " + sample +
          " and the label prefix is " + answer + ".";

  prompt.prompt_template.sample_prefix = sample + ": ";
  prompt.prompt_template.answer_prefix = answer + ": ";
  prompt.task.set_instruction(prompt.task.instruction() + note);
  return prompt;
}

IclPrompt Harden(IclPrompt prompt, const DefenseRecipe& recipe,
                 const std::vector<LabeledSample>& clean_pool,
                 const AdvPools& adv_pools, std::uint64_t seed) {
  if (recipe.empty()) {
    throw InvalidArgument("defense recipe has no components");
  }
  if (recipe.adv_demo) {
    AdvDemoConfig cfg = *recipe.adv_demo;
    cfg.seed = DeriveSeed(seed, "adv_demo");
    prompt.demonstrations = AdvDemoAugment(
        clean_pool, adv_pools, prompt.demonstrations.size(), cfg);
  }
  if (recipe.random_template) {
    RandomTemplateConfig cfg = *recipe.random_template;
    cfg.seed = DeriveSeed(seed, "random_template");
    prompt = RandomTemplateApply(std::move(prompt), cfg);
  }
  if (recipe.cw) {
    const PlacedWarning placed{recipe.cw->message, recipe.cw->position};
    bool present = false;
    for (const PlacedWarning& w : prompt.warnings) present |= w == placed;
    if (!present) {
      prompt = CautionaryWarningInsert(std::move(prompt), placed.message,
                                       placed.position);
    }
  }
  prompt.Validate();
  return prompt;
}

}  // namespace icl_evader
