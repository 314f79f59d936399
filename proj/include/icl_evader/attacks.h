#ifndef ICL_EVADER_ATTACKS_H_
#define ICL_EVADER_ATTACKS_H_

// Zero-query evasion attacks. Each attack is a pure function from a test
// sample (plus an attacker-side benign pool and a seeded config) to the
// adversarial text; the original sample always survives as one contiguous
// substring.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "icl_evader/prompt.h"

namespace icl_evader {

enum class AttackKind { kFakeClaim, kTemplate, kNeedle };

inline constexpr std::array<AttackKind, 3> kAttackKinds = {
    AttackKind::kFakeClaim, AttackKind::kTemplate, AttackKind::kNeedle};

std::string_view AttackKindName(AttackKind kind);
AttackKind ParseAttackKind(std::string_view name);

// ---------------------------------------------------------------------------
// Fake Claim

enum class ClaimPosition { kBegin, kEnd };

struct FakeClaimConfig {
  std::vector<std::string> claims;
  std::size_t n_claims = 1;
  ClaimPosition position = ClaimPosition::kEnd;
  std::uint64_t seed = 0;

  void Validate() const;
};

// The five graded claims for a task, weakest to strongest assertion.
std::array<std::string, 5> FakeClaimCandidates(std::string_view task_name);
inline constexpr std::size_t kDefaultClaimIndex = 2;

// Claim set for a grid option: "0".."4" selects one candidate, "mix" all five.
std::vector<std::string> ClaimOption(std::string_view task_name,
                                     std::string_view option);

// Draws n_claims claims with replacement (one UniformIndex per claim, in
// order) and joins each to the sample with a single space. At kBegin every
// claim is prepended in turn, so the last drawn claim ends up first.
std::string FakeClaimAttack(std::string_view sample,
                            const FakeClaimConfig& config);

// ---------------------------------------------------------------------------
// Template

struct PrefixPair {
  std::string_view sample;
  std::string_view answer;
};

inline constexpr std::array<PrefixPair, 4> kAttackerPrefixPresets = {{
    {"Q: ", "A: "},
    {"Sample: ", "Classification: "},
    {"Query is ", "Answer is "},
    {"Query<> ", "Answer<> "},
}};

struct TemplateAttackConfig {
  std::string sample_prefix = "Q: ";
  std::string answer_prefix = "A: ";
  std::string label_pos = "bad";
  std::string label_neg = "good";
  std::size_t n_demos = 1;
  // 1-based index of the masqueraded test sample among the n_demos blocks.
  std::size_t test_position = 1;
  std::string demo_separator = "\n";
  std::uint64_t seed = 0;

  void Validate() const;
};

// Negative-class texts available to the attacker. Never empty.
class BenignPool {
 public:
  explicit BenignPool(std::vector<std::string> samples);

  const std::vector<std::string>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

 private:
  std::vector<std::string> samples_;
};

// Builds n_demos pseudo-demonstrations with the test sample at test_position
// labeled label_pos and pool samples labeled label_neg, then one trailing
// unanswered pool sample. Pool samples for the labeled blocks are drawn
// without replacement when the pool is large enough, otherwise with
// replacement; the trailing sample is an independent draw.
std::string TemplateAttack(std::string_view sample, const BenignPool& pool,
                           const TemplateAttackConfig& config);

// ---------------------------------------------------------------------------
// Needle-in-a-Haystack

// Markup that hides benign samples when rendered.
enum class HideFormat {
  kDisplayNone = 0,
  kVisibilityHidden = 1,
  kColorTransparent = 2,
  kHiddenAttribute = 3,
  kAriaHidden = 4,
  kNoscript = 5,
  kNull = 6,
};

// Markup that emphasises the original sample when rendered.
enum class HighlightFormat {
  kMark = 0,
  kStrong = 1,
  kEm = 2,
  kUnderline = 3,
  kBold = 4,
  kItalic = 5,
  kRedSpan = 6,
  kNull = 7,
};

enum class InsertLocation { kBegin, kMiddle, kEnd };

struct FormatWrapper {
  std::string_view open;
  std::string_view close;

  friend bool operator==(const FormatWrapper&, const FormatWrapper&) = default;
};

const std::array<FormatWrapper, 7>& HideFormatCatalog();
const std::array<FormatWrapper, 8>& HighlightFormatCatalog();

struct NeedleConfig {
  std::size_t n_benign = 16;
  HideFormat hide_format = HideFormat::kNull;
  HighlightFormat highlight_format = HighlightFormat::kNull;
  InsertLocation insert_location = InsertLocation::kMiddle;
  std::string joiner = "\n";
  std::uint64_t seed = 0;

  void Validate() const;
};

// 0-based block index of the needle among n_benign + 1 blocks:
// begin -> 0, middle -> floor(n_benign / 2), end -> n_benign.
std::size_t NeedleInsertIndex(InsertLocation location, std::size_t n_benign);

// Draws n_benign distinct pool samples, wraps them with the hide format,
// wraps the sample with the highlight format, and joins all n_benign + 1
// blocks with the joiner. Throws PoolExhausted when the pool is too small.
std::string NeedleAttack(std::string_view sample, const BenignPool& pool,
                         const NeedleConfig& config);

// ---------------------------------------------------------------------------

using AttackConfig =
    std::variant<FakeClaimConfig, TemplateAttackConfig, NeedleConfig>;

AttackKind KindOf(const AttackConfig& config);
std::uint64_t SeedOf(const AttackConfig& config);
void SetSeed(AttackConfig& config, std::uint64_t seed);

// Dispatches to the attack held by `config`. `pool` is required for the
// template and needle attacks.
std::string ApplyAttack(std::string_view sample, const AttackConfig& config,
                        const BenignPool* pool);

// Best-performing configuration per task and attack from the reference grid
// searches (fake claim: default claim at the end; template: one demo; needle:
// 16 benign samples in the middle).
AttackConfig BestAttackConfig(std::string_view task_name, AttackKind kind);

std::string_view ClaimPositionName(ClaimPosition position);
ClaimPosition ParseClaimPosition(std::string_view name);
std::string_view InsertLocationName(InsertLocation location);
InsertLocation ParseInsertLocation(std::string_view name);

}  // namespace icl_evader

#endif  // ICL_EVADER_ATTACKS_H_
