#ifndef ICL_EVADER_PROMPT_H_
#define ICL_EVADER_PROMPT_H_

// ICL prompt data model and its textual rendering. The byte layout is pinned
// in RENDERING.md.

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace icl_evader {

// A class name. Non-empty and single-line.
class Label {
 public:
  explicit Label(std::string name);

  const std::string& name() const { return name_; }

  friend bool operator==(const Label&, const Label&) = default;
  friend auto operator<=>(const Label&, const Label&) = default;

 private:
  std::string name_;
};

struct LabeledSample {
  LabeledSample(std::string text, Label label);

  std::string text;
  Label label;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

// A binary classification task. `positive_label` is the class an attacker
// wants to evade.
class TaskSpec {
 public:
  TaskSpec(std::string task_name, std::string instruction,
           std::array<Label, 2> label_set, Label positive_label);

  const std::string& task_name() const { return task_name_; }
  const std::string& instruction() const { return instruction_; }
  const std::array<Label, 2>& label_set() const { return label_set_; }
  const Label& positive_label() const { return positive_label_; }
  // The label in label_set that is not positive_label.
  const Label& negative_label() const;
  bool HasLabel(std::string_view name) const;
  // Throws InvalidArgument naming the allowed set when `name` is unknown.
  Label LabelFor(std::string_view name) const;

  void set_instruction(std::string instruction) {
    instruction_ = std::move(instruction);
  }

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;

 private:
  std::string task_name_;
  std::string instruction_;
  std::array<Label, 2> label_set_;
  Label positive_label_;
};

// Task names accepted by DefaultTask.
inline constexpr std::array<std::string_view, 3> kTaskNames = {
    "sentiment", "toxicity", "illicit_promotion"};

// The built-in instruction and label conventions for one of kTaskNames.
TaskSpec DefaultTask(std::string_view task_name);

struct PromptTemplate {
  std::string sample_prefix = "Question: ";
  std::string answer_prefix = "Answer: ";
  std::string separator = "==";
  // When set, the test sample is rendered as <T>text</T> without a sample
  // prefix.
  std::optional<std::string> test_tag;

  // Throws InvalidArgument on equal prefixes or an empty separator.
  void Validate() const;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) =
      default;
};

enum class WarningVariant { kShort, kMedium, kLong };

struct WarningMessage {
  WarningVariant variant = WarningVariant::kMedium;
  std::string text;

  static WarningMessage Builtin(WarningVariant variant);

  friend bool operator==(const WarningMessage&, const WarningMessage&) =
      default;
};

// Seams where a warning paragraph can be placed.
enum class WarningPosition {
  kInstructionDemos,  // I-D
  kDemosTest,         // D-T
  kBoth,
};

struct PlacedWarning {
  WarningMessage message;
  WarningPosition position = WarningPosition::kDemosTest;

  friend bool operator==(const PlacedWarning&, const PlacedWarning&) = default;
};

struct IclPrompt {
  TaskSpec task;
  PromptTemplate prompt_template;
  std::vector<LabeledSample> demonstrations;
  std::string test_sample;
  std::vector<PlacedWarning> warnings;

  // Throws InvalidArgument when a demonstration label is outside the task's
  // label set or the template is invalid.
  void Validate() const;

  friend bool operator==(const IclPrompt&, const IclPrompt&) = default;
};

// Renders `prompt` per RENDERING.md. Validates first.
std::string RenderPrompt(const IclPrompt& prompt);

std::string_view WarningVariantName(WarningVariant variant);
std::string_view WarningPositionName(WarningPosition position);

}  // namespace icl_evader

#endif  // ICL_EVADER_PROMPT_H_
