#ifndef ICL_EVADER_BACKEND_H_
#define ICL_EVADER_BACKEND_H_

// Model backends and constrained label decoding.

#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "icl_evader/prompt.h"

namespace icl_evader {

// Log-probabilities aligned with the label list passed to Score.
struct LabelScores {
  std::vector<double> log_probs;
  bool found_any = false;
};

struct ClassificationResult {
  Label predicted;
  // Normalized confidence of `predicted`, in (0, 1].
  double confidence = 1.0;
  // No label was recoverable from the model; counted as incorrect.
  bool forced_incorrect = false;
  // Aligned with the label list; empty when forced_incorrect.
  std::vector<double> confidences;
};

class Backend {
 public:
  virtual ~Backend() = default;

  // Must be safe to call concurrently.
  virtual LabelScores Score(const std::string& prompt_text,
                            const std::vector<Label>& labels) = 0;
};

// Normalizes exponentiated scores and takes the argmax; ties go to the
// lexicographically smallest name. When nothing was found, returns the last
// label with confidence 1.0 and forced_incorrect set.
ClassificationResult ClassifyScores(const LabelScores& scores,
                                    const std::vector<Label>& labels);

ClassificationResult Classify(Backend& backend, const std::string& prompt_text,
                              const std::vector<Label>& labels);

// ---------------------------------------------------------------------------
// Mock model

struct MockConfig {
  // Sample prefixes that open the scored segment, in addition to the
  // separator and blank-line anchors. Defaults cover the standard template
  // and the four attacker presets.
  std::vector<std::string> recognized_prefixes = {
      "Question: ", "Q: ", "Sample: ", "Query is ", "Query<> "};
  double laplace_alpha = 1.0;
  double epsilon = 1e-12;
};

// Lowercased ASCII-alphanumeric runs; bytes >= 0x80 are token characters.
std::vector<std::string> MockTokenize(std::string_view text);

// Intermediate state of one mock scoring pass, exposed for auditing.
struct MockTrace {
  struct Demo {
    std::string text;
    std::size_t label_index;
  };
  std::string answer_prefix;
  std::vector<Demo> demos;
  // Byte range [segment_begin, segment_end) of the scored segment.
  std::size_t segment_begin = 0;
  std::size_t segment_end = 0;
  // Segment tokens after dropping tokens shared by every demonstration.
  std::vector<std::string> segment_tokens;
  // Mean position-weighted log-likelihood per label.
  std::vector<double> raw_scores;
};

// Deterministic stand-in for an LLM: a keyword model learned from the
// prompt's own demonstrations, scored on the tail of the prompt. See
// README.md for the procedure.
class MockModel : public Backend {
 public:
  explicit MockModel(MockConfig config = {});

  LabelScores Score(const std::string& prompt_text,
                    const std::vector<Label>& labels) override;

  MockTrace Trace(const std::string& prompt_text,
                  const std::vector<Label>& labels) const;

 private:
  MockConfig config_;
};

// ---------------------------------------------------------------------------
// HTTP backend

enum class BackendKind { kMock, kHttp };

std::string_view BackendKindName(BackendKind kind);
BackendKind ParseBackendKind(std::string_view name);

struct BackendConfig {
  BackendKind kind = BackendKind::kMock;
  std::optional<std::string> base_url;
  std::optional<std::string> model_name;
  std::string api_key_env = "ICL_EVADER_API_KEY";
  int top_candidates = 20;
  int max_tokens = 1;
  double request_timeout_seconds = 60.0;
  int max_parallel_requests = 4;

  // Http requires base_url and model_name; max_tokens in [1, 8];
  // top_candidates and max_parallel_requests >= 1.
  void Validate() const;
};

// OpenAI-compatible chat-completions client reading first-token logprobs.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig config);

  LabelScores Score(const std::string& prompt_text,
                    const std::vector<Label>& labels) override;

 private:
  BackendConfig config_;
  std::string origin_;
  std::string path_;
  std::optional<std::string> api_key_;
  std::counting_semaphore<> in_flight_;
};

// Log-probability assigned to labels no alternative matched.
inline constexpr double kUnmatchedLogProb = -30.0;

// Extracts label scores from a chat-completions response body. Throws
// BackendError when the body is malformed or carries no logprobs.
LabelScores ParseChatCompletionScores(std::string_view body,
                                      const std::vector<Label>& labels);

std::unique_ptr<Backend> MakeBackend(const BackendConfig& config);

}  // namespace icl_evader

#endif  // ICL_EVADER_BACKEND_H_
