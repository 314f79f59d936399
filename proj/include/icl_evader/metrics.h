#ifndef ICL_EVADER_METRICS_H_
#define ICL_EVADER_METRICS_H_

// Classifier quality and attack/defense effectiveness metrics. Percentages
// are in points (0-100); fractions in [0, 1]. Undefined ratios are nullopt.

#include <cstddef>
#include <optional>
#include <vector>

#include "icl_evader/prompt.h"

namespace icl_evader {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) =
      default;
};

// Throws InvalidArgument on length mismatch or empty input.
ConfusionCounts CountConfusion(const std::vector<Label>& predictions,
                               const std::vector<Label>& labels,
                               const Label& positive);

struct ClassificationReport {
  ConfusionCounts counts;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> fpr;
};

ClassificationReport MakeClassificationReport(const ConfusionCounts& counts);

ClassificationReport ClassificationReportFor(
    const std::vector<Label>& predictions, const std::vector<Label>& labels,
    const Label& positive);

struct AttackReport {
  double recall_clean = 0.0;
  double recall_adv = 0.0;
  // 100 * (recall_clean - recall_adv). Negative when the attack helps.
  double asr = 0.0;
  // asr / (100 * recall_clean); nullopt when recall_clean == 0.
  std::optional<double> rasr;
};

// Throws InvalidArgument unless both recalls lie in [0, 1].
AttackReport MakeAttackReport(double recall_clean, double recall_adv);

inline constexpr double kDefaultLambda = 1.0;
inline constexpr double kDefaultAdThreshold = 5.0;

struct DefenseReport {
  double asr_baseline = 0.0;
  double asr_defended = 0.0;
  double asrr_abs = 0.0;
  // asrr_abs / asr_baseline; nullopt when asr_baseline == 0.
  std::optional<double> asrr_rel;
  double accuracy_clean_baseline = 0.0;
  double accuracy_clean_defended = 0.0;
  double ad = 0.0;
  double de = 0.0;
  double lambda = kDefaultLambda;
  double ad_threshold = kDefaultAdThreshold;
  bool admissible = false;
};

// ASR arguments in points, accuracies as fractions.
DefenseReport MakeDefenseReport(double asr_baseline, double asr_defended,
                                double accuracy_clean_baseline,
                                double accuracy_clean_defended,
                                double lambda = kDefaultLambda,
                                double ad_threshold = kDefaultAdThreshold);

}  // namespace icl_evader

#endif  // ICL_EVADER_METRICS_H_
