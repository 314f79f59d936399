#include "icl_evader/metrics.h"

#include "icl_evader/error.h"

namespace icl_evader {
namespace {

std::optional<double> Ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

ConfusionCounts CountConfusion(const std::vector<Label>& predictions,
                               const std::vector<Label>& labels,
                               const Label& positive) {
  if (predictions.size() != labels.size()) {
    throw InvalidArgument("prediction and label sequences differ in length");
  }
  if (predictions.empty()) throw InvalidArgument("no samples to evaluate");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted_pos = predictions[i] == positive;
    const bool actual_pos = labels[i] == positive;
    if (predicted_pos && actual_pos) ++c.tp;
    if (predicted_pos && !actual_pos) ++c.fp;
    if (!predicted_pos && !actual_pos) ++c.tn;
    if (!predicted_pos && actual_pos) ++c.fn;
  }
  return c;
}

ClassificationReport MakeClassificationReport(const ConfusionCounts& counts) {
  if (counts.total() == 0) throw InvalidArgument("no samples to evaluate");
  const auto tp = static_cast<double>(counts.tp);
  const auto fp = static_cast<double>(counts.fp);
  const auto tn = static_cast<double>(counts.tn);
  const auto fn = static_cast<double>(counts.fn);

  ClassificationReport r;
  r.counts = counts;
  r.accuracy = (tp + tn) / static_cast<double>(counts.total());
  r.precision = Ratio(tp, tp + fp);
  r.recall = Ratio(tp, tp + fn);
  r.fpr = Ratio(fp, fp + tn);
  if (r.precision && r.recall) {
    r.f1 = Ratio(2.0 * *r.precision * *r.recall, *r.precision + *r.recall);
  }
  return r;
}

ClassificationReport ClassificationReportFor(
    const std::vector<Label>& predictions, const std::vector<Label>& labels,
    const Label& positive) {
  return MakeClassificationReport(
      CountConfusion(predictions, labels, positive));
}

AttackReport MakeAttackReport(double recall_clean, double recall_adv) {
  if (!(recall_clean >= 0.0 && recall_clean <= 1.0) ||
      !(recall_adv >= 0.0 && recall_adv <= 1.0)) {
    throw InvalidArgument("recall must lie in [0, 1]");
  }
  AttackReport r;
  r.recall_clean = recall_clean;
  r.recall_adv = recall_adv;
  r.asr = 100.0 * (recall_clean - recall_adv);
  if (recall_clean > 0.0) r.rasr = (recall_clean - recall_adv) / recall_clean;
  return r;
}

DefenseReport MakeDefenseReport(double asr_baseline, double asr_defended,
                                double accuracy_clean_baseline,
                                double accuracy_clean_defended, double lambda,
                                double ad_threshold) {
  DefenseReport r;
  r.asr_baseline = asr_baseline;
  r.asr_defended = asr_defended;
  r.asrr_abs = asr_baseline - asr_defended;
  r.asrr_rel = Ratio(r.asrr_abs, asr_baseline);
  r.accuracy_clean_baseline = accuracy_clean_baseline;
  r.accuracy_clean_defended = accuracy_clean_defended;
  r.ad = 100.0 * (accuracy_clean_baseline - accuracy_clean_defended);
  r.de = r.asrr_abs - lambda * r.ad;
  r.lambda = lambda;
  r.ad_threshold = ad_threshold;
  // Tolerates rounding in the accuracy difference.
  r.admissible = r.ad <= ad_threshold + 1e-9;
  return r;
}

}  // namespace icl_evader
