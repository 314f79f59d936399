#include "icl_evader/backend.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>

#include "icl_evader/error.h"

namespace icl_evader {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

struct Line {
  std::size_t begin;  // offset of the first byte
  std::size_t end;    // offset one past the last byte, excluding '\n'
};

std::vector<Line> SplitLines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      lines.push_back({start, i});
      start = i + 1;
    }
  }
  return lines;
}

}  // namespace

ClassificationResult ClassifyScores(const LabelScores& scores,
                                    const std::vector<Label>& labels) {
  if (labels.empty()) throw InvalidArgument("classify: empty label list");
  if (scores.found_any && scores.log_probs.size() != labels.size()) {
    throw BackendError("classify: score count does not match label count");
  }
  double max_lp = -std::numeric_limits<double>::infinity();
  if (scores.found_any) {
    for (double lp : scores.log_probs) {
      if (std::isnan(lp)) throw BackendError("classify: NaN log-probability");
      max_lp = std::max(max_lp, lp);
    }
  }
  if (!scores.found_any || !std::isfinite(max_lp)) {
    return {labels.back(), 1.0, true, {}};
  }

  // Shifting by the maximum keeps exp() in range without changing ratios.
  std::vector<double> conf(labels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    conf[i] = std::exp(scores.log_probs[i] - max_lp);
    total += conf[i];
  }
  for (double& c : conf) c /= total;

  std::size_t best = 0;
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (conf[i] > conf[best] ||
        (conf[i] == conf[best] && labels[i].name() < labels[best].name())) {
      best = i;
    }
  }
  return {labels[best], conf[best], false, std::move(conf)};
}

ClassificationResult Classify(Backend& backend, const std::string& prompt_text,
                              const std::vector<Label>& labels) {
  return ClassifyScores(backend.Score(prompt_text, labels), labels);
}

// ---------------------------------------------------------------------------

std::vector<std::string> MockTokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      current += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

MockModel::MockModel(MockConfig config) : config_(std::move(config)) {
  if (config_.laplace_alpha <= 0.0) {
    throw InvalidArgument("mock: laplace_alpha must be positive");
  }
  for (const std::string& p : config_.recognized_prefixes) {
    if (p.empty()) throw InvalidArgument("mock: empty recognized prefix");
  }
}

MockTrace MockModel::Trace(const std::string& prompt_text,
                           const std::vector<Label>& labels) const {
  if (labels.empty()) throw InvalidArgument("mock: empty label list");
  const std::string_view text = prompt_text;
  const std::vector<Line> lines = SplitLines(text);
  const Line& final_line = lines.back();
  auto line_text = [&](const Line& l) {
    return text.substr(l.begin, l.end - l.begin);
  };

  MockTrace trace;
  trace.answer_prefix = std::string(Trim(line_text(final_line)));

  // Demonstrations: an answer line is the answer prefix followed by a label;
  // its sample runs back to the nearest blank, answer or post-answer line.
  std::optional<std::size_t> last_answer_line;
  std::size_t block_start = 0;
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    const std::string_view line = line_text(lines[i]);
    if (Trim(line).empty()) {
      block_start = i + 1;
      continue;
    }
    if (i > 0 && last_answer_line && *last_answer_line == i - 1) {
      // The separator line that follows every demonstration.
      block_start = i + 1;
      continue;
    }
    if (trace.answer_prefix.empty() ||
        line.substr(0, trace.answer_prefix.size()) != trace.answer_prefix) {
      continue;
    }
    const std::string_view rest =
        Trim(line.substr(trace.answer_prefix.size()));
    std::optional<std::size_t> label_index;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (labels[k].name() == rest) label_index = k;
    }
    if (!label_index) continue;
    last_answer_line = i;
    if (block_start < i) {
      const std::size_t b = lines[block_start].begin;
      const std::size_t e = lines[i - 1].end;
      trace.demos.push_back(
          {std::string(text.substr(b, e - b)), *label_index});
    }
    block_start = i + 1;
  }

  // Segment anchor: the latest of the separator line after the last demo,
  // the last blank line and the last recognized prefix.
  const std::size_t limit = final_line.begin == 0 ? 0 : final_line.begin - 1;
  std::size_t anchor = 0;
  if (last_answer_line && *last_answer_line + 1 < lines.size() - 1) {
    const Line& sep = lines[*last_answer_line + 1];
    anchor = std::max(anchor, std::min(sep.end + 1, limit));
  }
  const std::string_view head = text.substr(0, limit);
  if (const std::size_t pos = head.rfind("\n\n"); pos != std::string::npos) {
    anchor = std::max(anchor, pos + 2);
  }
  for (const std::string& prefix : config_.recognized_prefixes) {
    const std::size_t pos = head.rfind(prefix);
    if (pos != std::string::npos) {
      anchor = std::max(anchor, pos + prefix.size());
    }
  }
  trace.segment_begin = std::min(anchor, limit);
  trace.segment_end = limit;

  // Bernoulli document frequencies per label.
  std::vector<std::size_t> n_label(labels.size(), 0);
  std::map<std::string, std::vector<std::size_t>> df;
  std::map<std::string, std::size_t> demo_count;
  for (const MockTrace::Demo& demo : trace.demos) {
    ++n_label[demo.label_index];
    const std::vector<std::string> toks = MockTokenize(demo.text);
    const std::set<std::string> unique(toks.begin(), toks.end());
    for (const std::string& t : unique) {
      auto& counts = df[t];
      counts.resize(labels.size(), 0);
      ++counts[demo.label_index];
      ++demo_count[t];
    }
  }
  // Tokens in every demonstration belong to the template, not the content.
  std::set<std::string> template_tokens;
  if (trace.demos.size() >= 2) {
    for (const auto& [t, c] : demo_count) {
      if (c == trace.demos.size()) template_tokens.insert(t);
    }
  }

  for (std::string& t : MockTokenize(text.substr(
           trace.segment_begin, trace.segment_end - trace.segment_begin))) {
    if (!template_tokens.count(t)) trace.segment_tokens.push_back(std::move(t));
  }

  const double alpha = config_.laplace_alpha;
  trace.raw_scores.assign(labels.size(), 0.0);
  const std::size_t n = trace.segment_tokens.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = df.find(trace.segment_tokens[i]);
    if (it == df.end()) continue;
    const double factor =
        n == 1 ? 1.0
               : 0.5 + static_cast<double>(i) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const double w =
          std::log((static_cast<double>(it->second[k]) + alpha) /
                   (static_cast<double>(n_label[k]) + 2.0 * alpha));
      trace.raw_scores[k] += factor * w;
    }
  }
  if (n > 0) {
    for (double& s : trace.raw_scores) s /= static_cast<double>(n);
  }
  return trace;
}

LabelScores MockModel::Score(const std::string& prompt_text,
                             const std::vector<Label>& labels) {
  const MockTrace trace = Trace(prompt_text, labels);
  const double max_s =
      *std::max_element(trace.raw_scores.begin(), trace.raw_scores.end());
  double total = 0.0;
  std::vector<double> p(labels.size());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    p[k] = std::exp(trace.raw_scores[k] - max_s);
    total += p[k];
  }
  LabelScores out;
  out.found_any = true;
  out.log_probs.reserve(labels.size());
  for (double v : p) out.log_probs.push_back(std::log(v / total + config_.epsilon));
  return out;
}

}  // namespace icl_evader
