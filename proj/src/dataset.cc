#include "icl_evader/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "icl_evader/error.h"
#include "icl_evader/random.h"

namespace icl_evader {
namespace {

using nlohmann::json;

}  // namespace

std::map<std::string, std::size_t> Dataset::ClassCounts() const {
  std::map<std::string, std::size_t> counts;
  for (const DatasetSample& s : samples) ++counts[s.sample.label.name()];
  return counts;
}

Dataset ParseDataset(std::istream& in, const TaskSpec& task) {
  Dataset out;
  out.task_name = task.task_name();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("dataset line is not valid JSON: ") +
                           e.what(),
                       line_no);
    }
    if (!obj.is_object() || !obj.contains("text") || !obj.contains("label") ||
        !obj["text"].is_string() || !obj["label"].is_string()) {
      throw ParseError(
          "dataset line must be an object with string fields text and label",
          line_no);
    }
    const std::string label = obj["label"].get<std::string>();
    if (!task.HasLabel(label)) {
      throw ParseError("unknown label '" + label + "' for task " +
                           task.task_name() + "; allowed: {" +
                           task.label_set()[0].name() + ", " +
                           task.label_set()[1].name() + "}",
                       line_no);
    }
    std::string text = obj["text"].get<std::string>();
    if (text.empty()) throw ParseError("empty sample text", line_no);
    out.samples.push_back(
        {line_no, LabeledSample(std::move(text), task.LabelFor(label))});
  }
  if (out.samples.empty()) throw InvalidArgument("dataset has no samples");
  return out;
}

Dataset LoadDataset(const std::string& path, const TaskSpec& task) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset file " + path);
  return ParseDataset(in, task);
}

std::pair<Dataset, Dataset> SplitDataset(const Dataset& dataset,
                                         double train_fraction,
                                         std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie in (0, 1)");
  }
  // Classes are processed in name order so the draw sequence is fixed.
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    by_class[dataset.samples[i].sample.label.name()].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (auto& [name, idx] : by_class) {
    const std::size_t n = idx.size();
    if (n < 2) {
      throw InvalidArgument("class '" + name +
                            "' needs at least two samples to split");
    }
    Shuffle(idx, rng);
    auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + n_train);
    test_idx.insert(test_idx.end(), idx.begin() + n_train, idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  Dataset train{dataset.task_name, Split::kTrain, {}};
  Dataset test{dataset.task_name, Split::kTest, {}};
  std::set<std::string> train_texts;
  for (std::size_t i : train_idx) {
    train.samples.push_back(dataset.samples[i]);
    train_texts.insert(dataset.samples[i].sample.text);
  }
  for (std::size_t i : test_idx) {
    if (!train_texts.count(dataset.samples[i].sample.text)) {
      test.samples.push_back(dataset.samples[i]);
    }
  }
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Toy datasets
//
// Every sample is one template filled from word lists. Negative-class
// templates sometimes use "this is a ... text" phrasing, so claim tokens lean
// toward the negative class; positive-class templates never contain "this",
// "is" or "text".

namespace {

struct ToyVocabulary {
  std::vector<std::string> positive_templates;
  std::vector<std::string> negative_templates;
  std::map<std::string, std::vector<std::string>> slots;
};

const std::vector<std::string> kBenignNouns = {
    "text", "comment", "message", "post", "note", "article", "summary",
    "review"};
const std::vector<std::string> kBenignAdjectives = {
    "helpful", "thoughtful", "friendly", "clear",  "useful",
    "kind",    "interesting", "polite",  "detailed", "calm"};
const std::vector<std::string> kTopics = {
    "gardening", "cooking", "history", "football", "music",
    "travel",    "science", "weather", "painting", "chess"};

ToyVocabulary VocabularyFor(std::string_view task_name) {
  ToyVocabulary v;
  const std::vector<std::string> benign_templates = {
      "this is a {badj} {bnoun} about {topic}",
      "thanks for the {badj} {bnoun} on {topic}",
      "i enjoyed reading about {topic} and {topic2} today",
      "the {topic} {bnoun} was {badj} and clear",
  };
  v.slots["badj"] = kBenignAdjectives;
  v.slots["bnoun"] = kBenignNouns;
  v.slots["topic"] = kTopics;
  v.slots["topic2"] = kTopics;

  if (task_name == "toxicity") {
    v.positive_templates = {
        "you are a {tadj} {tnoun}",
        "shut up you {tadj} {tnoun}",
        "nobody wants your {tadj} opinion you {tnoun}",
        "go away {tnoun} and stop being so {tadj}",
    };
    v.slots["tadj"] = {"stupid",  "pathetic", "worthless", "disgusting",
                       "idiotic", "ugly",     "useless",   "brainless",
                       "vile",    "moronic"};
    v.slots["tnoun"] = {"idiot", "loser", "moron",  "clown",  "fool",
                        "jerk",  "creep", "troll",  "coward", "imbecile"};
    v.negative_templates = benign_templates;
  } else if (task_name == "illicit_promotion") {
    v.positive_templates = {
        "buy cheap {item} now at {site}",
        "order {item} online with fast discreet shipping from {site}",
        "we sell {item} with no prescription needed contact {site}",
        "get {item} today with guaranteed delivery via {site}",
    };
    v.slots["item"] = {"oxycodone",   "counterfeit watches", "fake passports",
                       "stolen cards", "cracked software",   "replica handbags",
                       "hacked accounts", "forged diplomas", "fentanyl",
                       "cloned phones"};
    v.slots["site"] = {"darkshop", "pillzone", "quickmeds", "shadowmart",
                       "cheaprx",  "blackbay", "fastfakes", "rxdirect",
                       "hidemart", "grayvault"};
    v.negative_templates = benign_templates;
  } else if (task_name == "sentiment") {
    // The positive (attacked) class is negative sentiment.
    v.positive_templates = {
        "the {thing} was {nadj} and {nadj2}",
        "i hated the {thing} because it felt {nadj}",
        "what a {nadj} waste of time that {thing} was",
        "honestly the {thing} was boring and {nadj}",
    };
    v.slots["thing"] = {"movie", "plot",  "acting", "ending", "soundtrack",
                        "script", "film", "story",  "cast",   "sequel"};
    v.slots["nadj"] = {"awful",    "terrible", "dull",      "dreadful",
                       "horrible", "painful",  "miserable", "lousy",
                       "tedious",  "bad"};
    v.slots["nadj2"] = v.slots["nadj"];
    v.negative_templates = {
        "this is a {padj} {bnoun} about the {thing}",
        "i loved the {thing} because it was {padj}",
        "what a {padj} experience that {thing} was",
        "the {thing} was {padj} and charming",
    };
    v.slots["padj"] = {"wonderful", "delightful", "brilliant", "lovely",
                       "great",     "excellent",  "charming",  "superb",
                       "joyful",    "beautiful"};
  } else {
    throw InvalidArgument("no toy dataset for task '" +
                          std::string(task_name) + "'");
  }
  return v;
}

std::string Fill(const std::string& pattern, const ToyVocabulary& vocab,
                 Rng& rng) {
  std::string out;
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] != '{') {
      out += pattern[i++];
      continue;
    }
    const std::size_t close = pattern.find('}', i);
    const std::string slot = pattern.substr(i + 1, close - i - 1);
    const std::vector<std::string>& words = vocab.slots.at(slot);
    out += words[UniformIndex(rng, words.size())];
    i = close + 1;
  }
  return out;
}

}  // namespace

std::vector<LabeledSample> GenerateToySamples(std::string_view task_name,
                                              std::size_t size,
                                              std::uint64_t seed) {
  if (size < 2 || size % 2 != 0) {
    throw InvalidArgument("toy dataset size must be even and >= 2");
  }
  const TaskSpec task = DefaultTask(task_name);
  const ToyVocabulary vocab = VocabularyFor(task_name);
  Rng rng(DeriveSeed(seed, task_name));

  std::vector<LabeledSample> out;
  std::set<std::string> seen;
  auto generate = [&](const std::vector<std::string>& templates,
                      const Label& label) {
    std::size_t made = 0;
    std::size_t attempts = 0;
    while (made < size / 2) {
      if (++attempts > 100 * size) {
        throw InvalidArgument("toy vocabulary too small for requested size");
      }
      const std::string& pattern = templates[UniformIndex(rng, templates.size())];
      std::string text = Fill(pattern, vocab, rng);
      if (!seen.insert(text).second) continue;
      out.emplace_back(std::move(text), label);
      ++made;
    }
  };
  generate(vocab.positive_templates, task.positive_label());
  generate(vocab.negative_templates, task.negative_label());
  Shuffle(out, rng);
  return out;
}

std::string ToJsonl(const std::vector<LabeledSample>& samples) {
  std::string out;
  for (const LabeledSample& s : samples) {
    out += json({{"text", s.text}, {"label", s.label.name()}}).dump();
    out += '\n';
  }
  return out;
}

Dataset ToyDataset(std::string_view task_name) {
  std::istringstream in(ToJsonl(GenerateToySamples(task_name)));
  return ParseDataset(in, DefaultTask(task_name));
}

}  // namespace icl_evader
