#include "icl_evader/dataset.h"

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "icl_evader/error.h"

namespace icl_evader {
namespace {

Dataset Parse(const std::string& text, const std::string& task = "toxicity") {
  std::istringstream in(text);
  return ParseDataset(in, DefaultTask(task));
}

TEST(ParseDatasetTest, OneSample) {
  const Dataset d = Parse(R"({"text":"hi","label":"benign"})");
  ASSERT_EQ(d.samples.size(), 1u);
  EXPECT_EQ(d.samples[0].sample_id, 1u);
  EXPECT_EQ(d.samples[0].sample.text, "hi");
}

TEST(ParseDatasetTest, BlankLinesAdvanceIds) {
  const Dataset d = Parse(
      "{\"text\":\"a\",\"label\":\"benign\"}\n\n{\"text\":\"b\",\"label\":"
      "\"toxic\"}\n");
  ASSERT_EQ(d.samples.size(), 2u);
  EXPECT_EQ(d.samples[1].sample_id, 3u);
}

TEST(ParseDatasetTest, UnknownLabelNamesLineAndSet) {
  try {
    Parse("{\"text\":\"a\",\"label\":\"benign\"}\n{\"text\":\"b\",\"label\":"
          "\"spam\"}");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 2u);
    const std::string what = e.what();
    EXPECT_NE(what.find("spam"), std::string::npos);
    EXPECT_NE(what.find("toxic"), std::string::npos);
  }
}

TEST(ParseDatasetTest, Errors) {
  EXPECT_THROW(Parse(""), InvalidArgument);
  EXPECT_THROW(Parse("not json"), ParseError);
  EXPECT_THROW(Parse(R"({"label":"benign"})"), ParseError);
  EXPECT_THROW(Parse(R"({"text":"","label":"benign"})"), ParseError);
  EXPECT_THROW(LoadDataset("/nonexistent/file.jsonl", DefaultTask("toxicity")),
               InvalidArgument);
}

TEST(ParseDatasetTest, BalancedClassCounts) {
  std::string text;
  for (int i = 0; i < 5000; ++i) {
    text += "{\"text\":\"s" + std::to_string(i) + "\",\"label\":\"" +
            (i % 2 ? "toxic" : "benign") + "\"}\n";
  }
  const auto counts = Parse(text).ClassCounts();
  EXPECT_EQ(counts.at("toxic"), 2500u);
  EXPECT_EQ(counts.at("benign"), 2500u);
}

Dataset Synthetic(std::size_t pos, std::size_t neg) {
  Dataset d{"toxicity", Split::kAll, {}};
  std::size_t id = 1;
  for (std::size_t i = 0; i < pos; ++i, ++id) {
    d.samples.push_back({id, {"p" + std::to_string(i), Label("toxic")}});
  }
  for (std::size_t i = 0; i < neg; ++i, ++id) {
    d.samples.push_back({id, {"n" + std::to_string(i), Label("benign")}});
  }
  return d;
}

TEST(SplitDatasetTest, Sizes) {
  const auto [train, test] = SplitDataset(Synthetic(5, 5), 0.8, 1);
  EXPECT_EQ(train.samples.size(), 8u);
  EXPECT_EQ(test.samples.size(), 2u);
  EXPECT_EQ(train.split, Split::kTrain);
  EXPECT_EQ(test.split, Split::kTest);
}

TEST(SplitDatasetTest, Stratified) {
  const auto [train, test] = SplitDataset(Synthetic(6, 4), 0.5, 3);
  EXPECT_EQ(train.ClassCounts().at("toxic"), 3u);
  EXPECT_EQ(train.ClassCounts().at("benign"), 2u);
  EXPECT_EQ(test.ClassCounts().at("toxic"), 3u);
  EXPECT_EQ(test.ClassCounts().at("benign"), 2u);
}

TEST(SplitDatasetTest, DeterministicDisjointAndOrdered) {
  const Dataset d = Synthetic(40, 33);
  const auto a = SplitDataset(d, 0.8, 9);
  const auto b = SplitDataset(d, 0.8, 9);
  EXPECT_EQ(a.first.samples, b.first.samples);
  EXPECT_EQ(a.second.samples, b.second.samples);
  std::set<std::size_t> ids;
  for (const auto& s : a.first.samples) ids.insert(s.sample_id);
  for (const auto& s : a.second.samples) {
    EXPECT_FALSE(ids.count(s.sample_id));
  }
  EXPECT_EQ(ids.size() + a.second.samples.size(), d.samples.size());
  EXPECT_TRUE(std::is_sorted(
      a.second.samples.begin(), a.second.samples.end(),
      [](const auto& x, const auto& y) { return x.sample_id < y.sample_id; }));
  EXPECT_NE(SplitDataset(d, 0.8, 10).second.samples, a.second.samples);
}

TEST(SplitDatasetTest, BalancePropertyWithinOne) {
  for (std::size_t pos = 2; pos < 30; pos += 3) {
    for (double f : {0.2, 0.5, 0.8}) {
      const auto [train, test] = SplitDataset(Synthetic(pos, 17), f, pos);
      const double want = f * pos;
      const double got = static_cast<double>(train.ClassCounts().at("toxic"));
      EXPECT_LE(std::abs(got - want), 1.0) << pos << " " << f;
    }
  }
}

TEST(SplitDatasetTest, Errors) {
  EXPECT_THROW(SplitDataset(Synthetic(1, 5), 0.8, 1), InvalidArgument);
  EXPECT_THROW(SplitDataset(Synthetic(5, 5), 1.0, 1), InvalidArgument);
  EXPECT_THROW(SplitDataset(Synthetic(5, 5), 0.0, 1), InvalidArgument);
}

TEST(ToyDatasetTest, BalancedUniqueAndDeterministic) {
  for (std::string_view task : kTaskNames) {
    const auto samples = GenerateToySamples(task);
    ASSERT_EQ(samples.size(), kToySize);
    std::set<std::string> texts;
    std::size_t positives = 0;
    const TaskSpec spec = DefaultTask(task);
    for (const auto& s : samples) {
      texts.insert(s.text);
      positives += s.label == spec.positive_label();
    }
    EXPECT_EQ(texts.size(), kToySize) << task;
    EXPECT_EQ(positives, kToySize / 2) << task;
    EXPECT_EQ(GenerateToySamples(task), samples);
  }
}

TEST(ToyDatasetTest, ShippedFilesMatchGenerator) {
  for (std::string_view task : kTaskNames) {
    const std::string path =
        std::string(ICL_EVADER_DATA_DIR) + "/toy/" + std::string(task) + ".jsonl";
    std::ifstream in(path);
    ASSERT_TRUE(in) << path;
    std::stringstream buf;
    buf << in.rdbuf();
    EXPECT_EQ(buf.str(), ToJsonl(GenerateToySamples(task))) << path;
    const Dataset loaded = LoadDataset(path, DefaultTask(task));
    EXPECT_EQ(loaded.samples, ToyDataset(task).samples);
  }
}

}  // namespace
}  // namespace icl_evader
