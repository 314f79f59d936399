#include <gtest/gtest.h>

#include "icl_evader/defenses.h"
#include "icl_evader/error.h"
#include "recipe_fuzz.h"

namespace icl_evader {
namespace {

TEST(ParseRecipeTest, SingleRatioAppliesToEveryKind) {
  const DefenseRecipe r = ParseRecipe("p10");
  ASSERT_TRUE(r.adv_demo);
  EXPECT_EQ(r.adv_demo->ratio_per_attack, (std::array<double, 3>{0.1, 0.1, 0.1}));
  EXPECT_EQ(r.adv_demo->placement, AdvDemoPlacement::kRandom);
  EXPECT_FALSE(r.random_template);
  EXPECT_FALSE(r.cw);
}

TEST(ParseRecipeTest, ThreeRatiosArePositional) {
  const DefenseRecipe r = ParseRecipe("p10_15_10_length10_CWmessage1_CWpos0");
  EXPECT_EQ(r.adv_demo->ratio_per_attack,
            (std::array<double, 3>{0.10, 0.15, 0.10}));
  EXPECT_EQ(r.random_template->length, 10u);
  EXPECT_FALSE(r.random_template->use_tag);
  EXPECT_EQ(r.cw->message, WarningMessage::Builtin(WarningVariant::kMedium));
  EXPECT_EQ(r.cw->position, WarningPosition::kInstructionDemos);
}

TEST(ParseRecipeTest, TwoRatiosLeaveNeedleAtZero) {
  const DefenseRecipe r = ParseRecipe("p10_20");
  EXPECT_EQ(r.adv_demo->ratio_per_attack, (std::array<double, 3>{0.1, 0.2, 0.0}));
  EXPECT_EQ(FormatRecipe(r), "p10_20_0");
}

TEST(ParseRecipeTest, CwValues) {
  EXPECT_EQ(ParseRecipe("CWmessage0_CWpos1").cw->message.variant,
            WarningVariant::kShort);
  EXPECT_EQ(ParseRecipe("CWmessage2_CWpos2").cw->position,
            WarningPosition::kBoth);
  EXPECT_EQ(ParseRecipe("CWmessage1_CWpos1").cw->position,
            WarningPosition::kDemosTest);
}

TEST(ParseRecipeTest, ReferenceCodesRoundTrip) {
  for (const std::string& code : testing::ReferenceRecipeCodes()) {
    EXPECT_EQ(FormatRecipe(ParseRecipe(code)), code);
  }
}

TEST(ParseRecipeTest, MalformedCodesReportOffsets) {
  for (const auto& [code, position] : testing::MalformedRecipes()) {
    try {
      ParseRecipe(code);
      ADD_FAILURE() << "accepted '" << code << "'";
    } catch (const ParseError& e) {
      EXPECT_EQ(e.position(), position) << code << ": " << e.what();
    }
  }
}

TEST(ParseRecipeTest, FuzzedValidCodesRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const std::string code = testing::RandomValidRecipe(rng);
    ASSERT_TRUE(testing::OracleAcceptsRecipe(code)) << code;
    EXPECT_EQ(FormatRecipe(ParseRecipe(code)), code);
  }
}

TEST(ParseRecipeTest, MutantsAgreeWithOracle) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 2000; ++i) {
    const std::string code =
        testing::Mutate(testing::RandomValidRecipe(rng), rng);
    if (testing::OracleAcceptsRecipe(code)) {
      EXPECT_NO_THROW(ParseRecipe(code)) << code;
    } else {
      try {
        ParseRecipe(code);
        ADD_FAILURE() << "accepted '" << code << "'";
      } catch (const ParseError& e) {
        EXPECT_LE(e.position(), code.size()) << code;
      }
    }
  }
}

TEST(FormatRecipeTest, RejectsUnformattable) {
  EXPECT_THROW(FormatRecipe(DefenseRecipe{}), InvalidArgument);
  DefenseRecipe r;
  r.cw = CautionaryWarningConfig{};
  r.cw->message.text = "custom";
  EXPECT_THROW(FormatRecipe(r), InvalidArgument);
  DefenseRecipe q;
  q.adv_demo = AdvDemoConfig{{0.125, 0.1, 0.1}};
  EXPECT_THROW(FormatRecipe(q), InvalidArgument);
}

}  // namespace
}  // namespace icl_evader
