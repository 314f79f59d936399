#include <cctype>
#include <cmath>
#include <vector>

#include "icl_evader/defenses.h"
#include "icl_evader/error.h"

namespace icl_evader {
namespace {

struct Token {
  std::string_view text;
  std::size_t offset;
};

std::vector<Token> Tokenize(std::string_view code) {
  std::vector<Token> tokens;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= code.size(); ++i) {
    if (i == code.size() || code[i] == '_') {
      tokens.push_back({code.substr(start, i - start), start});
      start = i + 1;
    }
  }
  return tokens;
}

bool AllDigits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

// Parses the decimal suffix of `token` after `keyword`.
unsigned ParseNumber(const Token& token, std::size_t keyword_size) {
  const std::string_view digits = token.text.substr(keyword_size);
  const std::size_t at = token.offset + keyword_size;
  if (!AllDigits(digits)) {
    throw ParseError("recipe: expected digits in '" + std::string(token.text) +
                         "'",
                     at);
  }
  if (digits.size() > 1 && digits[0] == '0') {
    throw ParseError("recipe: leading zero in '" + std::string(token.text) +
                         "'",
                     at);
  }
  if (digits.size() > 6) {
    throw ParseError("recipe: number too large in '" +
                         std::string(token.text) + "'",
                     at);
  }
  return static_cast<unsigned>(std::stoul(std::string(digits)));
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

bool IsKeywordToken(std::string_view text, std::string_view keyword) {
  return StartsWith(text, keyword) && text.size() > keyword.size() &&
         std::isdigit(static_cast<unsigned char>(text[keyword.size()]));
}

}  // namespace

DefenseRecipe ParseRecipe(std::string_view code) {
  if (code.empty()) throw ParseError("recipe: empty code", 0);
  const std::vector<Token> tokens = Tokenize(code);

  // Components must appear in the order p, length, CW.
  enum Stage { kNone = 0, kP = 1, kLength = 2, kCw = 3 };
  int stage = kNone;
  DefenseRecipe recipe;

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& tok = tokens[i];
    if (tok.text.empty()) {
      throw ParseError("recipe: empty component", tok.offset);
    }

    if (IsKeywordToken(tok.text, "p")) {
      if (recipe.adv_demo) {
        throw ParseError("recipe: duplicate component 'p'", tok.offset);
      }
      if (stage > kNone) {
        throw ParseError("recipe: 'p' must come first", tok.offset);
      }
      std::vector<std::pair<unsigned, std::size_t>> values = {
          {ParseNumber(tok, 1), tok.offset + 1}};
      while (values.size() < 3 && i + 1 < tokens.size() &&
             AllDigits(tokens[i + 1].text)) {
        ++i;
        values.push_back({ParseNumber(tokens[i], 0), tokens[i].offset});
      }
      for (const auto& [value, at] : values) {
        if (value > 100) {
          throw ParseError("recipe: percentage above 100", at);
        }
      }
      std::array<unsigned, 3> pct{};
      if (values.size() == 1) {
        pct = {values[0].first, values[0].first, values[0].first};
      } else {
        pct = {values[0].first, values[1].first,
               values.size() == 3 ? values[2].first : 0u};
      }
      if (pct[0] + pct[1] + pct[2] > 100) {
        throw ParseError("recipe: percentages sum above 100", tok.offset);
      }
      AdvDemoConfig adv;
      for (std::size_t k = 0; k < 3; ++k) adv.ratio_per_attack[k] = pct[k] / 100.0;
      recipe.adv_demo = adv;
      stage = kP;
      continue;
    }

    if (IsKeywordToken(tok.text, "length")) {
      if (recipe.random_template) {
        throw ParseError("recipe: duplicate component 'length'", tok.offset);
      }
      if (stage > kP) {
        throw ParseError("recipe: 'length' must precede 'CWmessage'",
                         tok.offset);
      }
      RandomTemplateConfig rt;
      rt.length = ParseNumber(tok, 6);
      if (rt.length == 0) {
        throw ParseError("recipe: length must be >= 1", tok.offset + 6);
      }
      recipe.random_template = rt;
      stage = kLength;
      continue;
    }

    if (IsKeywordToken(tok.text, "CWmessage")) {
      if (recipe.cw) {
        throw ParseError("recipe: duplicate component 'CWmessage'",
                         tok.offset);
      }
      const unsigned message = ParseNumber(tok, 9);
      if (message > 2) {
        throw ParseError("recipe: CWmessage must be 0, 1 or 2",
                         tok.offset + 9);
      }
      if (i + 1 >= tokens.size() ||
          !IsKeywordToken(tokens[i + 1].text, "CWpos")) {
        const std::size_t at =
            i + 1 < tokens.size() ? tokens[i + 1].offset : code.size();
        throw ParseError("recipe: 'CWmessage' must be followed by 'CWpos'",
                         at);
      }
      ++i;
      const unsigned position = ParseNumber(tokens[i], 5);
      if (position > 2) {
        throw ParseError("recipe: CWpos must be 0, 1 or 2",
                         tokens[i].offset + 5);
      }
      CautionaryWarningConfig cw;
      cw.message = WarningMessage::Builtin(static_cast<WarningVariant>(message));
      cw.position = static_cast<WarningPosition>(position);
      recipe.cw = cw;
      stage = kCw;
      continue;
    }

    if (IsKeywordToken(tok.text, "CWpos")) {
      throw ParseError("recipe: 'CWpos' without preceding 'CWmessage'",
                       tok.offset);
    }
    throw ParseError("recipe: malformed component '" +
                         std::string(tok.text) + "'",
                     tok.offset);
  }
  return recipe;
}

std::string FormatRecipe(const DefenseRecipe& recipe) {
  if (recipe.empty()) throw InvalidArgument("cannot format an empty recipe");
  std::vector<std::string> parts;

  if (recipe.adv_demo) {
    recipe.adv_demo->Validate();
    std::array<long, 3> pct{};
    for (std::size_t k = 0; k < 3; ++k) {
      const double scaled = recipe.adv_demo->ratio_per_attack[k] * 100.0;
      pct[k] = std::lround(scaled);
      if (std::abs(scaled - static_cast<double>(pct[k])) > 1e-6) {
        throw InvalidArgument("AdvDemo ratio is not a whole percentage");
      }
    }
    if (pct[0] == pct[1] && pct[1] == pct[2]) {
      parts.push_back("p" + std::to_string(pct[0]));
    } else {
      parts.push_back("p" + std::to_string(pct[0]) + "_" +
                      std::to_string(pct[1]) + "_" + std::to_string(pct[2]));
    }
  }
  if (recipe.random_template) {
    parts.push_back("length" + std::to_string(recipe.random_template->length));
  }
  if (recipe.cw) {
    const WarningMessage builtin =
        WarningMessage::Builtin(recipe.cw->message.variant);
    if (builtin.text != recipe.cw->message.text) {
      throw InvalidArgument("custom warning text has no recipe code");
    }
    parts.push_back(
        "CWmessage" +
        std::to_string(static_cast<int>(recipe.cw->message.variant)) +
        "_CWpos" + std::to_string(static_cast<int>(recipe.cw->position)));
  }

  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += '_';
    out += parts[i];
  }
  return out;
}

}  // namespace icl_evader
