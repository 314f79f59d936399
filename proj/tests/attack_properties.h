#ifndef ICL_EVADER_TESTS_ATTACK_PROPERTIES_H_
#define ICL_EVADER_TESTS_ATTACK_PROPERTIES_H_

// Randomized invariant checks shared by the unit tests and the acceptance
// binary. Each Check* returns an empty string on success, else a description
// of the first violated invariant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "icl_evader/attacks.h"
#include "icl_evader/defenses.h"

namespace icl_evader::testing {

// Counts non-overlapping occurrences of `needle` in `hay`.
inline std::size_t CountOccurrences(const std::string& hay,
                                    const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

// Case generator. Samples carry a '#' marker that never occurs in pools,
// claims or templates, so substring counts are exact.
class CaseGen {
 public:
  explicit CaseGen(std::uint64_t seed) : rng_(seed) {}

  std::size_t Int(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  std::string Word(std::size_t max_len = 8) {
    static const std::string kChars = "abcdefghijklmnopqrstuvwxyz";
    std::string w;
    const std::size_t len = Int(1, max_len);
    for (std::size_t i = 0; i < len; ++i) w += kChars[Int(0, 25)];
    return w;
  }

  std::string Text(std::size_t max_words = 6) {
    std::string t = Word();
    const std::size_t n = Int(0, max_words - 1);
    for (std::size_t i = 0; i < n; ++i) t += " " + Word();
    return t;
  }

  std::string Sample() { return "#" + Text() + "#"; }

  std::vector<std::string> Pool(std::size_t size) {
    std::vector<std::string> pool;
    for (std::size_t i = 0; i < size; ++i) pool.push_back(Text());
    return pool;
  }

  std::uint64_t Seed() { return rng_(); }

 private:
  std::mt19937_64 rng_;
};

inline std::string CheckFakeClaim(CaseGen& g) {
  FakeClaimConfig cfg;
  const std::size_t n_candidates = g.Int(1, 5);
  // '@' delimiters keep claims prefix-free, so peeling them off is exact.
  for (std::size_t i = 0; i < n_candidates; ++i) {
    cfg.claims.push_back("@" + g.Text() + "@");
  }
  cfg.n_claims = g.Int(1, 128);
  cfg.position = g.Int(0, 1) ? ClaimPosition::kBegin : ClaimPosition::kEnd;
  cfg.seed = g.Seed();
  const std::string sample = g.Sample();
  const std::string out = FakeClaimAttack(sample, cfg);

  if (CountOccurrences(out, sample) != 1) return "sample not present once";
  if (out != FakeClaimAttack(sample, cfg)) return "not deterministic";
  // Exactly n_claims single-space joins surround the sample, on one side.
  const std::size_t at = out.find(sample);
  const std::string rest = cfg.position == ClaimPosition::kEnd
                               ? out.substr(at + sample.size())
                               : out.substr(0, at);
  if (cfg.position == ClaimPosition::kEnd ? at != 0
                                          : at + sample.size() != out.size()) {
    return "sample not at the expected end";
  }
  // Peel claims off one at a time; each must be a candidate.
  std::string remaining = rest;
  std::size_t peeled = 0;
  std::size_t claim_bytes = 0;
  while (!remaining.empty()) {
    bool matched = false;
    for (const std::string& c : cfg.claims) {
      const std::string piece =
          cfg.position == ClaimPosition::kEnd ? " " + c : c + " ";
      if (remaining.compare(0, piece.size(), piece) == 0) {
        remaining.erase(0, piece.size());
        claim_bytes += c.size();
        matched = true;
        break;
      }
    }
    if (!matched) return "unrecognized claim text";
    ++peeled;
  }
  if (out.size() != sample.size() + claim_bytes + cfg.n_claims) {
    return "length accounting";
  }
  if (peeled != cfg.n_claims) return "claim count";
  return {};
}

inline std::string CheckTemplate(CaseGen& g) {
  TemplateAttackConfig cfg;
  const auto& preset = kAttackerPrefixPresets[g.Int(0, 3)];
  cfg.sample_prefix = preset.sample;
  cfg.answer_prefix = preset.answer;
  cfg.label_pos = g.Word();
  cfg.label_neg = g.Word();
  cfg.n_demos = g.Int(1, 16);
  cfg.test_position = g.Int(1, cfg.n_demos);
  cfg.seed = g.Seed();
  const BenignPool pool(g.Pool(g.Int(1, 24)));
  const std::string sample = g.Sample();
  const std::string out = TemplateAttack(sample, pool, cfg);

  if (CountOccurrences(out, sample) != 1) return "sample not present once";
  if (out != TemplateAttack(sample, pool, cfg)) return "not deterministic";
  // Blocks: n_demos answered ones plus one trailing unanswered sample.
  if (CountOccurrences(out, cfg.sample_prefix) < cfg.n_demos + 1) {
    return "block count (sample prefixes)";
  }
  std::size_t answers = 0;
  for (std::size_t pos = 0; (pos = out.find("\n" + cfg.answer_prefix, pos)) !=
                            std::string::npos;
       ++pos) {
    ++answers;
  }
  if (answers != cfg.n_demos) return "block count (answer lines)";
  // Length: each answered block adds prefixes, two separators and a label.
  std::size_t expected = cfg.sample_prefix.size() * (cfg.n_demos + 1) +
                         cfg.answer_prefix.size() * cfg.n_demos +
                         2 * cfg.demo_separator.size() * cfg.n_demos +
                         sample.size() + cfg.label_pos.size() +
                         cfg.label_neg.size() * (cfg.n_demos - 1);
  // Benign texts: recover them from the output by splitting on lines.
  std::size_t benign_bytes = 0;
  std::size_t line_start = 0;
  std::size_t block = 0;
  while (line_start <= out.size()) {
    std::size_t nl = out.find('\n', line_start);
    if (nl == std::string::npos) nl = out.size();
    const std::string line = out.substr(line_start, nl - line_start);
    if (line.rfind(cfg.sample_prefix, 0) == 0) {
      ++block;
      const std::string body = line.substr(cfg.sample_prefix.size());
      if (block != cfg.test_position) {
        bool in_pool = false;
        for (const std::string& s : pool.samples()) in_pool |= s == body;
        if (!in_pool) return "benign block not from pool";
        benign_bytes += body.size();
      } else if (body != sample) {
        return "test sample not at test_position";
      }
    }
    line_start = nl + 1;
  }
  expected += benign_bytes;
  if (out.size() != expected) return "length accounting";
  return {};
}

inline std::string CheckNeedle(CaseGen& g) {
  NeedleConfig cfg;
  cfg.n_benign = g.Int(1, 16);
  cfg.hide_format = static_cast<HideFormat>(g.Int(0, 6));
  cfg.highlight_format = static_cast<HighlightFormat>(g.Int(0, 7));
  cfg.insert_location = static_cast<InsertLocation>(g.Int(0, 2));
  cfg.seed = g.Seed();
  const BenignPool pool(g.Pool(cfg.n_benign + g.Int(0, 8)));
  const std::string sample = g.Sample();
  const std::string out = NeedleAttack(sample, pool, cfg);

  if (CountOccurrences(out, sample) != 1) return "sample not present once";
  if (out != NeedleAttack(sample, pool, cfg)) return "not deterministic";
  const auto hide =
      HideFormatCatalog()[static_cast<std::size_t>(cfg.hide_format)];
  const auto hl =
      HighlightFormatCatalog()[static_cast<std::size_t>(cfg.highlight_format)];
  // Split on the joiner: exactly n_benign + 1 blocks.
  std::vector<std::string> blocks;
  std::size_t start = 0;
  for (;;) {
    const std::size_t nl = out.find(cfg.joiner, start);
    blocks.push_back(out.substr(start, nl - start));
    if (nl == std::string::npos) break;
    start = nl + cfg.joiner.size();
  }
  if (blocks.size() != cfg.n_benign + 1) return "block count";
  const std::size_t at = NeedleInsertIndex(cfg.insert_location, cfg.n_benign);
  if (blocks[at] != std::string(hl.open) + sample + std::string(hl.close)) {
    return "needle block at wrong index or badly wrapped";
  }
  std::vector<std::string> seen;
  std::size_t benign_bytes = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i == at) continue;
    const std::string& b = blocks[i];
    if (b.compare(0, hide.open.size(), hide.open) != 0 ||
        b.size() < hide.open.size() + hide.close.size()) {
      return "benign block not hidden";
    }
    const std::string body = b.substr(
        hide.open.size(), b.size() - hide.open.size() - hide.close.size());
    benign_bytes += body.size();
    seen.push_back(body);
  }
  // Distinct pool picks: count multiplicities against the pool.
  for (const std::string& s : seen) {
    const std::size_t in_out = static_cast<std::size_t>(
        std::count(seen.begin(), seen.end(), s));
    const std::size_t in_pool = static_cast<std::size_t>(
        std::count(pool.samples().begin(), pool.samples().end(), s));
    if (in_out > in_pool) return "benign sample drawn twice";
  }
  const std::size_t expected =
      sample.size() + hl.open.size() + hl.close.size() + benign_bytes +
      cfg.n_benign * (hide.open.size() + hide.close.size()) +
      cfg.n_benign * cfg.joiner.size();
  if (out.size() != expected) return "length accounting";
  return {};
}

// AdvDemo: floor(rN) adversarial demos per kind, exactly N total, every label
// retained from its source pool, for each placement.
inline std::string CheckAdvDemo(CaseGen& g) {
  const std::size_t n_total = g.Int(1, 64);
  AdvDemoConfig cfg;
  std::size_t budget = 100;
  for (double& r : cfg.ratio_per_attack) {
    const std::size_t pct = g.Int(0, std::min<std::size_t>(budget, 40));
    budget -= pct;
    r = pct / 100.0;
  }
  cfg.placement = static_cast<AdvDemoPlacement>(g.Int(0, 3));
  cfg.seed = g.Seed();
  const auto counts = AdvDemoCounts(cfg, n_total);
  std::size_t n_adv = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t pct = static_cast<std::size_t>(
        std::llround(cfg.ratio_per_attack[k] * 100));
    if (counts[k] != pct * n_total / 100) return "floor(rN) count";
    n_adv += counts[k];
  }
  std::vector<LabeledSample> clean;
  const std::size_t n_clean = n_total - n_adv + g.Int(0, 4);
  for (std::size_t i = 0; i < n_clean; ++i) {
    clean.emplace_back("clean" + std::to_string(i),
                       Label(g.Int(0, 1) ? "pos" : "neg"));
  }
  AdvPools pools;
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t size = counts[k] + g.Int(0, 4);
    for (std::size_t i = 0; i < size; ++i) {
      pools[k].emplace_back(
          "adv" + std::to_string(k) + "_" + std::to_string(i),
          Label(g.Int(0, 1) ? "pos" : "neg"));
    }
  }
  const auto out = AdvDemoAugment(clean, pools, n_total, cfg);
  if (out.size() != n_total) return "total demo count";
  if (out != AdvDemoAugment(clean, pools, n_total, cfg)) {
    return "not deterministic";
  }
  std::array<std::size_t, 3> seen = {0, 0, 0};
  std::vector<std::size_t> adv_positions;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const LabeledSample& d = out[i];
    const std::vector<LabeledSample>* source = &clean;
    if (d.text.rfind("adv", 0) == 0) {
      const std::size_t k = static_cast<std::size_t>(d.text[3] - '0');
      ++seen[k];
      source = &pools[k];
      adv_positions.push_back(i);
    }
    if (std::find(source->begin(), source->end(), d) == source->end()) {
      return "label not retained";
    }
    if (std::count(out.begin(), out.end(), d) != 1) return "duplicate demo";
  }
  if (seen != counts) return "per-kind adversarial count";
  if (!adv_positions.empty() && cfg.placement != AdvDemoPlacement::kRandom) {
    const std::size_t first = adv_positions.front();
    if (adv_positions.back() - first + 1 != adv_positions.size()) {
      return "adversarial block not contiguous";
    }
    const std::size_t n_clean_out = n_total - n_adv;
    const std::size_t want = cfg.placement == AdvDemoPlacement::kBegin ? 0
                             : cfg.placement == AdvDemoPlacement::kEnd
                                 ? n_clean_out
                                 : n_clean_out / 2;
    if (first != want) return "adversarial block position";
  }
  return {};
}

}  // namespace icl_evader::testing

#endif  // ICL_EVADER_TESTS_ATTACK_PROPERTIES_H_
