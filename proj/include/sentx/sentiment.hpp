#pragma once

// Deterministic lexicon-based sentence sentiment with Arabic (dialect and
// standard) and English negation handling.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sentx/error.hpp"
#include "sentx/lexicons.hpp"
#include "sentx/normalize.hpp"
#include "sentx/utf8.hpp"

namespace sentx {

struct SentimentScore {
  double positive = 0.0;
  double neutral = 1.0;
  double negative = 0.0;

  bool valid(double tol = 1e-9) const {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0 && std::isfinite(v); };
    return in01(positive) && in01(neutral) && in01(negative) &&
           std::abs(positive + neutral + negative - 1.0) <= tol;
  }

  bool operator==(const SentimentScore&) const = default;
};

using SentenceScorer = std::function<SentimentScore(std::string_view)>;

enum class NegatorKind { DialectStandalone, DialectCircumfix, Standard, English };

struct NegatorSpan {
  std::size_t negator_index = 0;
  std::vector<std::size_t> scope_indices;
  NegatorKind kind = NegatorKind::English;

  bool is_dialect() const { return kind == NegatorKind::DialectStandalone || kind == NegatorKind::DialectCircumfix; }
  bool operator==(const NegatorSpan&) const = default;
};

struct NegationConfig {
  std::size_t scope_size = 3;
  const WordList* verb_stems = nullptr;  // enables the circumfix rule
};

namespace detail {

inline bool in_list(std::string_view token, std::initializer_list<std::string_view> list) {
  return std::find(list.begin(), list.end(), token) != list.end();
}

// Egyptian ma-...-sh: م + [ا] + [aspect/person prefix] + stem + [suffix] + ش.
inline bool is_circumfix_negation(std::string_view token, const WordList& stems) {
  const std::u32string cps = utf8::decode(token);
  if (cps.size() < 4 || cps.front() != U'م' || cps.back() != U'ش') return false;
  std::u32string interior = cps.substr(1, cps.size() - 2);
  std::vector<std::u32string> bodies{interior};
  if (!interior.empty() && interior.front() == U'ا') bodies.push_back(interior.substr(1));

  static const std::vector<std::u32string> prefixes{U"", U"ب", U"ي", U"ت", U"ن", U"بي", U"بت", U"بن"};
  static const std::vector<std::u32string> suffixes{U"",   U"ني", U"ك",  U"ه",  U"ها", U"هم", U"نا", U"كم",
                                                    U"ت",  U"تو", U"وا", U"ته", U"تها", U"تهم", U"تك", U"تني"};
  for (const auto& body : bodies) {
    for (const auto& pre : prefixes) {
      if (body.compare(0, pre.size(), pre) != 0) continue;
      for (const auto& suf : suffixes) {
        if (body.size() < pre.size() + suf.size() + 1) continue;
        if (body.compare(body.size() - suf.size(), suf.size(), suf) != 0) continue;
        const auto stem = body.substr(pre.size(), body.size() - pre.size() - suf.size());
        if (stems.count(utf8::encode(stem))) return true;
      }
    }
  }
  return false;
}

}  // namespace detail

/// Negation cues and their scopes.
///
/// A standalone negator scopes over the next scope_size content tokens,
/// stopping at punctuation. A circumfix-negated verb is its own scope.
/// English "n't" survives tokenization as [..n, ', t] and is recognised there.
inline std::vector<NegatorSpan> detect_negators(const TokenSequence& tokens, const NegationConfig& config = {}) {
  std::vector<NegatorSpan> spans;
  std::vector<std::string> bases;
  bases.reserve(tokens.size());
  for (const auto& t : tokens) bases.push_back(detail::lower_ascii(split_tag(t).base));

  for (std::size_t i = 0; i < bases.size(); ++i) {
    const auto& tok = bases[i];
    std::optional<NegatorKind> kind;
    if (detail::in_list(tok, {"مش", "مو", "مب"})) {
      kind = NegatorKind::DialectStandalone;
    } else if (detail::in_list(tok, {"لا", "لم", "لن", "ليس", "ليست"})) {
      kind = NegatorKind::Standard;
    } else if (detail::in_list(tok, {"not", "no", "never", "n't", "cannot", "nothing"})) {
      kind = NegatorKind::English;
    } else if (tok == "t" && i >= 2 && bases[i - 1] == "'" && !bases[i - 2].empty() && bases[i - 2].back() == 'n') {
      kind = NegatorKind::English;
    } else if (config.verb_stems && detail::is_circumfix_negation(tok, *config.verb_stems)) {
      spans.push_back({i, {i}, NegatorKind::DialectCircumfix});
      continue;
    }
    if (!kind) continue;
    NegatorSpan span{i, {}, *kind};
    for (std::size_t j = i + 1; j < bases.size() && span.scope_indices.size() < config.scope_size; ++j) {
      if (is_punctuation_token(bases[j])) break;
      span.scope_indices.push_back(j);
    }
    if (!span.scope_indices.empty()) spans.push_back(std::move(span));
  }
  return spans;
}

struct PolarityCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
};

// A hit flips once per enclosing negator scope, so double negation cancels.
inline PolarityCounts count_hits(const TokenSequence& tokens, const SentimentLexicon& lexicon,
                                 const NegationConfig& config = {}) {
  std::vector<int> flips(tokens.size(), 0);
  for (const auto& span : detect_negators(tokens, config))
    for (auto idx : span.scope_indices) ++flips[idx];
  PolarityCounts c;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    int w = lexicon.weight(detail::lower_ascii(tokens[i]));
    if (w == 0) continue;
    if (flips[i] % 2) w = -w;
    (w > 0 ? c.positive : c.negative) += 1;
  }
  return c;
}

inline SentimentScore score_from_counts(const PolarityCounts& c) {
  const double total = static_cast<double>(c.positive + c.negative);
  if (total == 0.0) return {0.0, 1.0, 0.0};
  const double neutral = 1.0 / (1.0 + total);
  return {(1.0 - neutral) * static_cast<double>(c.positive) / total, neutral,
          (1.0 - neutral) * static_cast<double>(c.negative) / total};
}

inline SentimentScore score_sentence(std::string_view text, const SentimentLexicon& lexicon,
                                     const NegationConfig& config = {}) {
  return score_from_counts(count_hits(tokenize(text), lexicon, config));
}

// Callable wrapper so the built-in scorer plugs in wherever a SentenceScorer is expected.
class LexiconScorer {
 public:
  explicit LexiconScorer(const SentimentLexicon& lexicon, NegationConfig config = {})
      : lexicon_(&lexicon), config_(config) {}

  SentimentScore operator()(std::string_view text) const { return score_sentence(text, *lexicon_, config_); }

 private:
  const SentimentLexicon* lexicon_;
  NegationConfig config_;
};

enum class ScalarMode { PositiveClass, NegativeClass, Signed };

inline std::string to_string(ScalarMode m) {
  switch (m) {
    case ScalarMode::PositiveClass: return "positive_class";
    case ScalarMode::NegativeClass: return "negative_class";
    case ScalarMode::Signed: return "signed";
  }
  return "?";
}

inline std::optional<ScalarMode> parse_scalar_mode(std::string_view s) {
  if (s == "positive_class") return ScalarMode::PositiveClass;
  if (s == "negative_class") return ScalarMode::NegativeClass;
  if (s == "signed") return ScalarMode::Signed;
  return std::nullopt;
}

inline double polarity_scalar(const SentimentScore& s, ScalarMode mode) {
  switch (mode) {
    case ScalarMode::PositiveClass: return s.positive;
    case ScalarMode::NegativeClass: return s.negative;
    case ScalarMode::Signed: return s.positive - s.negative;
  }
  return 0.0;
}

}  // namespace sentx
