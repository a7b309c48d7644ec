#pragma once

// Rating-vs-sentiment discrepancy extraction and the rule-based error
// typology classifier.

#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentx/corpus.hpp"
#include "sentx/error.hpp"
#include "sentx/lexicons.hpp"
#include "sentx/normalize.hpp"
#include "sentx/sentiment.hpp"
#include "sentx/utf8.hpp"

namespace sentx {

enum class ErrorCategory { Contronym, Diacritic, Idiom, DialectExpression, Negation, Unknown };

inline constexpr std::array<ErrorCategory, 6> kAllCategories{
    ErrorCategory::Contronym, ErrorCategory::Diacritic, ErrorCategory::Idiom,
    ErrorCategory::DialectExpression, ErrorCategory::Negation, ErrorCategory::Unknown};

// Highest priority first.
inline constexpr std::array<ErrorCategory, 5> kCategoryPriority{
    ErrorCategory::Negation, ErrorCategory::Contronym, ErrorCategory::Idiom,
    ErrorCategory::Diacritic, ErrorCategory::DialectExpression};

inline std::string to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Contronym: return "Contronym";
    case ErrorCategory::Diacritic: return "Diacritic";
    case ErrorCategory::Idiom: return "Idiom";
    case ErrorCategory::DialectExpression: return "DialectExpression";
    case ErrorCategory::Negation: return "Negation";
    case ErrorCategory::Unknown: return "Unknown";
  }
  return "?";
}

inline std::optional<ErrorCategory> parse_category(std::string_view s) {
  for (auto c : kAllCategories)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

enum class Direction { WrongNegative, WrongPositive };

inline std::string to_string(Direction d) {
  return d == Direction::WrongNegative ? "wrong_negative" : "wrong_positive";
}

struct DiscrepancyFlag {
  std::string item_id;
  Direction direction = Direction::WrongNegative;
  int rating = 0;
  SentimentScore score;
  std::vector<ErrorCategory> categories;
  ErrorCategory primary_category = ErrorCategory::Unknown;

  bool operator==(const DiscrepancyFlag&) const = default;
};

struct Thresholds {
  int positive_min_rating = 4;
  int negative_max_rating = 2;
  double score_cutoff = 0.5;

  void validate() const {
    if (!(score_cutoff > 0.0 && score_cutoff < 1.0)) throw ValidationError("score cutoff must lie in (0, 1)");
    if (negative_max_rating < 1 || positive_min_rating > 5 || negative_max_rating >= positive_min_rating)
      throw ValidationError("rating bands must lie within 1-5 and not overlap");
  }
};

inline std::optional<Direction> discrepancy(int rating, const SentimentScore& s, const Thresholds& t = {}) {
  if (rating >= t.positive_min_rating && s.negative >= t.score_cutoff) return Direction::WrongNegative;
  if (rating <= t.negative_max_rating && s.positive >= t.score_cutoff) return Direction::WrongPositive;
  return std::nullopt;
}

/// Scores every record's MT output and flags rating/score mismatches.
/// Flags come back unclassified (no categories, primary Unknown) in corpus order.
inline std::vector<DiscrepancyFlag> flag_discrepancies(const Corpus& corpus, const SentenceScorer& scorer,
                                                       const Thresholds& t = {}) {
  for (const auto& r : corpus.records)
    if (!r.mt_text) throw ValidationError("record '" + r.id + "' has no mt_text");
  std::vector<DiscrepancyFlag> flags;
  for (const auto& r : corpus.records) {
    const auto score = scorer(*r.mt_text);
    if (auto dir = discrepancy(r.rating, score, t)) flags.push_back({r.id, *dir, r.rating, score, {}, ErrorCategory::Unknown});
  }
  return flags;
}

// ---------------------------------------------------------------------------
// Transliteration cue: a capitalized, non-dictionary target word whose
// consonant skeleton equals that of some source token (e.g. هايل -> "Hayel").

namespace detail {

inline std::string collapse_doubles(const std::string& s) {
  std::string out;
  for (char c : s)
    if (out.empty() || out.back() != c) out.push_back(c);
  return out;
}

inline std::string latin_skeleton(std::string_view word) {
  std::string w = lower_ascii(word);
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const char c = w[i];
    const char next = i + 1 < w.size() ? w[i + 1] : '\0';
    if (next == 'h' && (c == 's' || c == 'k' || c == 't' || c == 'd' || c == 'g')) {
      out.push_back(c);
      ++i;
      continue;
    }
    switch (c) {
      case 'a': case 'e': case 'i': case 'o': case 'u': case 'y': case 'w': break;
      case 'c': case 'q': out.push_back('k'); break;
      case 'j': out.push_back('g'); break;
      default: out.push_back(c);
    }
  }
  return collapse_doubles(out);
}

inline std::string arabic_skeleton(std::string_view word) {
  std::string out;
  for (char32_t cp : utf8::decode(word)) {
    switch (cp) {
      case U'ب': out.push_back('b'); break;
      case U'ت': case U'ث': case U'ط': out.push_back('t'); break;
      case U'ج': case U'غ': out.push_back('g'); break;
      case U'ح': case U'ه': out.push_back('h'); break;
      case U'خ': case U'ق': case U'ك': out.push_back('k'); break;
      case U'د': case U'ض': out.push_back('d'); break;
      case U'ذ': case U'ز': case U'ظ': out.push_back('z'); break;
      case U'ر': out.push_back('r'); break;
      case U'س': case U'ش': case U'ص': out.push_back('s'); break;
      case U'ف': out.push_back('f'); break;
      case U'ل': out.push_back('l'); break;
      case U'م': out.push_back('m'); break;
      case U'ن': out.push_back('n'); break;
      default: break;  // vowels, hamza, ain, marks
    }
  }
  return collapse_doubles(out);
}

inline bool looks_transliterated(const std::string& token, const Lexica& lex) {
  if (token.size() < 4) return false;
  if (!std::isupper(static_cast<unsigned char>(token[0]))) return false;
  for (std::size_t i = 1; i < token.size(); ++i)
    if (!std::islower(static_cast<unsigned char>(token[i]))) return false;
  const auto lower = lower_ascii(token);
  return !lex.sentiment.contains(lower) && !lex.function_words.count(lower);
}

}  // namespace detail

inline bool has_transliteration(const TokenSequence& source_tokens, std::string_view target_text, const Lexica& lex) {
  std::set<std::string> source_skeletons;
  for (const auto& t : source_tokens) {
    auto sk = detail::arabic_skeleton(split_tag(t).base);
    if (sk.size() >= 2) source_skeletons.insert(std::move(sk));
  }
  for (const auto& tok : tokenize(target_text)) {
    if (!detail::looks_transliterated(tok, lex)) continue;
    if (source_skeletons.count(detail::latin_skeleton(tok))) return true;
  }
  return false;
}

struct Classification {
  std::vector<ErrorCategory> categories;  // in priority order
  ErrorCategory primary = ErrorCategory::Unknown;

  bool operator==(const Classification&) const = default;
};

inline Classification classify_error(const DiscrepancyFlag& /*flag*/, const TokenSequence& source_tokens,
                                     std::string_view target_text, const Lexica& lex) {
  const TokenSequence tokens = normalize_tokens(source_tokens);
  std::set<ErrorCategory> hit;

  NegationConfig neg;
  neg.verb_stems = &lex.verb_stems;
  for (const auto& span : detect_negators(tokens, neg))
    if (span.is_dialect()) hit.insert(ErrorCategory::Negation);

  if (!find_contronyms(tokens, lex.contronyms).empty()) hit.insert(ErrorCategory::Contronym);

  for (const auto& m : match_phrases(tokens, lex.phrases)) {
    switch (m.entry->kind) {
      case PhraseKind::Idiom: hit.insert(ErrorCategory::Idiom); break;
      case PhraseKind::DiacriticAmbiguous: hit.insert(ErrorCategory::Diacritic); break;
      case PhraseKind::DialectExpression: hit.insert(ErrorCategory::DialectExpression); break;
    }
  }
  if (!hit.count(ErrorCategory::DialectExpression) && has_transliteration(tokens, target_text, lex))
    hit.insert(ErrorCategory::DialectExpression);

  Classification c;
  for (auto cat : kCategoryPriority)
    if (hit.count(cat)) c.categories.push_back(cat);
  if (c.categories.empty()) {
    c.categories.push_back(ErrorCategory::Unknown);
    c.primary = ErrorCategory::Unknown;
  } else {
    c.primary = c.categories.front();
  }
  return c;
}

// Classifies each flag against its record's (normalized) source and MT output.
inline std::vector<DiscrepancyFlag> classify_flags(std::vector<DiscrepancyFlag> flags, const Corpus& corpus,
                                                   const Lexica& lex) {
  std::map<std::string, const ReviewRecord*> by_id;
  for (const auto& r : corpus.records) by_id[r.id] = &r;
  for (auto& f : flags) {
    auto it = by_id.find(f.item_id);
    if (it == by_id.end()) throw ValidationError("flag refers to unknown item '" + f.item_id + "'");
    const auto& rec = *it->second;
    auto c = classify_error(f, tokenize(preprocess(rec.source_text)), rec.mt_text.value_or(""), lex);
    f.categories = std::move(c.categories);
    f.primary_category = c.primary;
  }
  return flags;
}

struct HistogramRow {
  ErrorCategory category = ErrorCategory::Unknown;
  std::size_t count = 0;
  double proportion = 0.0;

  bool operator==(const HistogramRow&) const = default;
};

using Histogram = std::vector<HistogramRow>;

// Counts primary categories; rows for absent categories are omitted.
inline Histogram frequency_report(const std::vector<DiscrepancyFlag>& flags) {
  std::map<ErrorCategory, std::size_t> counts;
  for (const auto& f : flags) ++counts[f.primary_category];
  Histogram h;
  for (auto c : kAllCategories) {
    auto it = counts.find(c);
    if (it == counts.end()) continue;
    h.push_back({c, it->second, static_cast<double>(it->second) / static_cast<double>(flags.size())});
  }
  return h;
}

inline void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "category,count,proportion\n";
  for (const auto& row : h) {
    std::ostringstream p;
    p.precision(6);
    p << std::fixed << row.proportion;
    out << to_string(row.category) << ',' << row.count << ',' << p.str() << '\n';
  }
}

// ---------------------------------------------------------------------------
// JSONL mapping for flags

inline nlohmann::ordered_json to_json(const SentimentScore& s) {
  nlohmann::ordered_json j;
  j["positive"] = s.positive;
  j["neutral"] = s.neutral;
  j["negative"] = s.negative;
  return j;
}

inline nlohmann::ordered_json to_json(const DiscrepancyFlag& f) {
  nlohmann::ordered_json j;
  j["item_id"] = f.item_id;
  j["direction"] = to_string(f.direction);
  j["rating"] = f.rating;
  j["score"] = to_json(f.score);
  j["categories"] = nlohmann::ordered_json::array();
  for (auto c : f.categories) j["categories"].push_back(to_string(c));
  j["primary_category"] = to_string(f.primary_category);
  return j;
}

inline DiscrepancyFlag flag_from_json(const nlohmann::json& j) {
  DiscrepancyFlag f;
  f.item_id = j.at("item_id").get<std::string>();
  const auto dir = j.at("direction").get<std::string>();
  if (dir == "wrong_negative") f.direction = Direction::WrongNegative;
  else if (dir == "wrong_positive") f.direction = Direction::WrongPositive;
  else throw ValidationError("unknown direction '" + dir + "'");
  f.rating = j.at("rating").get<int>();
  const auto& s = j.at("score");
  f.score = {s.at("positive").get<double>(), s.at("neutral").get<double>(), s.at("negative").get<double>()};
  for (const auto& c : j.at("categories")) {
    auto cat = parse_category(c.get<std::string>());
    if (!cat) throw ValidationError("unknown category '" + c.get<std::string>() + "'");
    f.categories.push_back(*cat);
  }
  auto primary = parse_category(j.at("primary_category").get<std::string>());
  if (!primary) throw ValidationError("unknown primary_category");
  f.primary_category = *primary;
  return f;
}

inline std::vector<DiscrepancyFlag> load_flags(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open flags");
  std::vector<DiscrepancyFlag> flags;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    try {
      flags.push_back(flag_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return flags;
}

inline void write_flags(const std::vector<DiscrepancyFlag>& flags, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  for (const auto& f : flags) out << to_json(f).dump(-1, ' ', false) << '\n';
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

}  // namespace sentx
