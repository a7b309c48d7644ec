#pragma once

// Contronym, phrase (idiom / dialect / diacritic-ambiguous) and English
// sentiment lexica, plus the polarity tag format.
//
// A polarity tag is the ASCII suffix "__POS" or "__NEG" fused to a token.
// Whitespace tokenizers downstream therefore see "w__POS" and "w__NEG" as two
// distinct vocabulary items.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "sentx/error.hpp"
#include "sentx/normalize.hpp"

namespace sentx {

enum class Polarity { Pos, Neg };

inline constexpr std::string_view kPosSuffix = "__POS";
inline constexpr std::string_view kNegSuffix = "__NEG";

inline std::string to_string(Polarity p) { return p == Polarity::Pos ? "POS" : "NEG"; }

inline std::optional<Polarity> parse_polarity(std::string_view s) {
  if (s == "POS") return Polarity::Pos;
  if (s == "NEG") return Polarity::Neg;
  return std::nullopt;
}

inline Polarity flip(Polarity p) { return p == Polarity::Pos ? Polarity::Neg : Polarity::Pos; }

struct SplitToken {
  std::string base;
  std::optional<Polarity> tag;
};

inline SplitToken split_tag(std::string_view token) {
  auto ends_with = [&](std::string_view suffix) {
    return token.size() > suffix.size() && token.substr(token.size() - suffix.size()) == suffix;
  };
  if (ends_with(kPosSuffix)) return {std::string(token.substr(0, token.size() - kPosSuffix.size())), Polarity::Pos};
  if (ends_with(kNegSuffix)) return {std::string(token.substr(0, token.size() - kNegSuffix.size())), Polarity::Neg};
  return {std::string(token), std::nullopt};
}

inline bool is_tagged(std::string_view token) { return split_tag(token).tag.has_value(); }

inline std::string tagged_form(std::string_view token, Polarity p) {
  std::string out(token);
  out += p == Polarity::Pos ? kPosSuffix : kNegSuffix;
  return out;
}

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Calls fn(lineno, columns) for every non-blank, non-comment TSV row.
template <class Fn>
void for_each_tsv_row(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open lexicon");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    fn(lineno, split(line, '\t'));
  }
}

inline std::set<std::string> split_set(std::string_view field, bool lowercase) {
  std::set<std::string> out;
  for (auto& part : split(field, '|')) {
    auto t = trim(part);
    if (t.empty()) continue;
    out.insert(lowercase ? lower_ascii(t) : t);
  }
  return out;
}

}  // namespace detail

struct ContronymEntry {
  std::string lemma;
  std::set<std::string> surface_forms;  // includes the lemma
  std::set<std::string> positive_glosses;
  std::set<std::string> negative_glosses;
  std::string notes;

  bool operator==(const ContronymEntry&) const = default;
};

class ContronymLexicon {
 public:
  void add(ContronymEntry entry) {
    entry.lemma = preprocess(entry.lemma);
    if (entry.lemma.empty()) throw ValidationError("contronym with empty lemma");
    if (by_lemma_.count(entry.lemma)) throw ValidationError("duplicate contronym lemma '" + entry.lemma + "'");
    std::set<std::string> forms{entry.lemma};
    for (const auto& f : entry.surface_forms) forms.insert(preprocess(f));
    forms.erase("");
    entry.surface_forms = std::move(forms);
    for (const auto& g : entry.positive_glosses) {
      if (entry.negative_glosses.count(g))
        throw ValidationError("contronym '" + entry.lemma + "': gloss '" + g + "' is both positive and negative");
    }
    if (entry.positive_glosses.empty() || entry.negative_glosses.empty())
      throw ValidationError("contronym '" + entry.lemma + "' needs at least one gloss per polarity");
    for (const auto& f : entry.surface_forms) {
      if (by_surface_.count(f))
        throw ValidationError("surface form '" + f + "' already belongs to '" + entries_[by_surface_.at(f)].lemma + "'");
    }
    const std::size_t idx = entries_.size();
    for (const auto& f : entry.surface_forms) by_surface_[f] = idx;
    by_lemma_[entry.lemma] = idx;
    entries_.push_back(std::move(entry));
  }

  const ContronymEntry* by_surface(std::string_view form) const {
    auto it = by_surface_.find(std::string(form));
    return it == by_surface_.end() ? nullptr : &entries_[it->second];
  }

  const ContronymEntry* by_lemma(std::string_view lemma) const {
    auto it = by_lemma_.find(std::string(lemma));
    return it == by_lemma_.end() ? nullptr : &entries_[it->second];
  }

  const std::vector<ContronymEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<ContronymEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_surface_;
  std::unordered_map<std::string, std::size_t> by_lemma_;
};

enum class PhraseKind { Idiom, DialectExpression, DiacriticAmbiguous };
enum class PhrasePolarity { Pos, Neg, Neutral };

inline std::string to_string(PhraseKind k) {
  switch (k) {
    case PhraseKind::Idiom: return "idiom";
    case PhraseKind::DialectExpression: return "dialect_expression";
    case PhraseKind::DiacriticAmbiguous: return "diacritic_ambiguous";
  }
  return "?";
}

inline std::optional<PhraseKind> parse_phrase_kind(std::string_view s) {
  if (s == "idiom") return PhraseKind::Idiom;
  if (s == "dialect_expression") return PhraseKind::DialectExpression;
  if (s == "diacritic_ambiguous") return PhraseKind::DiacriticAmbiguous;
  return std::nullopt;
}

struct PhraseEntry {
  TokenSequence pattern;
  PhraseKind kind = PhraseKind::Idiom;
  std::string gloss;
  PhrasePolarity polarity = PhrasePolarity::Neutral;
};

class PhraseLexicon {
 public:
  void add(PhraseEntry entry) {
    entry.pattern = tokenize(preprocess(join(entry.pattern)));
    if (entry.pattern.empty()) throw ValidationError("phrase with empty pattern");
    const std::string key = join(entry.pattern);
    if (!keys_.insert(key).second) throw ValidationError("duplicate phrase '" + key + "'");
    entries_.push_back(std::move(entry));
    max_len_ = std::max(max_len_, entries_.back().pattern.size());
  }

  const std::vector<PhraseEntry>& entries() const { return entries_; }
  std::size_t max_length() const { return max_len_; }

 private:
  std::vector<PhraseEntry> entries_;
  std::set<std::string> keys_;
  std::size_t max_len_ = 0;
};

// English token -> +1 / -1.
class SentimentLexicon {
 public:
  void add(std::string token, int weight) {
    token = detail::lower_ascii(detail::trim(token));
    if (token.empty()) throw ValidationError("empty sentiment token");
    if (weight != 1 && weight != -1) throw ValidationError("sentiment weight for '" + token + "' must be +1 or -1");
    if (!entries_.emplace(token, weight).second) throw ValidationError("duplicate sentiment token '" + token + "'");
  }

  int weight(std::string_view token) const {
    auto it = entries_.find(std::string(token));
    return it == entries_.end() ? 0 : it->second;
  }

  bool contains(std::string_view token) const { return entries_.count(std::string(token)) > 0; }
  const std::map<std::string, int>& entries() const { return entries_; }

 private:
  std::map<std::string, int> entries_;
};

using WordList = std::set<std::string>;

inline ContronymLexicon load_contronyms(const std::string& path) {
  ContronymLexicon lex;
  detail::for_each_tsv_row(path, [&](std::size_t lineno, const std::vector<std::string>& cols) {
    if (cols.size() < 4 || cols.size() > 5)
      throw ParseError(lineno, "contronym row needs 4 or 5 tab-separated columns, got " + std::to_string(cols.size()));
    ContronymEntry e;
    e.lemma = detail::trim(cols[0]);
    e.surface_forms = detail::split_set(cols[1], false);
    e.positive_glosses = detail::split_set(cols[2], true);
    e.negative_glosses = detail::split_set(cols[3], true);
    if (cols.size() == 5) e.notes = detail::trim(cols[4]);
    try {
      lex.add(std::move(e));
    } catch (const ValidationError& err) {
      throw ParseError(lineno, err.what());
    }
  });
  return lex;
}

inline PhrasePolarity parse_phrase_polarity(std::string_view s, std::size_t lineno) {
  if (s == "POS") return PhrasePolarity::Pos;
  if (s == "NEG") return PhrasePolarity::Neg;
  if (s == "NEUTRAL") return PhrasePolarity::Neutral;
  throw ParseError(lineno, "polarity must be POS, NEG or NEUTRAL");
}

inline PhraseLexicon load_phrases(const std::string& path) {
  PhraseLexicon lex;
  detail::for_each_tsv_row(path, [&](std::size_t lineno, const std::vector<std::string>& cols) {
    if (cols.size() != 4) throw ParseError(lineno, "phrase row needs 4 tab-separated columns");
    auto kind = parse_phrase_kind(detail::trim(cols[0]));
    if (!kind) throw ParseError(lineno, "unknown phrase kind '" + cols[0] + "'");
    PhraseEntry e;
    e.kind = *kind;
    e.pattern = tokenize(cols[1]);
    e.gloss = detail::trim(cols[2]);
    e.polarity = parse_phrase_polarity(detail::trim(cols[3]), lineno);
    try {
      lex.add(std::move(e));
    } catch (const ValidationError& err) {
      throw ParseError(lineno, err.what());
    }
  });
  return lex;
}

inline SentimentLexicon load_sentiment(const std::string& path) {
  SentimentLexicon lex;
  detail::for_each_tsv_row(path, [&](std::size_t lineno, const std::vector<std::string>& cols) {
    if (cols.size() != 2) throw ParseError(lineno, "sentiment row needs token and weight");
    const auto w = detail::trim(cols[1]);
    int weight = 0;
    if (w == "+1" || w == "1") weight = 1;
    else if (w == "-1") weight = -1;
    else throw ParseError(lineno, "weight must be +1 or -1");
    try {
      lex.add(cols[0], weight);
    } catch (const ValidationError& err) {
      throw ParseError(lineno, err.what());
    }
  });
  return lex;
}

// One entry per line; Arabic entries are normalized, others lowercased.
inline WordList load_word_list(const std::string& path) {
  WordList out;
  detail::for_each_tsv_row(path, [&](std::size_t lineno, const std::vector<std::string>& cols) {
    if (cols.size() != 1) throw ParseError(lineno, "word list rows have a single column");
    auto w = preprocess(detail::lower_ascii(detail::trim(cols[0])));
    if (!out.insert(w).second) throw ParseError(lineno, "duplicate entry '" + w + "'");
  });
  return out;
}

enum class LexiconKind { Contronym, Phrase, Sentiment, WordList };

using AnyLexicon = std::variant<ContronymLexicon, PhraseLexicon, SentimentLexicon, WordList>;

inline AnyLexicon load_lexicon(const std::string& path, LexiconKind kind) {
  switch (kind) {
    case LexiconKind::Contronym: return load_contronyms(path);
    case LexiconKind::Phrase: return load_phrases(path);
    case LexiconKind::Sentiment: return load_sentiment(path);
    case LexiconKind::WordList: return load_word_list(path);
  }
  throw ValidationError("unknown lexicon kind");
}

/// Every lexicon the pipeline consults, loaded from one directory.
struct Lexica {
  ContronymLexicon contronyms;
  PhraseLexicon phrases;
  SentimentLexicon sentiment;
  WordList function_words;  // English
  WordList verb_stems;      // dialect verb stems for circumfix negation

  static Lexica load_dir(const std::filesystem::path& dir) {
    Lexica l;
    l.contronyms = load_contronyms((dir / "contronyms.tsv").string());
    l.phrases = load_phrases((dir / "phrases.tsv").string());
    l.sentiment = load_sentiment((dir / "sentiment_en.tsv").string());
    l.function_words = load_word_list((dir / "function_words_en.txt").string());
    l.verb_stems = load_word_list((dir / "verb_stems_da.txt").string());
    return l;
  }
};

struct ContronymOccurrence {
  std::size_t index = 0;
  std::string lemma;
  std::optional<Polarity> tag;

  bool operator==(const ContronymOccurrence&) const = default;
};

inline std::vector<ContronymOccurrence> find_contronyms(const TokenSequence& tokens, const ContronymLexicon& lex) {
  std::vector<ContronymOccurrence> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto [base, tag] = split_tag(tokens[i]);
    if (const auto* e = lex.by_surface(base)) out.push_back({i, e->lemma, tag});
  }
  return out;
}

inline TokenSequence tag(const TokenSequence& tokens, std::size_t index, Polarity p, const ContronymLexicon& lex) {
  if (index >= tokens.size())
    throw ValidationError("tag: index " + std::to_string(index) + " out of range for " +
                          std::to_string(tokens.size()) + " tokens");
  if (is_tagged(tokens[index])) throw ValidationError("tag: token " + std::to_string(index) + " already tagged");
  if (!lex.by_surface(tokens[index]))
    throw ValidationError("tag: token '" + tokens[index] + "' is not a contronym surface form");
  TokenSequence out = tokens;
  out[index] = tagged_form(tokens[index], p);
  return out;
}

struct UntagResult {
  TokenSequence tokens;
  std::vector<std::pair<std::size_t, Polarity>> tags;

  bool operator==(const UntagResult&) const = default;
};

inline UntagResult untag(const TokenSequence& tokens) {
  UntagResult r;
  r.tokens.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto [base, t] = split_tag(tokens[i]);
    if (t) r.tags.emplace_back(i, *t);
    r.tokens.push_back(std::move(base));
  }
  return r;
}

struct PhraseMatch {
  std::size_t start = 0;
  std::size_t length = 0;
  const PhraseEntry* entry = nullptr;
};

// Longest match first, left to right, non-overlapping. Tags are ignored.
inline std::vector<PhraseMatch> match_phrases(const TokenSequence& tokens, const PhraseLexicon& lex) {
  std::vector<std::string> bases;
  bases.reserve(tokens.size());
  for (const auto& t : tokens) bases.push_back(split_tag(t).base);

  std::vector<PhraseMatch> out;
  std::size_t i = 0;
  while (i < bases.size()) {
    const PhraseEntry* best = nullptr;
    for (const auto& e : lex.entries()) {
      const auto n = e.pattern.size();
      if (i + n > bases.size() || (best && n <= best->pattern.size())) continue;
      if (std::equal(e.pattern.begin(), e.pattern.end(), bases.begin() + static_cast<std::ptrdiff_t>(i))) best = &e;
    }
    if (best) {
      out.push_back({i, best->pattern.size(), best});
      i += best->pattern.size();
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace sentx
