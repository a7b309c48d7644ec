#pragma once

// Corpus BLEU, word-level contronym polarity precision/recall/F1, and the
// sentence-level sentiment cost (mean squared scorer distance to the
// reference).

#include <array>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sentx/corpus.hpp"
#include "sentx/detect.hpp"
#include "sentx/error.hpp"
#include "sentx/lexicons.hpp"
#include "sentx/normalize.hpp"
#include "sentx/sentiment.hpp"

namespace sentx {

// ---------------------------------------------------------------------------
// BLEU

/// Metric-internal tokenization: lowercase, then the mteval-v13a rules
/// (HTML entities for quote, ampersand and angle brackets decoded; symbols
/// split off; '.' and ',' split unless between digits; '-' split after a
/// digit). Apostrophes and plain hyphens stay attached.
inline std::vector<std::string> bleu_tokenize(std::string_view raw) {
  std::string text = detail::lower_ascii(raw);
  if (text.find('&') != std::string::npos) {
    for (auto [from, to] : {std::pair{"&quot;", "\""}, {"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"}}) {
      const std::string f(from);
      for (std::size_t pos = 0; (pos = text.find(f, pos)) != std::string::npos; pos += std::strlen(to))
        text.replace(pos, f.size(), to);
    }
  }
  // Padded so a trailing '.' or ',' sees a non-digit on both sides.
  std::string s = " ";
  s.reserve(text.size() + 16);
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool symbol = (c >= '{' && c <= '~') || (c >= '[' && c <= '`') || (c >= ' ' && c <= '&') ||
                        (c >= '(' && c <= '+') || (c >= ':' && c <= '@') || c == '/';
    if (symbol) {
      s.push_back(' ');
      s.push_back(ch);
      s.push_back(' ');
    } else if (c == '\n' || c == '\t' || c == '\r') {
      s.push_back(' ');
    } else {
      s.push_back(ch);
    }
  }
  s.push_back(' ');
  static const std::regex before_period(R"(([^0-9])([\.,]))");
  static const std::regex after_period(R"(([\.,])([^0-9]))");
  static const std::regex digit_dash(R"(([0-9])(-))");
  s = std::regex_replace(s, before_period, "$1 $2 ");
  s = std::regex_replace(s, after_period, " $1 $2");
  s = std::regex_replace(s, digit_dash, "$1 $2 ");

  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

struct BleuOptions {
  bool smooth = false;  // add-one on n > 1 precisions
};

struct BleuStats {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  void add(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
    hyp_len += hyp.size();
    ref_len += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      std::unordered_map<std::string, std::size_t> ref_counts;
      for (std::size_t i = 0; i + n <= ref.size(); ++i) ++ref_counts[ngram_key(ref, i, n)];
      std::unordered_map<std::string, std::size_t> hyp_counts;
      for (std::size_t i = 0; i + n <= hyp.size(); ++i) ++hyp_counts[ngram_key(hyp, i, n)];
      std::size_t clipped = 0;
      for (const auto& [g, cnt] : hyp_counts) {
        auto it = ref_counts.find(g);
        if (it != ref_counts.end()) clipped += std::min(cnt, it->second);
      }
      matches[n - 1] += clipped;
      totals[n - 1] += hyp.size() >= n ? hyp.size() - n + 1 : 0;
    }
  }

  double score(const BleuOptions& opt = {}) const {
    if (hyp_len == 0) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
      double m = static_cast<double>(matches[n]);
      double t = static_cast<double>(totals[n]);
      if (opt.smooth && n > 0) {
        m += 1.0;
        t += 1.0;
      }
      if (m == 0.0 || t == 0.0) return 0.0;
      log_sum += std::log(m / t);
    }
    const double bp = hyp_len < ref_len
                          ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len))
                          : 1.0;
    return 100.0 * bp * std::exp(log_sum / 4.0);
  }

 private:
  static std::string ngram_key(const std::vector<std::string>& toks, std::size_t start, std::size_t n) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) {
      if (k) key.push_back('\x1f');
      key += toks[start + k];
    }
    return key;
  }
};

inline double corpus_bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
                          const BleuOptions& opt = {}) {
  if (hypotheses.size() != references.size())
    throw ValidationError("corpus_bleu: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                          std::to_string(references.size()) + " references");
  if (hypotheses.empty()) throw ValidationError("corpus_bleu: empty corpus");
  BleuStats stats;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) stats.add(bleu_tokenize(hypotheses[i]), bleu_tokenize(references[i]));
  return stats.score(opt);
}

// ---------------------------------------------------------------------------
// Word-level polarity P/R/F1

enum class GlossPrediction { Pos, Neg, Unmatched };

struct WordItem {
  Polarity gold = Polarity::Pos;
  std::string target_text;
  ContronymEntry entry;
};

struct WordCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t unmatched = 0;

  bool operator==(const WordCounts&) const = default;
};

struct WordPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  WordCounts counts;
};

inline bool contains_gloss(const TokenSequence& target, const std::string& gloss) {
  const auto g = tokenize(detail::lower_ascii(gloss));
  if (g.empty() || g.size() > target.size()) return false;
  for (std::size_t i = 0; i + g.size() <= target.size(); ++i)
    if (std::equal(g.begin(), g.end(), target.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  return false;
}

inline GlossPrediction predict_polarity(std::string_view target_text, const ContronymEntry& entry) {
  const auto target = tokenize(detail::lower_ascii(target_text));
  bool pos = false;
  bool neg = false;
  for (const auto& g : entry.positive_glosses) pos = pos || contains_gloss(target, g);
  for (const auto& g : entry.negative_glosses) neg = neg || contains_gloss(target, g);
  if (pos == neg) return GlossPrediction::Unmatched;
  return pos ? GlossPrediction::Pos : GlossPrediction::Neg;
}

inline double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

/// Positive class is the POS sense. UNMATCHED counts against recall only.
inline WordPrf prf_from_counts(const WordCounts& c) {
  WordPrf out;
  out.counts = c;
  out.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  out.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

inline WordPrf word_polarity_prf(const std::vector<WordItem>& items) {
  WordCounts c;
  for (const auto& item : items) {
    const auto pred = predict_polarity(item.target_text, item.entry);
    if (pred == GlossPrediction::Unmatched) ++c.unmatched;
    if (item.gold == Polarity::Pos) {
      if (pred == GlossPrediction::Pos) ++c.tp;
      else ++c.fn;
    } else {
      if (pred == GlossPrediction::Pos) ++c.fp;
      else if (pred == GlossPrediction::Neg) ++c.tn;
    }
  }
  return prf_from_counts(c);
}

// ---------------------------------------------------------------------------
// Sentence-level sentiment cost

inline double sentiment_cost_scalars(const std::vector<double>& target_scalars, const std::vector<double>& reference_scalars) {
  if (target_scalars.size() != reference_scalars.size())
    throw ValidationError("sentiment_cost: length mismatch");
  if (target_scalars.empty()) throw ValidationError("sentiment_cost: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < target_scalars.size(); ++i) {
    const double d = target_scalars[i] - reference_scalars[i];
    sum += d * d;
  }
  return sum / static_cast<double>(target_scalars.size());
}

struct SentenceCost {
  double target_scalar = 0.0;
  double reference_scalar = 0.0;
  double cost = 0.0;
};

inline std::vector<SentenceCost> sentence_costs(const std::vector<std::string>& targets,
                                                const std::vector<std::string>& references,
                                                const SentenceScorer& scorer, ScalarMode mode) {
  if (targets.size() != references.size()) throw ValidationError("sentiment_cost: length mismatch");
  std::vector<SentenceCost> out;
  out.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    SentenceCost c;
    c.target_scalar = polarity_scalar(scorer(targets[i]), mode);
    c.reference_scalar = polarity_scalar(scorer(references[i]), mode);
    const double d = c.target_scalar - c.reference_scalar;
    c.cost = d * d;
    out.push_back(c);
  }
  return out;
}

inline double sentiment_cost(const std::vector<std::string>& targets, const std::vector<std::string>& references,
                             const SentenceScorer& scorer, ScalarMode mode) {
  if (targets.size() != references.size()) throw ValidationError("sentiment_cost: length mismatch");
  if (targets.empty()) throw ValidationError("sentiment_cost: empty input");
  std::vector<double> st, sr;
  st.reserve(targets.size());
  sr.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    st.push_back(polarity_scalar(scorer(targets[i]), mode));
    sr.push_back(polarity_scalar(scorer(references[i]), mode));
  }
  return sentiment_cost_scalars(st, sr);
}

// ---------------------------------------------------------------------------
// Whole-corpus evaluation

struct EvalReport {
  double bleu = 0.0;
  std::optional<WordPrf> word;  // absent when no gold-tagged contronym occurs
  double cost = 0.0;            // over all records
  std::optional<double> cost_positive;  // records rated in the positive band
  std::optional<double> cost_negative;  // records rated in the negative band
  std::string scalar_mode;
  std::size_t sentences = 0;
};

struct EvalOptions {
  // nullopt: positive_class on the positive subset, negative_class on the
  // negative subset, signed over the whole corpus.
  std::optional<ScalarMode> mode;
  Thresholds bands;
  BleuOptions bleu;
};

// Gold-tagged contronym occurrences paired with the record's MT output.
inline std::vector<WordItem> word_items(const Corpus& applied, const ContronymLexicon& lex,
                                        bool use_reference = false) {
  std::vector<WordItem> items;
  for (const auto& r : applied.records) {
    const auto tokens = normalize_tokens(tokenize(r.source_text));
    for (const auto& occ : find_contronyms(tokens, lex)) {
      if (!occ.tag) continue;
      const auto& target = use_reference ? r.reference_text : r.mt_text;
      items.push_back({*occ.tag, target.value_or(""), *lex.by_lemma(occ.lemma)});
    }
  }
  return items;
}

/// Applies the annotation log, then computes BLEU, word-level P/R/F1 and
/// sentiment costs over every record (each needs mt_text and reference_text).
inline EvalReport evaluate(const Corpus& corpus, const ContronymLexicon& lex, const SentenceScorer& scorer,
                           const EvalOptions& opt = {}) {
  const Corpus applied = apply_annotations(corpus);
  std::string missing;
  for (const auto& r : applied.records) {
    if (!r.mt_text || !r.reference_text) missing += (missing.empty() ? "" : ", ") + r.id;
  }
  if (!missing.empty()) throw ValidationError("records missing mt_text or reference_text: " + missing);

  EvalReport rep;
  rep.sentences = applied.records.size();
  if (applied.records.empty()) {
    rep.scalar_mode = opt.mode ? to_string(*opt.mode) : "positive_class|negative_class|signed";
    return rep;
  }

  std::vector<std::string> hyps, refs;
  for (const auto& r : applied.records) {
    hyps.push_back(*r.mt_text);
    refs.push_back(*r.reference_text);
  }
  rep.bleu = corpus_bleu(hyps, refs, opt.bleu);

  auto items = word_items(applied, lex);
  if (!items.empty()) rep.word = word_polarity_prf(items);

  auto subset_cost = [&](auto&& keep, ScalarMode mode) -> std::optional<double> {
    std::vector<std::string> t, s;
    for (const auto& r : applied.records) {
      if (!keep(r)) continue;
      t.push_back(*r.mt_text);
      s.push_back(*r.reference_text);
    }
    if (t.empty()) return std::nullopt;
    return sentiment_cost(t, s, scorer, mode);
  };
  const auto all_mode = opt.mode.value_or(ScalarMode::Signed);
  rep.cost = *subset_cost([](const ReviewRecord&) { return true; }, all_mode);
  rep.cost_positive = subset_cost([&](const ReviewRecord& r) { return r.rating >= opt.bands.positive_min_rating; },
                                  opt.mode.value_or(ScalarMode::PositiveClass));
  rep.cost_negative = subset_cost([&](const ReviewRecord& r) { return r.rating <= opt.bands.negative_max_rating; },
                                  opt.mode.value_or(ScalarMode::NegativeClass));
  rep.scalar_mode = opt.mode ? to_string(*opt.mode) : "positive_class|negative_class|signed";
  return rep;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["sentences"] = r.sentences;
  j["bleu"] = r.bleu;
  if (r.word) {
    j["word_precision"] = r.word->precision;
    j["word_recall"] = r.word->recall;
    j["word_f1"] = r.word->f1;
    j["counts"] = {{"tp", r.word->counts.tp},
                   {"fp", r.word->counts.fp},
                   {"fn", r.word->counts.fn},
                   {"tn", r.word->counts.tn},
                   {"unmatched", r.word->counts.unmatched}};
  } else {
    j["word_precision"] = nullptr;
    j["word_recall"] = nullptr;
    j["word_f1"] = nullptr;
    j["counts"] = nullptr;
  }
  j["cost"] = r.cost;
  j["cost_positive"] = r.cost_positive ? nlohmann::ordered_json(*r.cost_positive) : nlohmann::ordered_json(nullptr);
  j["cost_negative"] = r.cost_negative ? nlohmann::ordered_json(*r.cost_negative) : nlohmann::ordered_json(nullptr);
  j["scalar_mode"] = r.scalar_mode;
  return j;
}

inline void write_table(std::ostream& out, const EvalReport& r) {
  auto num = [](std::optional<double> v, int prec) {
    if (!v) return std::string("-");
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << *v;
    return s.str();
  };
  out << "sentences      " << r.sentences << '\n';
  out << "BLEU           " << num(r.bleu, 2) << '\n';
  out << "word P/R/F1    " << num(r.word ? std::optional(r.word->precision) : std::nullopt, 3) << " / "
      << num(r.word ? std::optional(r.word->recall) : std::nullopt, 3) << " / "
      << num(r.word ? std::optional(r.word->f1) : std::nullopt, 3) << '\n';
  if (r.word)
    out << "  TP/FP/FN/unm " << r.word->counts.tp << '/' << r.word->counts.fp << '/' << r.word->counts.fn << '/'
        << r.word->counts.unmatched << '\n';
  out << "cost (all)     " << num(r.cost, 4) << '\n';
  out << "cost positive  " << num(r.cost_positive, 4) << '\n';
  out << "cost negative  " << num(r.cost_negative, 4) << '\n';
  out << "scalar mode    " << r.scalar_mode << '\n';
}

}  // namespace sentx
