#pragma once

// Review corpora and annotation logs: data model, JSONL/TSV ingestion,
// persistence, and application of human annotations.
//
// On disk a corpus is "<name>.jsonl" (one ReviewRecord per line) with the
// annotations in a sibling "<name>.ann.jsonl".

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sentx/error.hpp"
#include "sentx/lexicons.hpp"
#include "sentx/normalize.hpp"

namespace sentx {

struct ReviewRecord {
  std::string id;
  std::string source_text;
  int rating = 0;
  std::optional<std::string> mt_text;
  std::optional<std::string> reference_text;
  std::size_t segment_index = 0;
  std::string origin_id;

  bool operator==(const ReviewRecord&) const = default;
};

enum class AnnotationKind { PolarityTag, PostEdit };

inline std::string to_string(AnnotationKind k) { return k == AnnotationKind::PolarityTag ? "polarity_tag" : "post_edit"; }

struct AnnotationRecord {
  std::string item_id;
  AnnotationKind kind = AnnotationKind::PolarityTag;
  std::optional<std::size_t> token_index;
  std::optional<Polarity> polarity;
  std::optional<std::string> edited_target;
  std::string annotator;
  std::int64_t timestamp = 0;  // ms since epoch

  bool operator==(const AnnotationRecord&) const = default;
};

struct Corpus {
  std::vector<ReviewRecord> records;
  std::vector<AnnotationRecord> annotations;

  const ReviewRecord* find(std::string_view id) const {
    for (const auto& r : records)
      if (r.id == id) return &r;
    return nullptr;
  }

  bool operator==(const Corpus&) const = default;
};

enum class CorpusFormat { Jsonl, Tsv };

struct FieldError {
  std::string field;
  std::string message;
};

inline std::string describe(const std::vector<FieldError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += "; ";
    out += e.field + ": " + e.message;
  }
  return out;
}

inline std::vector<FieldError> validate(const ReviewRecord& r) {
  std::vector<FieldError> errs;
  if (r.id.empty()) errs.push_back({"id", "must be non-empty"});
  if (r.rating < 1 || r.rating > 5) errs.push_back({"rating", "rating out of range"});
  if (detail::trim(r.source_text).empty()) errs.push_back({"source_text", "must be non-empty"});
  if (r.origin_id.empty()) errs.push_back({"origin_id", "must be non-empty"});
  return errs;
}

inline std::vector<FieldError> validate(const AnnotationRecord& a) {
  std::vector<FieldError> errs;
  if (a.item_id.empty()) errs.push_back({"item_id", "must be non-empty"});
  if (a.timestamp <= 0) errs.push_back({"timestamp", "must be strictly positive"});
  if (a.kind == AnnotationKind::PolarityTag) {
    if (!a.token_index) errs.push_back({"token_index", "required for polarity_tag"});
    if (!a.polarity) errs.push_back({"polarity", "required for polarity_tag"});
    if (a.edited_target) errs.push_back({"edited_target", "not allowed for polarity_tag"});
  } else {
    if (!a.edited_target) errs.push_back({"edited_target", "required for post_edit"});
    if (a.token_index) errs.push_back({"token_index", "not allowed for post_edit"});
    if (a.polarity) errs.push_back({"polarity", "not allowed for post_edit"});
  }
  return errs;
}

// ---------------------------------------------------------------------------
// JSON mapping

inline nlohmann::ordered_json to_json(const ReviewRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["source_text"] = r.source_text;
  j["rating"] = r.rating;
  if (r.mt_text) j["mt_text"] = *r.mt_text;
  if (r.reference_text) j["reference_text"] = *r.reference_text;
  j["segment_index"] = r.segment_index;
  j["origin_id"] = r.origin_id;
  return j;
}

inline nlohmann::ordered_json to_json(const AnnotationRecord& a) {
  nlohmann::ordered_json j;
  j["item_id"] = a.item_id;
  j["kind"] = to_string(a.kind);
  if (a.token_index) j["token_index"] = *a.token_index;
  if (a.polarity) j["polarity"] = to_string(*a.polarity);
  if (a.edited_target) j["edited_target"] = *a.edited_target;
  j["annotator"] = a.annotator;
  j["timestamp"] = a.timestamp;
  return j;
}

namespace detail {

template <class Json>
std::optional<std::string> opt_string(const Json& j, const char* key, std::vector<FieldError>& errs) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    errs.push_back({key, "must be a string"});
    return std::nullopt;
  }
  return it->template get<std::string>();
}

template <class Json>
std::optional<std::int64_t> opt_int(const Json& j, const char* key, std::vector<FieldError>& errs) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) {
    errs.push_back({key, "must be an integer"});
    return std::nullopt;
  }
  return it->template get<std::int64_t>();
}

}  // namespace detail

// Shape and invariant errors are collected rather than thrown so callers can
// report them per field.
template <class Json>
ReviewRecord review_from_json(const Json& j, std::vector<FieldError>& errs) {
  ReviewRecord r;
  if (!j.is_object()) {
    errs.push_back({"", "expected a JSON object"});
    return r;
  }
  auto id = detail::opt_string(j, "id", errs);
  if (!id) errs.push_back({"id", "required"});
  r.id = id.value_or("");
  auto src = detail::opt_string(j, "source_text", errs);
  if (!src) errs.push_back({"source_text", "required"});
  r.source_text = src.value_or("");
  auto rating = detail::opt_int(j, "rating", errs);
  if (!rating) errs.push_back({"rating", "required"});
  r.rating = static_cast<int>(std::clamp<std::int64_t>(rating.value_or(0), -1, 1000));
  r.mt_text = detail::opt_string(j, "mt_text", errs);
  r.reference_text = detail::opt_string(j, "reference_text", errs);
  auto seg = detail::opt_int(j, "segment_index", errs);
  if (seg && *seg < 0) errs.push_back({"segment_index", "must be non-negative"});
  r.segment_index = static_cast<std::size_t>(std::max<std::int64_t>(0, seg.value_or(0)));
  r.origin_id = detail::opt_string(j, "origin_id", errs).value_or(r.id);
  if (errs.empty()) {
    auto more = validate(r);
    errs.insert(errs.end(), more.begin(), more.end());
  }
  return r;
}

template <class Json>
AnnotationRecord annotation_from_json(const Json& j, std::vector<FieldError>& errs) {
  AnnotationRecord a;
  if (!j.is_object()) {
    errs.push_back({"", "expected a JSON object"});
    return a;
  }
  auto item = detail::opt_string(j, "item_id", errs);
  if (!item) errs.push_back({"item_id", "required"});
  a.item_id = item.value_or("");
  auto kind = detail::opt_string(j, "kind", errs);
  if (!kind) {
    errs.push_back({"kind", "required"});
  } else if (*kind == "polarity_tag") {
    a.kind = AnnotationKind::PolarityTag;
  } else if (*kind == "post_edit") {
    a.kind = AnnotationKind::PostEdit;
  } else {
    errs.push_back({"kind", "must be polarity_tag or post_edit"});
  }
  if (auto idx = detail::opt_int(j, "token_index", errs)) {
    if (*idx < 0) errs.push_back({"token_index", "must be non-negative"});
    else a.token_index = static_cast<std::size_t>(*idx);
  }
  if (auto pol = detail::opt_string(j, "polarity", errs)) {
    a.polarity = parse_polarity(*pol);
    if (!a.polarity) errs.push_back({"polarity", "must be POS or NEG"});
  }
  a.edited_target = detail::opt_string(j, "edited_target", errs);
  a.annotator = detail::opt_string(j, "annotator", errs).value_or("");
  a.timestamp = detail::opt_int(j, "timestamp", errs).value_or(0);
  if (errs.empty()) {
    auto more = validate(a);
    errs.insert(errs.end(), more.begin(), more.end());
  }
  return a;
}

// ---------------------------------------------------------------------------
// Loading and writing

inline std::filesystem::path annotation_path(const std::filesystem::path& corpus_path) {
  auto p = corpus_path;
  p.replace_extension(".ann.jsonl");
  return p;
}

namespace detail {

inline void check_unique(const std::vector<ReviewRecord>& records, std::size_t lineno, const ReviewRecord& r,
                         std::set<std::string>& ids, std::set<std::pair<std::string, std::size_t>>& segs) {
  if (!ids.insert(r.id).second) throw ParseError(lineno, "duplicate id '" + r.id + "'");
  if (!segs.insert({r.origin_id, r.segment_index}).second)
    throw ParseError(lineno, "duplicate segment (" + r.origin_id + ", " + std::to_string(r.segment_index) + ")");
  (void)records;
}

inline std::vector<AnnotationRecord> load_annotation_file(const std::filesystem::path& path) {
  std::vector<AnnotationRecord> out;
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open annotation log");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
    }
    std::vector<FieldError> errs;
    auto a = annotation_from_json(j, errs);
    if (!errs.empty()) throw ParseError(lineno, describe(errs));
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace detail

inline std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
  return detail::load_annotation_file(path);
}

inline void check_annotations_resolve(const Corpus& c) {
  std::set<std::string> ids;
  for (const auto& r : c.records) ids.insert(r.id);
  for (const auto& a : c.annotations)
    if (!ids.count(a.item_id)) throw ValidationError("annotation refers to unknown item '" + a.item_id + "'");
}

inline Corpus load_reviews(const std::filesystem::path& path, CorpusFormat format = CorpusFormat::Jsonl) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open corpus");
  Corpus c;
  std::set<std::string> ids;
  std::set<std::pair<std::string, std::size_t>> segs;
  std::string line;
  std::size_t lineno = 0;

  if (format == CorpusFormat::Jsonl) {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (detail::trim(line).empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
      }
      std::vector<FieldError> errs;
      auto r = review_from_json(j, errs);
      if (!errs.empty()) throw ParseError(lineno, describe(errs));
      detail::check_unique(c.records, lineno, r, ids, segs);
      c.records.push_back(std::move(r));
    }
    auto ann = annotation_path(path);
    if (std::filesystem::exists(ann)) c.annotations = detail::load_annotation_file(ann);
  } else {
    // Header row required; columns are positional: id, rating, source, mt, reference.
    bool header = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!header) {
        auto cols = detail::split(line, '\t');
        if (cols.size() < 3 || detail::lower_ascii(cols[0]) != "id" || detail::lower_ascii(cols[1]) != "rating" ||
            detail::lower_ascii(cols[2]) != "source")
          throw ParseError(lineno, "missing header row (id, rating, source, mt, reference)");
        header = true;
        continue;
      }
      if (detail::trim(line).empty()) continue;
      auto cols = detail::split(line, '\t');
      if (cols.size() < 3 || cols.size() > 5) throw ParseError(lineno, "expected 3 to 5 tab-separated columns");
      ReviewRecord r;
      r.id = cols[0];
      try {
        std::size_t used = 0;
        r.rating = std::stoi(cols[1], &used);
        if (used != cols[1].size()) throw std::invalid_argument(cols[1]);
      } catch (const std::logic_error&) {
        throw ParseError(lineno, "rating is not an integer");
      }
      r.source_text = cols[2];
      if (cols.size() > 3 && !cols[3].empty()) r.mt_text = cols[3];
      if (cols.size() > 4 && !cols[4].empty()) r.reference_text = cols[4];
      r.origin_id = r.id;
      if (auto errs = validate(r); !errs.empty()) throw ParseError(lineno, describe(errs));
      detail::check_unique(c.records, lineno, r, ids, segs);
      c.records.push_back(std::move(r));
    }
  }
  check_annotations_resolve(c);
  return c;
}

inline void write_annotations(const std::vector<AnnotationRecord>& annotations, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  for (const auto& a : annotations) out << to_json(a).dump(-1, ' ', false) << '\n';
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

inline void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    for (const auto& r : corpus.records) out << to_json(r).dump(-1, ' ', false) << '\n';
    out.flush();
    if (!out) throw IoError(path.string(), "write failed");
  }
  write_annotations(corpus.annotations, annotation_path(path));
}

// ---------------------------------------------------------------------------
// Annotation application

/// Materializes annotations into a new corpus.
///
/// The latest post_edit per item (ties: later in the log) becomes the
/// reference_text. Polarity tags address tokenize(source_text); the latest
/// tag per (item, token) is fused into the token, replacing any inline tag.
inline Corpus apply_annotations(const Corpus& corpus) {
  Corpus out = corpus;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < out.records.size(); ++i) index[out.records[i].id] = i;

  struct Latest {
    std::int64_t ts;
    std::size_t order;
  };
  auto newer = [](const Latest& a, const Latest& b) { return a.ts > b.ts || (a.ts == b.ts && a.order > b.order); };

  std::map<std::string, std::pair<Latest, std::string>> edits;
  std::map<std::string, std::map<std::size_t, std::pair<Latest, Polarity>>> tags;

  for (std::size_t k = 0; k < corpus.annotations.size(); ++k) {
    const auto& a = corpus.annotations[k];
    if (!index.count(a.item_id)) throw ValidationError("annotation refers to unknown item '" + a.item_id + "'");
    const Latest stamp{a.timestamp, k};
    if (a.kind == AnnotationKind::PostEdit) {
      auto it = edits.find(a.item_id);
      if (it == edits.end() || newer(stamp, it->second.first)) edits[a.item_id] = {stamp, a.edited_target.value_or("")};
    } else {
      auto& slot = tags[a.item_id];
      const std::size_t idx = a.token_index.value_or(0);
      auto it = slot.find(idx);
      if (it == slot.end() || newer(stamp, it->second.first)) slot[idx] = {stamp, a.polarity.value_or(Polarity::Pos)};
    }
  }

  for (const auto& [id, edit] : edits) out.records[index[id]].reference_text = edit.second;

  for (const auto& [id, by_token] : tags) {
    auto& rec = out.records[index[id]];
    auto untagged = untag(tokenize(rec.source_text));
    std::map<std::size_t, Polarity> merged(untagged.tags.begin(), untagged.tags.end());
    for (const auto& [idx, v] : by_token) {
      if (idx >= untagged.tokens.size())
        throw ValidationError("item '" + id + "': polarity_tag token_index " + std::to_string(idx) +
                              " out of bounds (" + std::to_string(untagged.tokens.size()) + " tokens)");
      // A tag fused onto a punctuation token would re-tokenize as two tokens.
      if (is_punctuation_token(untagged.tokens[idx]))
        throw ValidationError("item '" + id + "': polarity_tag token_index " + std::to_string(idx) +
                              " is a punctuation token");
      merged[idx] = v.second;
    }
    TokenSequence toks = std::move(untagged.tokens);
    for (const auto& [idx, pol] : merged) toks[idx] = tagged_form(toks[idx], pol);
    rec.source_text = join(toks);
  }
  return out;
}

}  // namespace sentx
