#pragma once

// Annotation API over a flagged corpus: serves the discrepancy queue and
// accepts polarity tags and post-edits into an append-only log.
//
//   GET  /api/queue?category=&page=&page_size=
//   GET  /api/items/{id}
//   POST /api/items/{id}/annotations
//   GET  /api/report
//
// AnnotationService holds the logic and is usable without a socket;
// make_http_server() binds it to cpp-httplib.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "sentx/corpus.hpp"
#include "sentx/detect.hpp"
#include "sentx/lexicons.hpp"
#include "sentx/metrics.hpp"
#include "sentx/normalize.hpp"
#include "sentx/sentiment.hpp"

namespace sentx {

struct ApiResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

struct ServiceOptions {
  std::filesystem::path log_path;  // durable annotation log (JSONL, append-only)
  Thresholds thresholds;
  EvalOptions eval;
  std::size_t default_page_size = 20;
  std::size_t max_page_size = 500;
};

class AnnotationService {
 public:
  AnnotationService(Corpus corpus, std::shared_ptr<const Lexica> lexica, SentenceScorer scorer, ServiceOptions options)
      : lexica_(std::move(lexica)), scorer_(std::move(scorer)), options_(std::move(options)) {
    base_annotations_ = corpus.annotations;
    corpus.annotations.clear();
    corpus_ = std::move(corpus);
    for (std::size_t i = 0; i < corpus_.records.size(); ++i) by_id_[corpus_.records[i].id] = i;

    if (!options_.log_path.empty() && std::filesystem::exists(options_.log_path)) {
      log_ = load_annotations(options_.log_path);
      for (const auto& a : log_) {
        if (!by_id_.count(a.item_id))
          throw ValidationError("annotation log refers to unknown item '" + a.item_id + "'");
        last_timestamp_ = std::max(last_timestamp_, a.timestamp);
      }
    }
    for (const auto& a : base_annotations_) last_timestamp_ = std::max(last_timestamp_, a.timestamp);

    Corpus flaggable;
    for (const auto& r : corpus_.records)
      if (r.mt_text) flaggable.records.push_back(r);
    flags_ = classify_flags(flag_discrepancies(flaggable, scorer_, options_.thresholds), corpus_, *lexica_);
    for (std::size_t i = 0; i < flags_.size(); ++i) flag_by_id_[flags_[i].item_id] = i;
  }

  const std::vector<DiscrepancyFlag>& flags() const { return flags_; }

  std::vector<AnnotationRecord> annotations() const {
    std::shared_lock lock(mutex_);
    auto all = base_annotations_;
    all.insert(all.end(), log_.begin(), log_.end());
    return all;
  }

  Corpus current_corpus() const {
    Corpus c = corpus_;
    c.annotations = annotations();
    return c;
  }

  ApiResponse get_queue(const std::optional<std::string>& category, const std::optional<std::string>& page,
                        const std::optional<std::string>& page_size) const {
    std::optional<ErrorCategory> filter;
    if (category && !category->empty()) {
      filter = parse_category(*category);
      if (!filter) return error(400, "invalid category '" + *category + "'");
    }
    auto p = parse_positive(page, 1);
    auto ps = parse_positive(page_size, options_.default_page_size);
    if (!p || !ps) return error(400, "page and page_size must be positive integers");
    const std::size_t size = std::min(*ps, options_.max_page_size);

    std::vector<const DiscrepancyFlag*> selected;
    for (const auto& f : flags_)
      if (!filter || f.primary_category == *filter) selected.push_back(&f);

    const auto anns = annotations();
    nlohmann::ordered_json items = nlohmann::ordered_json::array();
    const std::size_t begin = (*p - 1) * size;
    for (std::size_t i = begin; i < selected.size() && i < begin + size; ++i) items.push_back(queue_item(*selected[i], anns));

    ApiResponse r;
    r.body["items"] = std::move(items);
    r.body["page"] = *p;
    r.body["page_size"] = size;
    r.body["total"] = selected.size();
    return r;
  }

  ApiResponse get_item(const std::string& id) const {
    auto it = flag_by_id_.find(id);
    if (it == flag_by_id_.end()) return error(404, "unknown item '" + id + "'");
    return {200, queue_item(flags_[it->second], annotations())};
  }

  /// Validates and appends one annotation. The server assigns item_id and
  /// timestamp; timestamps are strictly increasing across the log.
  ApiResponse submit_annotation(const std::string& id, const nlohmann::json& body) {
    auto it = flag_by_id_.find(id);
    if (it == flag_by_id_.end()) return error(404, "unknown item '" + id + "'");
    if (!body.is_object()) return error(422, "body must be a JSON object");

    nlohmann::json candidate = body;
    if (candidate.contains("item_id") && candidate["item_id"] != id)
      return field_errors({{"item_id", "does not match the item in the URL"}});
    candidate["item_id"] = id;
    candidate["timestamp"] = 1;  // placeholder, replaced under the lock

    std::vector<FieldError> errs;
    AnnotationRecord rec = annotation_from_json(candidate, errs);
    if (!errs.empty()) return field_errors(errs);
    if (detail::trim(rec.annotator).empty()) return field_errors({{"annotator", "required"}});

    const auto& record = corpus_.records[by_id_.at(id)];
    if (rec.kind == AnnotationKind::PolarityTag) {
      const auto tokens = normalize_tokens(tokenize(record.source_text));
      bool ok = false;
      for (const auto& occ : find_contronyms(tokens, lexica_->contronyms)) ok = ok || occ.index == *rec.token_index;
      if (!ok) return field_errors({{"token_index", "index not a contronym occurrence"}});
    } else if (detail::trim(*rec.edited_target).empty()) {
      return field_errors({{"edited_target", "must be non-empty"}});
    }

    {
      std::unique_lock lock(mutex_);
      const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
      rec.timestamp = std::max<std::int64_t>(now, last_timestamp_ + 1);
      if (!options_.log_path.empty()) {
        std::ofstream out(options_.log_path, std::ios::binary | std::ios::app);
        if (!out) return error(500, "cannot open annotation log");
        out << to_json(rec).dump(-1, ' ', false) << '\n';
        out.flush();
        if (!out) return error(500, "annotation log write failed");
      }
      last_timestamp_ = rec.timestamp;
      log_.push_back(rec);
      report_cache_.reset();
    }
    return {201, to_json(rec)};
  }

  /// Metrics over records that carry both MT output and a reference, with
  /// every annotation applied, plus the typology histogram of the queue.
  ApiResponse get_report() const {
    {
      std::shared_lock lock(mutex_);
      if (report_cache_) return {200, *report_cache_};
    }
    Corpus c = current_corpus();
    Corpus applied = apply_annotations(c);
    Corpus scored;
    std::set<std::string> keep;
    for (const auto& r : applied.records)
      if (r.mt_text && r.reference_text) keep.insert(r.id);
    for (const auto& r : c.records)
      if (keep.count(r.id)) scored.records.push_back(r);
    for (const auto& a : c.annotations)
      if (keep.count(a.item_id)) scored.annotations.push_back(a);

    nlohmann::ordered_json body;
    if (scored.records.empty()) body["report"] = nullptr;
    else body["report"] = to_json(evaluate(scored, lexica_->contronyms, scorer_, options_.eval));
    body["histogram"] = nlohmann::ordered_json::array();
    for (const auto& row : frequency_report(flags_))
      body["histogram"].push_back({{"category", to_string(row.category)}, {"count", row.count}, {"proportion", row.proportion}});

    std::unique_lock lock(mutex_);
    report_cache_ = body;
    return {200, body};
  }

 private:
  static ApiResponse error(int status, const std::string& message) {
    ApiResponse r;
    r.status = status;
    r.body["error"] = message;
    return r;
  }

  static ApiResponse field_errors(const std::vector<FieldError>& errs) {
    ApiResponse r;
    r.status = 422;
    r.body["error"] = describe(errs);
    r.body["fields"] = nlohmann::ordered_json::object();
    for (const auto& e : errs) r.body["fields"][e.field.empty() ? "body" : e.field] = e.message;
    return r;
  }

  static std::optional<std::size_t> parse_positive(const std::optional<std::string>& s, std::size_t fallback) {
    if (!s || s->empty()) return fallback;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(*s, &used);
      if (used != s->size() || v < 1) return std::nullopt;
      return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
      return std::nullopt;
    }
  }

  nlohmann::ordered_json queue_item(const DiscrepancyFlag& flag, const std::vector<AnnotationRecord>& anns) const {
    const auto& rec = corpus_.records[by_id_.at(flag.item_id)];
    const auto tokens = normalize_tokens(tokenize(rec.source_text));
    nlohmann::ordered_json j;
    j["item_id"] = flag.item_id;
    j["flag"] = to_json(flag);
    j["rating"] = rec.rating;
    j["source_text"] = rec.source_text;
    j["source_tokens"] = tokens;
    j["mt_text"] = rec.mt_text.value_or("");
    j["reference_text"] = rec.reference_text ? nlohmann::ordered_json(*rec.reference_text) : nlohmann::ordered_json(nullptr);
    j["contronym_occurrences"] = nlohmann::ordered_json::array();
    for (const auto& occ : find_contronyms(tokens, lexica_->contronyms)) {
      const auto* e = lexica_->contronyms.by_lemma(occ.lemma);
      j["contronym_occurrences"].push_back({{"token_index", occ.index},
                                            {"lemma", occ.lemma},
                                            {"positive_glosses", e->positive_glosses},
                                            {"negative_glosses", e->negative_glosses}});
    }
    j["current_annotations"] = nlohmann::ordered_json::array();
    for (const auto& a : anns)
      if (a.item_id == flag.item_id) j["current_annotations"].push_back(to_json(a));
    return j;
  }

  Corpus corpus_;
  std::shared_ptr<const Lexica> lexica_;
  SentenceScorer scorer_;
  ServiceOptions options_;
  std::map<std::string, std::size_t> by_id_;
  std::vector<DiscrepancyFlag> flags_;
  std::map<std::string, std::size_t> flag_by_id_;

  mutable std::shared_mutex mutex_;
  std::vector<AnnotationRecord> base_annotations_;
  std::vector<AnnotationRecord> log_;
  std::int64_t last_timestamp_ = 0;
  mutable std::optional<nlohmann::ordered_json> report_cache_;
};

/// Binds the service's endpoints (and optional static UI files) to an HTTP server.
inline std::unique_ptr<httplib::Server> make_http_server(AnnotationService& service,
                                                         const std::filesystem::path& static_dir = {}) {
  auto server = std::make_unique<httplib::Server>();
  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(-1, ' ', false), "application/json; charset=utf-8");
  };
  auto param = [](const httplib::Request& req, const char* key) -> std::optional<std::string> {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
  };

  server->Get("/api/queue", [&service, send, param](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get_queue(param(req, "category"), param(req, "page"), param(req, "page_size")));
  });
  server->Get(R"(/api/items/([^/]+))", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get_item(req.matches[1]));
  });
  server->Post(R"(/api/items/([^/]+)/annotations)",
               [&service, send](const httplib::Request& req, httplib::Response& res) {
                 nlohmann::json body;
                 try {
                   body = nlohmann::json::parse(req.body);
                 } catch (const nlohmann::json::parse_error&) {
                   send(res, {422, {{"error", "body is not valid JSON"}}});
                   return;
                 }
                 send(res, service.submit_annotation(req.matches[1], body));
               });
  server->Get("/api/report", [&service, send](const httplib::Request&, httplib::Response& res) {
    try {
      send(res, service.get_report());
    } catch (const std::exception& e) {
      send(res, {500, {{"error", e.what()}}});
    }
  });
  if (!static_dir.empty()) server->set_mount_point("/", static_dir.string());
  return server;
}

}  // namespace sentx
