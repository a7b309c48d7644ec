// sentx: command-line driver for the review sentiment-preservation pipeline.
//
// Exit status: 0 success, 1 validation error, 2 I/O error, 64 usage error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sentx/corpus.hpp"
#include "sentx/detect.hpp"
#include "sentx/embed.hpp"
#include "sentx/error.hpp"
#include "sentx/external_scorer.hpp"
#include "sentx/lexicons.hpp"
#include "sentx/metrics.hpp"
#include "sentx/pipeline.hpp"
#include "sentx/sentiment.hpp"
#include "sentx/service.hpp"

#ifndef SENTX_DATA_DIR
#define SENTX_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace sentx;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

struct Options {
  PipelineConfig config;
  std::string format = "jsonl";
  std::string scorer = "builtin";
  std::string mode;
  std::string out;
  std::string flags;
  std::string annotations;
  std::string annotator = "cli";
  std::string costs;
  std::string text_out;
  std::string static_dir;
  std::string log;
  std::string host = "127.0.0.1";
  int port = 8077;
  bool interactive = false;
  bool smooth = false;
};

CorpusFormat parse_format(const std::string& s) {
  if (s == "jsonl") return CorpusFormat::Jsonl;
  if (s == "tsv") return CorpusFormat::Tsv;
  throw ValidationError("unknown corpus format '" + s + "' (expected jsonl or tsv)");
}

void finalize(Options& o) {
  if (o.scorer == "builtin") o.config.scorer = ScorerKind::Builtin;
  else if (o.scorer == "external") o.config.scorer = ScorerKind::External;
  else throw ValidationError("unknown scorer '" + o.scorer + "' (expected builtin or external)");
  if (!o.mode.empty()) {
    o.config.scalar_mode = parse_scalar_mode(o.mode);
    if (!o.config.scalar_mode) throw ValidationError("unknown scalar mode '" + o.mode + "'");
  }
  o.config.validate();
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string("missing required flag ") + flag);
}

Corpus load_input(const Options& o) {
  require(o.config.corpus.string(), "--corpus");
  return load_reviews(o.config.corpus, parse_format(o.format));
}

// Keeps the lexica alive for as long as the returned scorer.
struct ScorerBundle {
  std::shared_ptr<Lexica> lexica;
  SentenceScorer scorer;
};

ScorerBundle make_scorer(const Options& o) {
  ScorerBundle b;
  b.lexica = std::make_shared<Lexica>(Lexica::load_dir(o.config.data_dir));
  if (o.config.scorer == ScorerKind::External) {
    b.scorer = make_external_scorer(std::make_shared<const ExternalScorer>(ExternalScorerConfig::from_env()));
  } else {
    NegationConfig neg;
    neg.verb_stems = &b.lexica->verb_stems;
    b.scorer = LexiconScorer(b.lexica->sentiment, neg);
  }
  return b;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

std::string fixed(double v, int prec) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

// ---------------------------------------------------------------------------

int cmd_normalize(const Options& o) {
  require(o.out, "--out");
  const Corpus in = load_input(o);
  const Corpus out = normalize_corpus(in, o.config.max_len);
  write_corpus(out, o.out);
  std::cout << "normalize: " << in.records.size() << " records -> " << out.records.size() << " segments in " << o.out
            << '\n';
  return 0;
}

int cmd_score(const Options& o) {
  require(o.out, "--out");
  const Corpus c = load_input(o);
  const auto b = make_scorer(o);
  auto out = open_out(o.out);
  std::size_t n = 0;
  for (const auto& r : c.records) {
    if (!r.mt_text) throw ValidationError("record '" + r.id + "' has no mt_text");
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["score"] = to_json(b.scorer(*r.mt_text));
    out << j.dump(-1, ' ', false) << '\n';
    ++n;
  }
  close_out(out, o.out);
  std::cout << "score: " << n << " sentences scored -> " << o.out << '\n';
  return 0;
}

int cmd_flag(const Options& o) {
  require(o.out, "--out");
  const Corpus c = load_input(o);
  const auto b = make_scorer(o);
  const auto flags = flag_discrepancies(c, b.scorer, o.config.thresholds);
  write_flags(flags, o.out);
  std::cout << "flag: " << flags.size() << " of " << c.records.size() << " records flagged -> " << o.out << '\n';
  return 0;
}

int cmd_classify(const Options& o) {
  require(o.out, "--out");
  require(o.flags, "--flags");
  const Corpus c = load_input(o);
  const auto lex = Lexica::load_dir(o.config.data_dir);
  const auto flags = classify_flags(load_flags(o.flags), c, lex);
  write_flags(flags, o.out);
  std::size_t unknown = 0;
  for (const auto& f : flags) unknown += f.primary_category == ErrorCategory::Unknown;
  std::cout << "classify: " << flags.size() << " flags classified (" << unknown << " Unknown) -> " << o.out << '\n';
  return 0;
}

std::string join_set(const std::set<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::vector<AnnotationRecord> interactive_tags(const Corpus& c, const ContronymLexicon& lex, const std::string& annotator,
                                               std::int64_t last_ts) {
  std::vector<AnnotationRecord> added;
  std::cout << "answer p (POS), n (NEG), s (skip) or q (quit)\n";
  for (const auto& r : c.records) {
    const auto tokens = normalize_tokens(tokenize(r.source_text));
    for (const auto& occ : find_contronyms(tokens, lex)) {
      if (occ.tag) continue;
      const auto* e = lex.by_lemma(occ.lemma);
      std::cout << '\n' << r.id << " [" << r.rating << "] " << r.source_text << '\n';
      if (r.mt_text) std::cout << "  mt: " << *r.mt_text << '\n';
      std::cout << "  token " << occ.index << " '" << tokens[occ.index] << "'  POS: " << join_set(e->positive_glosses)
                << "  NEG: " << join_set(e->negative_glosses) << "\n> " << std::flush;
      std::string answer;
      if (!std::getline(std::cin, answer) || answer == "q") return added;
      if (answer != "p" && answer != "n") continue;
      AnnotationRecord a;
      a.item_id = r.id;
      a.kind = AnnotationKind::PolarityTag;
      a.token_index = occ.index;
      a.polarity = answer == "p" ? Polarity::Pos : Polarity::Neg;
      a.annotator = annotator;
      last_ts = std::max(now_ms(), last_ts + 1);
      a.timestamp = last_ts;
      added.push_back(std::move(a));
    }
  }
  return added;
}

int cmd_tag(const Options& o) {
  require(o.out, "--out");
  if (o.interactive == !o.annotations.empty())
    throw ValidationError("tag needs exactly one of --annotations or --interactive");
  Corpus c = load_input(o);
  const auto lex = Lexica::load_dir(o.config.data_dir);

  std::vector<AnnotationRecord> added;
  if (o.interactive) {
    std::int64_t last = 0;
    for (const auto& a : c.annotations) last = std::max(last, a.timestamp);
    added = interactive_tags(c, lex.contronyms, o.annotator, last);
  } else {
    added = load_annotations(o.annotations);
  }
  c.annotations.insert(c.annotations.end(), added.begin(), added.end());
  check_annotations_resolve(c);
  for (const auto& a : added) {
    if (a.kind != AnnotationKind::PolarityTag) continue;
    const auto tokens = normalize_tokens(tokenize(c.find(a.item_id)->source_text));
    bool ok = false;
    for (const auto& occ : find_contronyms(tokens, lex.contronyms)) ok = ok || occ.index == *a.token_index;
    if (!ok)
      throw ValidationError("item '" + a.item_id + "' token " + std::to_string(*a.token_index) +
                            " is not a contronym occurrence");
  }
  (void)apply_annotations(c);  // surfaces out-of-range indices before anything is written
  write_corpus(c, o.out);
  std::cout << "tag: " << added.size() << " annotations added (" << c.annotations.size() << " total) -> " << o.out
            << '\n';
  return 0;
}

int cmd_train_embed(const Options& o) {
  require(o.out, "--out");
  const Corpus c = apply_annotations(load_input(o));
  std::vector<TokenSequence> sentences;
  for (const auto& r : c.records) sentences.push_back(normalize_tokens(tokenize(r.source_text)));
  const auto model = embed::train(sentences, o.config.embed);
  embed::save_binary(model, o.out);
  if (!o.text_out.empty()) embed::save_text(model, o.text_out);
  std::cout << "train-embed: " << model.vocab().size() << " words x " << model.dimension() << " dims -> " << o.out
            << '\n';
  return 0;
}

EvalOptions eval_options(const Options& o) {
  EvalOptions e;
  e.mode = o.config.scalar_mode;
  e.bands = o.config.thresholds;
  e.bleu.smooth = o.smooth;
  return e;
}

int cmd_evaluate(const Options& o) {
  require(o.out, "--out");
  const Corpus c = load_input(o);
  const auto b = make_scorer(o);
  const auto opt = eval_options(o);
  const auto report = evaluate(c, b.lexica->contronyms, b.scorer, opt);
  {
    auto out = open_out(o.out);
    out << to_json(report).dump(2, ' ', false) << '\n';
    close_out(out, o.out);
  }
  if (!o.costs.empty()) {
    const Corpus applied = apply_annotations(c);
    std::vector<std::string> t, s;
    for (const auto& r : applied.records) {
      t.push_back(*r.mt_text);
      s.push_back(*r.reference_text);
    }
    const auto rows = sentence_costs(t, s, b.scorer, opt.mode.value_or(ScalarMode::Signed));
    auto out = open_out(o.costs);
    out << "id,target_scalar,reference_scalar,cost\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
      out << applied.records[i].id << ',' << fixed(rows[i].target_scalar, 6) << ','
          << fixed(rows[i].reference_scalar, 6) << ',' << fixed(rows[i].cost, 6) << '\n';
    close_out(out, o.costs);
  }
  write_table(std::cout, report);
  std::cout << "evaluate: " << report.sentences << " sentences, BLEU " << fixed(report.bleu, 2) << ", cost "
            << fixed(report.cost, 4) << " -> " << o.out << '\n';
  return 0;
}

int cmd_report(const Options& o) {
  require(o.out, "--out");
  require(o.flags, "--flags");
  const auto hist = frequency_report(load_flags(o.flags));
  auto out = open_out(o.out);
  write_histogram_csv(out, hist);
  close_out(out, o.out);
  std::size_t total = 0;
  for (const auto& row : hist) {
    total += row.count;
    std::cout << std::left << std::setw(18) << to_string(row.category) << std::right << std::setw(6) << row.count
              << "  " << std::string(static_cast<std::size_t>(row.proportion * 40.0 + 0.5), '#') << '\n';
  }
  std::cout << "report: " << hist.size() << " categories over " << total << " flags -> " << o.out << '\n';
  return 0;
}

int cmd_serve(const Options& o) {
  Corpus c = load_input(o);
  const auto b = make_scorer(o);
  ServiceOptions so;
  so.log_path = o.log.empty() ? annotation_path(o.config.corpus) : fs::path(o.log);
  so.thresholds = o.config.thresholds;
  so.eval = eval_options(o);
  // The log file is the corpus's own annotation sidecar by default; the service
  // reads it itself, so the copy loaded with the corpus is dropped.
  if (fs::exists(so.log_path) && fs::equivalent(so.log_path, annotation_path(o.config.corpus))) c.annotations.clear();
  AnnotationService service(std::move(c), b.lexica, b.scorer, so);
  auto server = make_http_server(service, o.static_dir);
  std::cout << "serve: " << service.flags().size() << " flagged items on http://" << o.host << ':' << o.port
            << std::endl;
  if (!server->listen(o.host, o.port)) throw IoError(o.host + ":" + std::to_string(o.port), "cannot listen");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  o.config.data_dir = SENTX_DATA_DIR;

  CLI::App app{"sentx: sentiment preservation in Arabic-English review translation"};
  app.set_config("--config", "", "flat key = value file; command-line flags override it");
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  std::string data_dir = o.config.data_dir.string();
  std::string corpus;
  app.add_option("--data-dir", data_dir, "directory holding the lexicon files")->capture_default_str();
  app.add_option("--scorer", o.scorer, "builtin or external (SENTI_ENDPOINT, SENTI_KEY)")->capture_default_str();
  app.add_option("--positive-min-rating", o.config.thresholds.positive_min_rating)->capture_default_str();
  app.add_option("--negative-max-rating", o.config.thresholds.negative_max_rating)->capture_default_str();
  app.add_option("--cutoff", o.config.thresholds.score_cutoff, "score cutoff for flagging")->capture_default_str();

  auto add_corpus = [&](CLI::App* sub) {
    sub->add_option("--corpus", corpus, "input corpus");
    sub->add_option("--format", o.format, "jsonl or tsv")->capture_default_str();
  };

  auto* normalize = app.add_subcommand("normalize", "normalize source text and split long reviews");
  add_corpus(normalize);
  normalize->add_option("--out", o.out, "output corpus (JSONL)");
  normalize->add_option("--max-len", o.config.max_len, "maximum tokens per segment")->capture_default_str();

  auto* score = app.add_subcommand("score", "score MT output with the sentence scorer");
  add_corpus(score);
  score->add_option("--out", o.out, "output scores (JSONL)");

  auto* flag = app.add_subcommand("flag", "flag rating/sentiment discrepancies");
  add_corpus(flag);
  flag->add_option("--out", o.out, "output flags (JSONL)");

  auto* classify = app.add_subcommand("classify", "assign error categories to flags");
  add_corpus(classify);
  classify->add_option("--flags", o.flags, "flags from `flag`");
  classify->add_option("--out", o.out, "classified flags (JSONL)");

  auto* tag = app.add_subcommand("tag", "add contronym polarity tags and post-edits");
  add_corpus(tag);
  tag->add_option("--annotations", o.annotations, "annotation JSONL to merge");
  tag->add_flag("--interactive", o.interactive, "prompt for each untagged contronym on stdin");
  tag->add_option("--annotator", o.annotator, "annotator name for interactive tags")->capture_default_str();
  tag->add_option("--out", o.out, "output corpus (JSONL plus .ann.jsonl)");

  auto* train = app.add_subcommand("train-embed", "train CBOW embeddings on the tagged source corpus");
  add_corpus(train);
  train->add_option("--out", o.out, "binary model output");
  train->add_option("--text-out", o.text_out, "optional text-format vectors");
  train->add_option("--dim", o.config.embed.dimension)->capture_default_str();
  train->add_option("--window", o.config.embed.window)->capture_default_str();
  train->add_option("--min-count", o.config.embed.min_count)->capture_default_str();
  train->add_option("--epochs", o.config.embed.epochs)->capture_default_str();
  train->add_option("--lr", o.config.embed.initial_learning_rate)->capture_default_str();
  train->add_option("--seed", o.config.embed.seed)->capture_default_str();

  auto* eval = app.add_subcommand("evaluate", "BLEU, word-level P/R/F1 and sentiment cost");
  add_corpus(eval);
  eval->add_option("--out", o.out, "report JSON");
  eval->add_option("--mode", o.mode, "positive_class, negative_class or signed (default: per rating band)");
  eval->add_option("--costs", o.costs, "optional per-sentence cost CSV");
  eval->add_flag("--smooth", o.smooth, "add-one smoothing for n > 1");

  auto* report = app.add_subcommand("report", "error-category histogram");
  report->add_option("--flags", o.flags, "classified flags");
  report->add_option("--out", o.out, "histogram CSV");

  auto* serve = app.add_subcommand("serve", "run the annotation API");
  add_corpus(serve);
  serve->add_option("--port", o.port)->capture_default_str();
  serve->add_option("--host", o.host)->capture_default_str();
  serve->add_option("--static-dir", o.static_dir, "directory of UI files to serve at /");
  serve->add_option("--log", o.log, "annotation log (default: the corpus .ann.jsonl)");
  serve->add_option("--mode", o.mode, "scalar mode for the live report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ExtrasError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const CLI::RequiredError& e) {
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return kExitUsage;
    }
    app.exit(e);
    return kExitValidation;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    o.config.data_dir = data_dir;
    o.config.corpus = corpus;
    finalize(o);
    if (normalize->parsed()) return cmd_normalize(o);
    if (score->parsed()) return cmd_score(o);
    if (flag->parsed()) return cmd_flag(o);
    if (classify->parsed()) return cmd_classify(o);
    if (tag->parsed()) return cmd_tag(o);
    if (train->parsed()) return cmd_train_embed(o);
    if (eval->parsed()) return cmd_evaluate(o);
    if (report->parsed()) return cmd_report(o);
    if (serve->parsed()) return cmd_serve(o);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const TransportError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  std::cerr << app.help();
  return kExitUsage;
}
