#pragma once

// End-to-end configuration and the corpus-level preprocessing step shared by
// the command-line tool and the annotation server.

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sentx/corpus.hpp"
#include "sentx/detect.hpp"
#include "sentx/embed.hpp"
#include "sentx/error.hpp"
#include "sentx/normalize.hpp"
#include "sentx/sentiment.hpp"

namespace sentx {

enum class ScorerKind { Builtin, External };

struct PipelineConfig {
  std::filesystem::path corpus;
  std::filesystem::path data_dir;
  std::filesystem::path out_dir = ".";
  ScorerKind scorer = ScorerKind::Builtin;
  std::optional<ScalarMode> scalar_mode;  // nullopt: per-band default
  Thresholds thresholds;
  std::size_t max_len = 20;
  embed::TrainConfig embed;

  void validate() const {
    thresholds.validate();
    if (max_len == 0) throw ValidationError("max_len must be positive");
    embed.validate();
  }
};

/// Normalizes every source text and splits reviews longer than max_len tokens.
/// Split pieces get ids "<origin>#<k>", inherit the rating, and drop the MT and
/// reference texts, which no longer align with a fragment. Annotations on a
/// split review are dropped for the same reason.
inline Corpus normalize_corpus(const Corpus& in, std::size_t max_len = 20) {
  Corpus out;
  std::set<std::string> split_ids;
  for (const auto& r : in.records) {
    const auto tokens = tokenize(preprocess(r.source_text));
    if (tokens.empty()) throw ValidationError("record '" + r.id + "' is empty after normalization");
    const auto segments = split_segments(tokens, max_len);
    if (segments.size() == 1) {
      ReviewRecord copy = r;
      copy.source_text = join(tokens);
      out.records.push_back(std::move(copy));
      continue;
    }
    split_ids.insert(r.id);
    for (std::size_t k = 0; k < segments.size(); ++k) {
      ReviewRecord seg;
      seg.id = r.id + "#" + std::to_string(k);
      seg.source_text = join(segments[k]);
      seg.rating = r.rating;
      seg.origin_id = r.origin_id;
      seg.segment_index = k;
      out.records.push_back(std::move(seg));
    }
  }
  for (const auto& a : in.annotations)
    if (!split_ids.count(a.item_id)) out.annotations.push_back(a);
  return out;
}

}  // namespace sentx
