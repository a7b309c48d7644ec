#include <gtest/gtest.h>

#include "sentx/corpus.hpp"
#include "test_util.hpp"

using namespace sentx;
using sentx::testing::Gen;
using sentx::testing::read_file;
using sentx::testing::TempDir;
using sentx::testing::write_file;

namespace {

ReviewRecord record(std::string id, std::string source, int rating) {
  ReviewRecord r;
  r.id = id;
  r.origin_id = id;
  r.source_text = std::move(source);
  r.rating = rating;
  return r;
}

AnnotationRecord post_edit(std::string id, std::string text, std::int64_t ts) {
  AnnotationRecord a;
  a.item_id = std::move(id);
  a.kind = AnnotationKind::PostEdit;
  a.edited_target = std::move(text);
  a.annotator = "ann";
  a.timestamp = ts;
  return a;
}

AnnotationRecord polarity_tag(std::string id, std::size_t index, Polarity p, std::int64_t ts) {
  AnnotationRecord a;
  a.item_id = std::move(id);
  a.kind = AnnotationKind::PolarityTag;
  a.token_index = index;
  a.polarity = p;
  a.annotator = "ann";
  a.timestamp = ts;
  return a;
}

}  // namespace

TEST(LoadReviews, SingleJsonlRecord) {
  TempDir dir;
  write_file(dir / "c.jsonl", R"({"id":"r1","source_text":"كتاب","rating":5,"origin_id":"r1","segment_index":0})" "\n");
  const auto c = load_reviews(dir / "c.jsonl");
  ASSERT_EQ(c.records.size(), 1u);
  EXPECT_EQ(c.records[0].id, "r1");
  EXPECT_EQ(c.records[0].source_text, "كتاب");
  EXPECT_EQ(c.records[0].rating, 5);
  EXPECT_FALSE(c.records[0].mt_text);
  EXPECT_TRUE(c.annotations.empty());
}

TEST(LoadReviews, RatingOutOfRangeCarriesLine) {
  TempDir dir;
  write_file(dir / "c.jsonl",
             R"({"id":"r1","source_text":"كتاب","rating":5})" "\n"
             R"({"id":"r2","source_text":"كتاب","rating":7})" "\n");
  try {
    load_reviews(dir / "c.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(e.reason().find("rating out of range"), std::string::npos);
  }
}

TEST(LoadReviews, EmptyFileGivesEmptyCorpus) {
  TempDir dir;
  write_file(dir / "c.jsonl", "");
  EXPECT_TRUE(load_reviews(dir / "c.jsonl").records.empty());
}

TEST(LoadReviews, DuplicateIdIsNamed) {
  TempDir dir;
  write_file(dir / "c.jsonl",
             R"({"id":"dup","source_text":"a","rating":1})" "\n" R"({"id":"dup","source_text":"b","rating":2})" "\n");
  try {
    load_reviews(dir / "c.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("dup"), std::string::npos);
  }
}

TEST(LoadReviews, DuplicateSegmentRejected) {
  TempDir dir;
  write_file(dir / "c.jsonl",
             R"({"id":"a#0","source_text":"a","rating":1,"origin_id":"a","segment_index":0})" "\n"
             R"({"id":"a#1","source_text":"b","rating":1,"origin_id":"a","segment_index":0})" "\n");
  EXPECT_THROW(load_reviews(dir / "c.jsonl"), ParseError);
}

TEST(LoadReviews, MalformedAndInvalidLines) {
  TempDir dir;
  write_file(dir / "a.jsonl", "{not json}\n");
  EXPECT_THROW(load_reviews(dir / "a.jsonl"), ParseError);
  write_file(dir / "b.jsonl", R"({"id":"r","source_text":"   ","rating":3})" "\n");
  EXPECT_THROW(load_reviews(dir / "b.jsonl"), ParseError);
  write_file(dir / "c.jsonl", R"({"id":"r","source_text":"x","rating":"5"})" "\n");
  EXPECT_THROW(load_reviews(dir / "c.jsonl"), ParseError);
  write_file(dir / "d.jsonl", R"(["r","x",5])" "\n");
  EXPECT_THROW(load_reviews(dir / "d.jsonl"), ParseError);
}

TEST(LoadReviews, MissingFileIsIoErrorWithPath) {
  try {
    load_reviews("/nonexistent/dir/c.jsonl");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), "/nonexistent/dir/c.jsonl");
  }
}

TEST(LoadReviews, TsvPositionalColumns) {
  TempDir dir;
  write_file(dir / "c.tsv",
             "id\trating\tsource\tmt\treference\n"
             "r1\t5\tالروايه رهيبه\tThe novel is terrible\tThe novel is awesome\n"
             "r2\t2\tكتاب ممل\n");
  const auto c = load_reviews(dir / "c.tsv", CorpusFormat::Tsv);
  ASSERT_EQ(c.records.size(), 2u);
  EXPECT_EQ(c.records[0].mt_text, "The novel is terrible");
  EXPECT_EQ(c.records[0].reference_text, "The novel is awesome");
  EXPECT_EQ(c.records[1].rating, 2);
  EXPECT_FALSE(c.records[1].mt_text);
  EXPECT_EQ(c.records[1].origin_id, "r2");
}

TEST(LoadReviews, TsvRequiresHeader) {
  TempDir dir;
  write_file(dir / "c.tsv", "r1\t5\tكتاب\n");
  EXPECT_THROW(load_reviews(dir / "c.tsv", CorpusFormat::Tsv), ParseError);
  write_file(dir / "d.tsv", "id\trating\tsource\nr1\tfive\tكتاب\n");
  EXPECT_THROW(load_reviews(dir / "d.tsv", CorpusFormat::Tsv), ParseError);
}

TEST(LoadReviews, AnnotationsMustResolve) {
  TempDir dir;
  write_file(dir / "c.jsonl", R"({"id":"r1","source_text":"a","rating":1})" "\n");
  write_file(dir / "c.ann.jsonl",
             R"({"item_id":"ghost","kind":"post_edit","edited_target":"x","annotator":"a","timestamp":1})" "\n");
  EXPECT_THROW(load_reviews(dir / "c.jsonl"), ValidationError);
}

TEST(AnnotationValidation, KindConditionalFields) {
  auto tag = polarity_tag("r1", 0, Polarity::Pos, 5);
  EXPECT_TRUE(validate(tag).empty());
  tag.polarity.reset();
  EXPECT_FALSE(validate(tag).empty());
  auto edit = post_edit("r1", "x", 5);
  EXPECT_TRUE(validate(edit).empty());
  edit.token_index = 3;
  EXPECT_FALSE(validate(edit).empty());
  auto zero = post_edit("r1", "x", 0);
  EXPECT_FALSE(validate(zero).empty());
}

TEST(WriteCorpus, RoundTripThreeRecords) {
  TempDir dir;
  Corpus c;
  c.records.push_back(record("r1", "الروايه رهيبه", 5));
  c.records.back().mt_text = "The novel is terrible";
  c.records.back().reference_text = "The novel is awesome";
  c.records.push_back(record("r2", "كتاب \"خفيف\" الظل", 4));
  c.records.push_back(record("r3#1", "مش حلو", 1));
  c.records.back().origin_id = "r3";
  c.records.back().segment_index = 1;
  write_corpus(c, dir / "c.jsonl");
  EXPECT_EQ(load_reviews(dir / "c.jsonl"), c);
}

TEST(WriteCorpus, PreservesAnnotations) {
  TempDir dir;
  Corpus c;
  c.records.push_back(record("r1", "كتاب رهيبه", 5));
  c.annotations.push_back(polarity_tag("r1", 1, Polarity::Pos, 10));
  c.annotations.push_back(post_edit("r1", "great book", 11));
  write_corpus(c, dir / "c.jsonl");
  EXPECT_TRUE(std::filesystem::exists(dir / "c.ann.jsonl"));
  EXPECT_EQ(load_reviews(dir / "c.jsonl"), c);
}

TEST(WriteCorpus, UnwritablePathIsIoError) {
  Corpus c;
  c.records.push_back(record("r1", "x", 3));
  EXPECT_THROW(write_corpus(c, "/nonexistent/dir/c.jsonl"), IoError);
}

TEST(ApplyAnnotations, PostEditReplacesReference) {
  Corpus c;
  c.records.push_back(record("r1", "كتاب", 5));
  c.annotations.push_back(post_edit("r1", "great book", 1));
  const auto out = apply_annotations(c);
  EXPECT_EQ(out.records[0].reference_text, "great book");
  EXPECT_FALSE(c.records[0].reference_text);
}

TEST(ApplyAnnotations, LatestTimestampWins) {
  Corpus c;
  c.records.push_back(record("r1", "كتاب", 5));
  c.annotations.push_back(post_edit("r1", "late", 20));
  c.annotations.push_back(post_edit("r1", "early", 10));
  EXPECT_EQ(apply_annotations(c).records[0].reference_text, "late");
}

TEST(ApplyAnnotations, TiesBreakByLogOrder) {
  Corpus c;
  c.records.push_back(record("r1", "كتاب رهيبه", 5));
  c.annotations.push_back(post_edit("r1", "first", 10));
  c.annotations.push_back(post_edit("r1", "second", 10));
  c.annotations.push_back(polarity_tag("r1", 1, Polarity::Pos, 7));
  c.annotations.push_back(polarity_tag("r1", 1, Polarity::Neg, 7));
  const auto out = apply_annotations(c);
  EXPECT_EQ(out.records[0].reference_text, "second");
  EXPECT_EQ(out.records[0].source_text, "كتاب رهيبه__NEG");
}

TEST(ApplyAnnotations, PolarityTagMaterializes) {
  Corpus c;
  c.records.push_back(record("r1", "كتاب رهيبه", 5));
  c.annotations.push_back(polarity_tag("r1", 1, Polarity::Pos, 3));
  EXPECT_EQ(apply_annotations(c).records[0].source_text, "كتاب رهيبه__POS");
}

TEST(ApplyAnnotations, OutOfBoundsNamesItemAndIndex) {
  Corpus c;
  c.records.push_back(record("r1", "كتاب رهيبه", 5));
  c.annotations.push_back(polarity_tag("r1", 9, Polarity::Pos, 3));
  try {
    apply_annotations(c);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("r1"), std::string::npos);
    EXPECT_NE(msg.find("9"), std::string::npos);
  }
}

TEST(ApplyAnnotations, PunctuationTokensCannotBeTagged) {
  Corpus c;
  c.records.push_back(record("r1", "كتاب رهيبه !", 5));
  c.annotations.push_back(polarity_tag("r1", 2, Polarity::Pos, 3));
  EXPECT_THROW(apply_annotations(c), ValidationError);
}

// ---------------------------------------------------------------------------
// Properties

namespace {

Corpus random_corpus(Gen& g) {
  static const std::vector<std::string> english = {"The novel is terrible", "great book", "not bad \"at all\"",
                                                   "line\\with\\backslash", "tab\tinside", "emoji 📚"};
  Corpus c;
  const std::size_t n = g.index(12);
  for (std::size_t i = 0; i < n; ++i) {
    std::string src = normalize_arabic(g.arabic_text(8));
    if (src.empty()) src = "كتاب";
    auto r = record("r" + std::to_string(i), src, g.range(1, 5));
    if (g.coin()) r.mt_text = g.pick(english);
    if (g.coin()) r.reference_text = g.pick(english);
    if (g.coin(0.2)) {
      r.origin_id = "orig" + std::to_string(i);
      r.segment_index = g.index(4);
    }
    c.records.push_back(std::move(r));
  }
  for (std::size_t k = 0; n > 0 && k < g.index(6); ++k) {
    const auto& r = c.records[g.index(n)];
    std::vector<std::size_t> words;
    const auto toks = tokenize(r.source_text);
    for (std::size_t i = 0; i < toks.size(); ++i)
      if (!is_punctuation_token(toks[i])) words.push_back(i);
    if (g.coin() && !words.empty())
      c.annotations.push_back(polarity_tag(r.id, g.pick(words), g.coin() ? Polarity::Pos : Polarity::Neg,
                                           1 + static_cast<std::int64_t>(g.index(50))));
    else
      c.annotations.push_back(post_edit(r.id, g.pick(english), 1 + static_cast<std::int64_t>(g.index(50))));
  }
  return c;
}

}  // namespace

TEST(CorpusProperties, WriteLoadIsIdentity) {
  Gen g(31);
  TempDir dir;
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_corpus(g);
    write_corpus(c, dir / "c.jsonl");
    ASSERT_EQ(load_reviews(dir / "c.jsonl"), c) << "trial " << trial;
  }
}

TEST(CorpusProperties, WriteIsByteStable) {
  Gen g(32);
  TempDir dir;
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_corpus(g);
    write_corpus(c, dir / "a.jsonl");
    write_corpus(load_reviews(dir / "a.jsonl"), dir / "b.jsonl");
    ASSERT_EQ(read_file(dir / "a.jsonl"), read_file(dir / "b.jsonl"));
    ASSERT_EQ(read_file(dir / "a.ann.jsonl"), read_file(dir / "b.ann.jsonl"));
  }
}

TEST(CorpusProperties, ApplyIsIdempotent) {
  Gen g(33);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_corpus(g);
    const auto once = apply_annotations(c);
    ASSERT_EQ(apply_annotations(once), once) << "trial " << trial;
  }
}
