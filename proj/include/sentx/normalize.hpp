#pragma once

// Arabic orthographic normalization, tokenization and segment splitting.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sentx/error.hpp"
#include "sentx/utf8.hpp"

namespace sentx {

using TokenSequence = std::vector<std::string>;

/// Letter-form folding and mark deletion applied by normalize_arabic.
///
/// The default table is compiled in; data/normalization.tsv carries the
/// same table as a versioned file and the tests pin the two together.
struct NormalizationTable {
  int version = 1;
  std::map<char32_t, char32_t> fold;
  std::set<char32_t> drop;

  static NormalizationTable builtin() {
    NormalizationTable t;
    t.version = 1;
    // alef variants
    t.fold[0x0623] = 0x0627;
    t.fold[0x0625] = 0x0627;
    t.fold[0x0622] = 0x0627;
    t.fold[0x0671] = 0x0627;
    t.fold[0x0649] = 0x064A;  // alef maqsura
    t.fold[0x0629] = 0x0647;  // taa marbuta
    t.fold[0x0624] = 0x0648;  // hamza on waw
    t.fold[0x0626] = 0x064A;  // hamza on ya
    t.drop.insert(0x0640);    // tatweel
    auto drop_range = [&t](char32_t lo, char32_t hi) {
      for (char32_t c = lo; c <= hi; ++c) t.drop.insert(c);
    };
    drop_range(0x0610, 0x061A);
    drop_range(0x064B, 0x065F);
    t.drop.insert(0x0670);
    drop_range(0x06D6, 0x06DC);
    drop_range(0x06DF, 0x06E4);
    drop_range(0x06E7, 0x06E8);
    drop_range(0x06EA, 0x06ED);
    return t;
  }

  // Format: "# version N" header, then "fold<TAB>U+XXXX<TAB>U+YYYY" and
  // "drop<TAB>U+XXXX" rows. Other '#' lines are comments.
  static NormalizationTable from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open normalization table");
    NormalizationTable t;
    t.version = 0;
    std::string line;
    std::size_t lineno = 0;
    auto parse_cp = [&](const std::string& field) -> char32_t {
      if (field.size() < 3 || field[0] != 'U' || field[1] != '+')
        throw ParseError(lineno, "expected code point U+XXXX, got '" + field + "'");
      try {
        std::size_t used = 0;
        auto v = std::stoul(field.substr(2), &used, 16);
        if (used != field.size() - 2) throw std::invalid_argument(field);
        return static_cast<char32_t>(v);
      } catch (const std::logic_error&) {
        throw ParseError(lineno, "bad code point '" + field + "'");
      }
    };
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == '#') {
        const std::string tag = "# version ";
        if (line.rfind(tag, 0) == 0) t.version = std::stoi(line.substr(tag.size()));
        continue;
      }
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, '\t')) cols.push_back(col);
      if (cols.size() == 3 && cols[0] == "fold") {
        t.fold[parse_cp(cols[1])] = parse_cp(cols[2]);
      } else if (cols.size() == 2 && cols[0] == "drop") {
        t.drop.insert(parse_cp(cols[1]));
      } else {
        throw ParseError(lineno, "expected 'fold' or 'drop' row");
      }
    }
    return t;
  }

  bool operator==(const NormalizationTable&) const = default;
};

inline const NormalizationTable& default_normalization_table() {
  static const NormalizationTable table = NormalizationTable::builtin();
  return table;
}

inline std::string normalize_arabic(std::string_view text, const NormalizationTable& table) {
  std::u32string out;
  bool pending_space = false;
  for (char32_t cp : utf8::decode(text)) {
    if (utf8::is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (table.drop.count(cp)) continue;
    if (auto it = table.fold.find(cp); it != table.fold.end()) cp = it->second;
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(cp);
  }
  return utf8::encode(out);
}

inline std::string normalize_arabic(std::string_view text) {
  return normalize_arabic(text, default_normalization_table());
}

// Runs of three or more identical Arabic letters collapse to one.
inline std::string strip_elongation(std::string_view text) {
  const std::u32string in = utf8::decode(text);
  std::u32string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    std::size_t j = i + 1;
    while (j < in.size() && in[j] == in[i]) ++j;
    const std::size_t run = j - i;
    if (run >= 3 && utf8::is_arabic_letter(in[i])) {
      out.push_back(in[i]);
    } else {
      out.append(in, i, run);
    }
    i = j;
  }
  return utf8::encode(out);
}

/// Full source-side preprocessing: letter normalization then elongation removal.
inline std::string preprocess(std::string_view text) {
  return strip_elongation(normalize_arabic(text));
}

inline bool is_punctuation(char32_t cp) {
  switch (cp) {
    case U'.':
    case U',':
    case U'!':
    case U'?':
    case U':':
    case U'(':
    case U')':
    case U'"':
    case U'\'':
    case 0x061B:  // ؛
    case 0x060C:  // ،
    case 0x061F:  // ؟
      return true;
    default:
      return false;
  }
}

inline bool is_punctuation_token(std::string_view token) {
  const auto cps = utf8::decode(token);
  return cps.size() == 1 && is_punctuation(cps[0]);
}

inline TokenSequence tokenize(std::string_view text) {
  TokenSequence tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  };
  for (char32_t cp : utf8::decode(text)) {
    if (utf8::is_space(cp)) {
      flush();
    } else if (is_punctuation(cp)) {
      flush();
      std::string p;
      utf8::append(p, cp);
      tokens.push_back(std::move(p));
    } else {
      utf8::append(current, cp);
    }
  }
  flush();
  return tokens;
}

inline std::string join(const TokenSequence& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

// Position-preserving: a token that would normalize to nothing is kept as is.
inline TokenSequence normalize_tokens(const TokenSequence& tokens) {
  TokenSequence out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    std::string n = preprocess(t);
    out.push_back(n.empty() || n.find(' ') != std::string::npos ? t : std::move(n));
  }
  return out;
}

inline std::vector<TokenSequence> split_segments(const TokenSequence& tokens, std::size_t max_len = 20) {
  if (max_len == 0) throw ValidationError("split_segments: max_len must be positive");
  std::vector<TokenSequence> segments;
  for (std::size_t start = 0; start < tokens.size(); start += max_len) {
    const std::size_t end = std::min(tokens.size(), start + max_len);
    segments.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                          tokens.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return segments;
}

}  // namespace sentx
