#pragma once

// CBOW word embeddings trained with hierarchical softmax.
//
// Polarity-tagged contronyms ("w__POS", "w__NEG") are ordinary distinct
// vocabulary items here, so each sense gets its own vector.
//
// Tree convention: at each inner node the probability of taking the branch
// with code bit 1 is sigmoid(node . h), bit 0 is 1 - sigmoid(node . h), where
// h is the mean of the context input vectors.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sentx/error.hpp"
#include "sentx/normalize.hpp"

namespace sentx::embed {

struct TrainConfig {
  std::size_t dimension = 100;
  std::size_t window = 5;
  std::size_t min_count = 2;
  std::size_t epochs = 5;
  double initial_learning_rate = 0.025;
  std::uint64_t seed = 1;

  void validate() const {
    if (dimension == 0) throw ValidationError("dimension must be positive");
    if (window == 0) throw ValidationError("window must be positive");
    if (min_count == 0) throw ValidationError("min_count must be positive");
    if (!(initial_learning_rate > 0.0)) throw ValidationError("initial_learning_rate must be positive");
  }
};

struct Vocabulary {
  std::vector<std::string> tokens;  // by descending count, then token
  std::vector<std::uint64_t> counts;
  std::unordered_map<std::string, std::uint32_t> index;
  // Root-first Huffman path per token: code bits and inner-node indices.
  std::vector<std::vector<std::uint8_t>> codes;
  std::vector<std::vector<std::uint32_t>> points;

  std::size_t size() const { return tokens.size(); }
  std::size_t inner_nodes() const { return tokens.empty() ? 0 : tokens.size() - 1; }

  std::optional<std::uint32_t> find(std::string_view token) const {
    auto it = index.find(std::string(token));
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

/// Builds the vocabulary and its Huffman tree from (token, count) pairs.
///
/// Ties are broken deterministically: among equal counts the
/// lexicographically lower token is merged first, and inner nodes merge
/// after leaves of the same count. The first node popped gets bit 0.
inline Vocabulary build_vocab_from_counts(std::vector<std::pair<std::string, std::uint64_t>> counted,
                                          std::size_t min_count) {
  std::erase_if(counted, [&](const auto& p) { return p.second < min_count; });
  if (counted.empty()) throw ValidationError("vocabulary is empty after min_count filtering");
  std::sort(counted.begin(), counted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  Vocabulary v;
  const std::size_t n = counted.size();
  for (std::size_t i = 0; i < n; ++i) {
    v.tokens.push_back(counted[i].first);
    v.counts.push_back(counted[i].second);
    v.index.emplace(counted[i].first, static_cast<std::uint32_t>(i));
  }
  v.codes.assign(n, {});
  v.points.assign(n, {});
  if (n == 1) return v;  // single leaf: empty code, probability 1

  // Node ids: leaves are vocabulary indices, inner nodes are n + k.
  using Key = std::tuple<std::uint64_t, std::uint64_t, std::uint32_t>;  // count, order, node
  std::priority_queue<Key, std::vector<Key>, std::greater<>> heap;
  // Leaves ascending by (count, token): vocabulary order reversed within a count.
  std::vector<std::uint32_t> leaf_order(n);
  for (std::size_t i = 0; i < n; ++i) leaf_order[i] = static_cast<std::uint32_t>(i);
  std::sort(leaf_order.begin(), leaf_order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return v.counts[a] != v.counts[b] ? v.counts[a] < v.counts[b] : v.tokens[a] < v.tokens[b];
  });
  for (std::size_t r = 0; r < n; ++r) heap.emplace(v.counts[leaf_order[r]], r, leaf_order[r]);

  std::vector<std::uint32_t> parent(2 * n - 1, 0);
  std::vector<std::uint8_t> bit(2 * n - 1, 0);
  std::uint32_t next = static_cast<std::uint32_t>(n);
  while (heap.size() > 1) {
    const auto [c0, o0, a] = heap.top();
    heap.pop();
    const auto [c1, o1, b] = heap.top();
    heap.pop();
    (void)o0;
    (void)o1;
    parent[a] = next;
    bit[a] = 0;
    parent[b] = next;
    bit[b] = 1;
    heap.emplace(c0 + c1, next, next);
    ++next;
  }
  const std::uint32_t root = next - 1;
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    std::uint32_t node = static_cast<std::uint32_t>(leaf);
    while (node != root) {
      v.codes[leaf].push_back(bit[node]);
      node = parent[node];
      v.points[leaf].push_back(node - static_cast<std::uint32_t>(n));
    }
    std::reverse(v.codes[leaf].begin(), v.codes[leaf].end());
    std::reverse(v.points[leaf].begin(), v.points[leaf].end());
  }
  return v;
}

inline Vocabulary build_vocab(const std::vector<TokenSequence>& corpus, std::size_t min_count) {
  if (corpus.empty()) throw ValidationError("build_vocab: empty corpus");
  std::map<std::string, std::uint64_t> freq;
  for (const auto& s : corpus)
    for (const auto& t : s) ++freq[t];
  return build_vocab_from_counts({freq.begin(), freq.end()}, min_count);
}

class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(Vocabulary vocab, std::size_t dimension)
      : vocab_(std::move(vocab)),
        dim_(dimension),
        input_(vocab_.size() * dimension, 0.0),
        nodes_(vocab_.inner_nodes() * dimension, 0.0) {}

  const Vocabulary& vocab() const { return vocab_; }
  std::size_t dimension() const { return dim_; }

  std::span<double> input(std::size_t i) { return {input_.data() + i * dim_, dim_}; }
  std::span<const double> input(std::size_t i) const { return {input_.data() + i * dim_, dim_}; }
  std::span<double> node(std::size_t i) { return {nodes_.data() + i * dim_, dim_}; }
  std::span<const double> node(std::size_t i) const { return {nodes_.data() + i * dim_, dim_}; }

  const std::vector<double>& input_matrix() const { return input_; }
  const std::vector<double>& node_matrix() const { return nodes_; }

  std::span<const double> vector(std::string_view token) const {
    auto idx = vocab_.find(token);
    if (!idx) throw ValidationError("unknown token '" + std::string(token) + "'");
    return input(*idx);
  }

  bool operator==(const EmbeddingModel& o) const {
    return dim_ == o.dim_ && vocab_.tokens == o.vocab_.tokens && vocab_.counts == o.vocab_.counts &&
           input_ == o.input_ && nodes_ == o.nodes_;
  }

 private:
  Vocabulary vocab_;
  std::size_t dim_ = 0;
  std::vector<double> input_;
  std::vector<double> nodes_;
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

/// Word2vec-style initialization: input vectors uniform in [-0.5/d, 0.5/d),
/// inner-node vectors zero.
inline EmbeddingModel initialize(Vocabulary vocab, const TrainConfig& config) {
  EmbeddingModel m(std::move(vocab), config.dimension);
  std::mt19937_64 rng(config.seed);
  const double d = static_cast<double>(config.dimension);
  for (std::size_t i = 0; i < m.vocab().size(); ++i)
    for (auto& x : m.input(i)) x = (detail::unit_uniform(rng) - 0.5) / d;
  return m;
}

struct CbowSample {
  std::vector<std::uint32_t> context;
  std::uint32_t target = 0;
};

inline std::vector<double> context_mean(const EmbeddingModel& m, const std::vector<std::uint32_t>& context) {
  std::vector<double> h(m.dimension(), 0.0);
  if (context.empty()) return h;
  for (auto c : context) {
    auto v = m.input(c);
    for (std::size_t k = 0; k < h.size(); ++k) h[k] += v[k];
  }
  const double inv = 1.0 / static_cast<double>(context.size());
  for (auto& x : h) x *= inv;
  return h;
}

inline double leaf_probability(const EmbeddingModel& m, std::span<const double> h, std::uint32_t token) {
  double p = 1.0;
  const auto& code = m.vocab().codes[token];
  const auto& points = m.vocab().points[token];
  for (std::size_t j = 0; j < code.size(); ++j) {
    const double s = detail::sigmoid(detail::dot(m.node(points[j]), h));
    p *= code[j] ? s : 1.0 - s;
  }
  return p;
}

inline double log_likelihood(const EmbeddingModel& m, const CbowSample& sample) {
  const auto h = context_mean(m, sample.context);
  double ll = 0.0;
  const auto& code = m.vocab().codes[sample.target];
  const auto& points = m.vocab().points[sample.target];
  for (std::size_t j = 0; j < code.size(); ++j) {
    const double x = detail::dot(m.node(points[j]), h);
    ll += detail::log_sigmoid(code[j] ? x : -x);
  }
  return ll;
}

/// Gradient of the sample's negative log-likelihood for every parameter it touches.
struct Gradient {
  std::map<std::uint32_t, std::vector<double>> nodes;
  std::map<std::uint32_t, std::vector<double>> inputs;
};

inline Gradient nll_gradient(const EmbeddingModel& m, const CbowSample& sample) {
  Gradient g;
  const auto h = context_mean(m, sample.context);
  const std::size_t d = m.dimension();
  std::vector<double> grad_h(d, 0.0);
  const auto& code = m.vocab().codes[sample.target];
  const auto& points = m.vocab().points[sample.target];
  for (std::size_t j = 0; j < code.size(); ++j) {
    const auto node = m.node(points[j]);
    const double coeff = detail::sigmoid(detail::dot(node, h)) - code[j];
    auto& gn = g.nodes[points[j]];
    gn.assign(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      gn[k] += coeff * h[k];
      grad_h[k] += coeff * node[k];
    }
  }
  if (!sample.context.empty()) {
    const double inv = 1.0 / static_cast<double>(sample.context.size());
    for (auto c : sample.context) {
      auto& gi = g.inputs[c];
      if (gi.empty()) gi.assign(d, 0.0);
      for (std::size_t k = 0; k < d; ++k) gi[k] += grad_h[k] * inv;
    }
  }
  return g;
}

/// One stochastic gradient ascent step on the sample's log-likelihood.
inline void sgd_step(EmbeddingModel& m, const CbowSample& sample, double learning_rate) {
  if (sample.context.empty()) return;
  const auto h = context_mean(m, sample.context);
  const std::size_t d = m.dimension();
  std::vector<double> grad_h(d, 0.0);
  const auto& code = m.vocab().codes[sample.target];
  const auto& points = m.vocab().points[sample.target];
  for (std::size_t j = 0; j < code.size(); ++j) {
    auto node = m.node(points[j]);
    const double g = learning_rate * (code[j] - detail::sigmoid(detail::dot(node, h)));
    for (std::size_t k = 0; k < d; ++k) grad_h[k] += g * node[k];
    for (std::size_t k = 0; k < d; ++k) node[k] += g * h[k];
  }
  const double inv = 1.0 / static_cast<double>(sample.context.size());
  for (auto c : sample.context) {
    auto v = m.input(c);
    for (std::size_t k = 0; k < d; ++k) v[k] += grad_h[k] * inv;
  }
}

/// Largest relative error between the analytic NLL gradient and central
/// finite differences over every parameter the sample touches.
inline double gradient_check(const EmbeddingModel& model, const CbowSample& sample, double step = 1e-5) {
  const Gradient analytic = nll_gradient(model, sample);
  EmbeddingModel probe = model;
  double worst = 0.0;
  auto compare = [&](std::span<double> params, const std::vector<double>& grad) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double saved = params[k];
      params[k] = saved + step;
      const double up = -log_likelihood(probe, sample);
      params[k] = saved - step;
      const double down = -log_likelihood(probe, sample);
      params[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(numeric), std::abs(grad[k]), 1e-8});
      worst = std::max(worst, std::abs(numeric - grad[k]) / denom);
    }
  };
  for (const auto& [idx, grad] : analytic.nodes) compare(probe.node(idx), grad);
  for (const auto& [idx, grad] : analytic.inputs) compare(probe.input(idx), grad);
  return worst;
}

// Samples for one sentence: every in-vocabulary position with its window.
inline std::vector<CbowSample> cbow_samples(const std::vector<std::uint32_t>& ids, std::size_t window) {
  std::vector<CbowSample> out;
  out.reserve(ids.size());
  for (std::size_t pos = 0; pos < ids.size(); ++pos) {
    CbowSample s;
    s.target = ids[pos];
    const std::size_t lo = pos >= window ? pos - window : 0;
    const std::size_t hi = std::min(ids.size(), pos + window + 1);
    for (std::size_t j = lo; j < hi; ++j)
      if (j != pos) s.context.push_back(ids[j]);
    out.push_back(std::move(s));
  }
  return out;
}

/// Single-threaded CBOW training; bit-reproducible for a fixed config.
///
/// Out-of-vocabulary tokens are dropped before windowing. The learning rate
/// decays linearly from initial to initial / 10000 over all training positions.
inline EmbeddingModel train(const std::vector<TokenSequence>& corpus, const TrainConfig& config) {
  config.validate();
  EmbeddingModel m = initialize(build_vocab(corpus, config.min_count), config);

  std::vector<std::vector<std::uint32_t>> sentences;
  std::size_t words = 0;
  for (const auto& s : corpus) {
    std::vector<std::uint32_t> ids;
    for (const auto& t : s)
      if (auto idx = m.vocab().find(t)) ids.push_back(*idx);
    words += ids.size();
    sentences.push_back(std::move(ids));
  }
  const double total = static_cast<double>(words * config.epochs);
  const double floor = config.initial_learning_rate * 1e-4;
  std::size_t done = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& ids : sentences) {
      for (auto& sample : cbow_samples(ids, config.window)) {
        const double lr = std::max(floor, config.initial_learning_rate * (1.0 - static_cast<double>(done) / total));
        sgd_step(m, sample, lr);
        ++done;
      }
    }
  }
  return m;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(detail::dot(a, a));
  const double nb = std::sqrt(detail::dot(b, b));
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine of a zero vector");
  return std::clamp(detail::dot(a, b) / (na * nb), -1.0, 1.0);
}

inline double cosine(const EmbeddingModel& m, std::string_view a, std::string_view b) {
  return cosine(m.vector(a), m.vector(b));
}

// ---------------------------------------------------------------------------
// Persistence
//
// Binary layout, all integers and floats little-endian:
//   8 bytes   magic "SENTXEMB"
//   u32       format version (1)
//   u32       dimension d
//   u32       vocabulary size V
//   V times:  u32 byte length, UTF-8 token bytes, u64 count
//   V*d f32   input vectors, row-major in vocabulary order
//   (V-1)*d f32  inner-node vectors
// The Huffman tree is rebuilt from the counts on load.

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f32(std::ostream& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

inline std::uint64_t get_le(std::istream& in, int bytes, const std::string& path) {
  unsigned char b[8] = {};
  if (!in.read(reinterpret_cast<char*>(b), bytes)) throw ValidationError(path + ": truncated model file");
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace detail

inline constexpr char kModelMagic[8] = {'S', 'E', 'N', 'T', 'X', 'E', 'M', 'B'};

inline void save_binary(const EmbeddingModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(kModelMagic, 8);
  detail::put_u32(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(m.dimension()));
  detail::put_u32(out, static_cast<std::uint32_t>(m.vocab().size()));
  for (std::size_t i = 0; i < m.vocab().size(); ++i) {
    const auto& t = m.vocab().tokens[i];
    detail::put_u32(out, static_cast<std::uint32_t>(t.size()));
    out.write(t.data(), static_cast<std::streamsize>(t.size()));
    detail::put_u64(out, m.vocab().counts[i]);
  }
  for (double x : m.input_matrix()) detail::put_f32(out, x);
  for (double x : m.node_matrix()) detail::put_f32(out, x);
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

inline EmbeddingModel load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open model");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kModelMagic, 8) != 0) throw ValidationError(path + ": bad magic bytes");
  const auto version = detail::get_le(in, 4, path);
  if (version != 1) throw ValidationError(path + ": unsupported model version " + std::to_string(version));
  const auto dim = static_cast<std::size_t>(detail::get_le(in, 4, path));
  const auto size = static_cast<std::size_t>(detail::get_le(in, 4, path));
  std::vector<std::pair<std::string, std::uint64_t>> counted;
  for (std::size_t i = 0; i < size; ++i) {
    const auto len = static_cast<std::size_t>(detail::get_le(in, 4, path));
    std::string tok(len, '\0');
    if (!in.read(tok.data(), static_cast<std::streamsize>(len))) throw ValidationError(path + ": truncated model file");
    counted.emplace_back(std::move(tok), detail::get_le(in, 8, path));
  }
  EmbeddingModel m(build_vocab_from_counts(counted, 1), dim);
  if (m.vocab().tokens.size() != size) throw ValidationError(path + ": duplicate vocabulary entries");
  for (std::size_t i = 0; i < size; ++i)
    if (m.vocab().tokens[i] != counted[i].first) throw ValidationError(path + ": vocabulary not in canonical order");
  auto read_f32 = [&] {
    return static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(in, 4, path))));
  };
  for (std::size_t i = 0; i < size; ++i)
    for (auto& x : m.input(i)) x = read_f32();
  for (std::size_t i = 0; i < m.vocab().inner_nodes(); ++i)
    for (auto& x : m.node(i)) x = read_f32();
  return m;
}

// "V d" header, then one "token v1 ... vd" line per token.
inline void save_text(const EmbeddingModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out << m.vocab().size() << ' ' << m.dimension() << '\n';
  out << std::setprecision(9);
  for (std::size_t i = 0; i < m.vocab().size(); ++i) {
    out << m.vocab().tokens[i];
    for (double x : m.input(i)) out << ' ' << static_cast<float>(x);
    out << '\n';
  }
  if (!out) throw IoError(path, "write failed");
}

}  // namespace sentx::embed
