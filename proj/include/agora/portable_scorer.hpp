#pragma once

// Scorer backed by an exported classifier artifact. The artifact is a
// directory:
//
//   manifest.json  {"format": "agora-portable-scorer", "version": 1,
//                   "max_tokens": 512, "output": "softmax2",
//                   "graph": "graph.json", "vocab": "vocab.txt"}
//   vocab.txt      one token per line; line number is the token id
//   graph.json     {"nodes": [...]} evaluated in order
//
// Graph nodes:
//   {"op": "embedding", "weight": VxD, "segment_weight": 2xD?, "position_weight": LxD?}
//   {"op": "mean_pool"}                       sequence -> vector, ignores padding
//   {"op": "dense", "weight": OxI, "bias": O}
//   {"op": "tanh"} | {"op": "relu"}
//   {"op": "softmax"}                         must be last, over exactly 2 logits
//
// Input encoding is "[CLS] anchor [SEP] candidate [SEP]" with segment ids 0/1,
// truncated longest-first to max_tokens. Tokenization lowercases ASCII and
// splits on whitespace; every ASCII punctuation character is its own token.
// See docs/portable_scorer.md.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "agora/error.hpp"
#include "agora/scoring.hpp"

namespace agora {

inline constexpr int kPortableFormatVersion = 1;
inline constexpr std::size_t kPortableOutputArity = 2;

class WordTokenizer {
 public:
  WordTokenizer() = default;
  explicit WordTokenizer(std::vector<std::string> vocab) : vocab_(std::move(vocab)) {
    for (std::size_t i = 0; i < vocab_.size(); ++i) ids_.emplace(vocab_[i], i);
    for (const char* special : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) {
      if (!ids_.count(special)) {
        throw LoadError(std::string("vocabulary is missing special token ") + special);
      }
    }
  }

  std::size_t size() const noexcept { return vocab_.size(); }
  std::size_t id(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? ids_.at("[UNK]") : it->second;
  }

  static std::vector<std::string> split(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    };
    for (char ch : text) {
      auto c = static_cast<unsigned char>(ch);
      if (std::isspace(c)) {
        flush();
      } else if (c < 0x80 && std::ispunct(c)) {
        flush();
        out.emplace_back(1, ch);
      } else {
        cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
      }
    }
    flush();
    return out;
  }

  struct Encoding {
    std::vector<std::size_t> ids;
    std::vector<std::size_t> segments;
  };

  Encoding encode_pair(std::string_view a, std::string_view b, std::size_t max_tokens) const {
    auto ta = split(a);
    auto tb = split(b);
    std::size_t room = max_tokens > 3 ? max_tokens - 3 : 0;
    while (ta.size() + tb.size() > room) {
      if (ta.size() > tb.size()) {
        ta.pop_back();
      } else {
        tb.pop_back();
      }
    }
    Encoding e;
    e.ids.push_back(id("[CLS]"));
    e.segments.push_back(0);
    for (const auto& t : ta) {
      e.ids.push_back(id(t));
      e.segments.push_back(0);
    }
    e.ids.push_back(id("[SEP]"));
    e.segments.push_back(0);
    for (const auto& t : tb) {
      e.ids.push_back(id(t));
      e.segments.push_back(1);
    }
    e.ids.push_back(id("[SEP]"));
    e.segments.push_back(1);
    return e;
  }

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::size_t> ids_;
};

namespace detail {

using Matrix = std::vector<std::vector<double>>;

inline Matrix read_matrix(const nlohmann::json& j, const char* what) {
  try {
    return j.get<Matrix>();
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("graph: bad ") + what + ": " + e.what());
  }
}

inline void check_rect(const Matrix& m, std::size_t cols, const std::string& what) {
  for (const auto& row : m) {
    if (row.size() != cols) throw LoadError("graph: " + what + " has ragged rows");
  }
}

}  // namespace detail

class PortableScorer final : public Scorer {
 public:
  enum class Op { Embedding, MeanPool, Dense, Tanh, Relu, Softmax };

  struct Node {
    Op op;
    detail::Matrix weight;
    detail::Matrix segment_weight;
    detail::Matrix position_weight;
    std::vector<double> bias;
  };

  PortableScorer(WordTokenizer tokenizer, std::vector<Node> nodes, std::size_t max_tokens)
      : tokenizer_(std::move(tokenizer)), nodes_(std::move(nodes)), max_tokens_(max_tokens) {
    validate();
  }

  std::size_t max_tokens() const noexcept { return max_tokens_; }

  // Both class probabilities; [1] is P(critical).
  std::vector<double> forward(std::string_view anchor, std::string_view candidate) const {
    auto enc = tokenizer_.encode_pair(anchor, candidate, max_tokens_);
    std::vector<std::vector<double>> seq;
    std::vector<double> vec;
    for (const auto& n : nodes_) {
      switch (n.op) {
        case Op::Embedding: {
          seq.clear();
          for (std::size_t t = 0; t < enc.ids.size(); ++t) {
            std::vector<double> row = n.weight[enc.ids[t]];
            if (!n.segment_weight.empty()) add(row, n.segment_weight[enc.segments[t]]);
            if (!n.position_weight.empty()) add(row, n.position_weight[t]);
            seq.push_back(std::move(row));
          }
          break;
        }
        case Op::MeanPool: {
          vec.assign(seq.front().size(), 0.0);
          for (const auto& row : seq) add(vec, row);
          for (auto& v : vec) v /= static_cast<double>(seq.size());
          break;
        }
        case Op::Dense: {
          std::vector<double> out(n.bias);
          for (std::size_t o = 0; o < out.size(); ++o) {
            for (std::size_t i = 0; i < vec.size(); ++i) out[o] += n.weight[o][i] * vec[i];
          }
          vec = std::move(out);
          break;
        }
        case Op::Tanh:
          for (auto& v : vec) v = std::tanh(v);
          break;
        case Op::Relu:
          for (auto& v : vec) v = v > 0 ? v : 0.0;
          break;
        case Op::Softmax: {
          double m = std::max(vec[0], vec[1]);
          double e0 = std::exp(vec[0] - m);
          double e1 = std::exp(vec[1] - m);
          vec = {e0 / (e0 + e1), e1 / (e0 + e1)};
          break;
        }
      }
    }
    return vec;
  }

  double score(std::string_view anchor, std::string_view candidate) const override {
    return forward(anchor, candidate)[1];
  }
  std::string name() const override { return "portable"; }

 private:
  static void add(std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  }

  // Shape-checks the whole graph once so inference never has to.
  void validate() const {
    if (nodes_.empty() || nodes_.front().op != Op::Embedding) {
      throw LoadError("graph: first node must be an embedding");
    }
    if (nodes_.back().op != Op::Softmax) throw LoadError("graph: last node must be softmax");
    const auto& emb = nodes_.front();
    if (emb.weight.size() != tokenizer_.size()) {
      throw LoadError("graph: embedding has " + std::to_string(emb.weight.size()) +
                      " rows but vocabulary has " + std::to_string(tokenizer_.size()) + " tokens");
    }
    if (emb.weight.empty() || emb.weight.front().empty()) throw LoadError("graph: empty embedding");
    std::size_t dim = emb.weight.front().size();
    detail::check_rect(emb.weight, dim, "embedding");
    if (!emb.segment_weight.empty()) {
      if (emb.segment_weight.size() != 2) throw LoadError("graph: segment_weight must have 2 rows");
      detail::check_rect(emb.segment_weight, dim, "segment_weight");
    }
    if (!emb.position_weight.empty()) {
      if (emb.position_weight.size() < max_tokens_) {
        throw LoadError("graph: position_weight shorter than max_tokens");
      }
      detail::check_rect(emb.position_weight, dim, "position_weight");
    }

    bool pooled = false;
    std::size_t width = dim;
    for (std::size_t k = 1; k < nodes_.size(); ++k) {
      const auto& n = nodes_[k];
      switch (n.op) {
        case Op::Embedding: throw LoadError("graph: embedding may only be the first node");
        case Op::MeanPool:
          if (pooled) throw LoadError("graph: mean_pool applied twice");
          pooled = true;
          break;
        case Op::Dense:
          if (!pooled) throw LoadError("graph: dense before mean_pool");
          if (n.weight.size() != n.bias.size()) throw LoadError("graph: dense weight/bias mismatch");
          detail::check_rect(n.weight, width, "dense weight (input width " + std::to_string(width) + ")");
          width = n.bias.size();
          break;
        case Op::Tanh:
        case Op::Relu:
        case Op::Softmax:
          if (!pooled) throw LoadError("graph: activation before mean_pool");
          break;
      }
    }
    if (width != kPortableOutputArity) {
      throw LoadError("graph: expected output arity " + std::to_string(kPortableOutputArity) +
                      ", got " + std::to_string(width));
    }
  }

  WordTokenizer tokenizer_;
  std::vector<Node> nodes_;
  std::size_t max_tokens_;
};

namespace detail {

inline nlohmann::json read_json_file(const std::filesystem::path& p, const char* what) {
  std::ifstream in(p);
  if (!in) throw LoadError(std::string(what) + " not found: " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string(what) + " is corrupt (" + p.string() + "): " + e.what());
  }
}

inline PortableScorer::Op parse_op(const std::string& s) {
  using Op = PortableScorer::Op;
  if (s == "embedding") return Op::Embedding;
  if (s == "mean_pool") return Op::MeanPool;
  if (s == "dense") return Op::Dense;
  if (s == "tanh") return Op::Tanh;
  if (s == "relu") return Op::Relu;
  if (s == "softmax") return Op::Softmax;
  throw LoadError("graph: unsupported op '" + s + "'");
}

}  // namespace detail

inline std::unique_ptr<PortableScorer> load_portable_scorer(const std::filesystem::path& dir) {
  auto manifest = detail::read_json_file(dir / "manifest.json", "manifest");
  if (manifest.value("format", std::string()) != "agora-portable-scorer") {
    throw LoadError("manifest: unknown format");
  }
  if (!manifest.contains("version") || !manifest["version"].is_number_integer() ||
      manifest["version"].get<int>() != kPortableFormatVersion) {
    throw LoadError("manifest: version mismatch (expected " +
                    std::to_string(kPortableFormatVersion) + ", got " +
                    (manifest.contains("version") ? manifest["version"].dump() : "none") + ")");
  }
  if (manifest.value("output", std::string()) != "softmax2") {
    throw LoadError("manifest: output must be 'softmax2' (expected output arity 2)");
  }
  auto max_tokens = manifest.value("max_tokens", 0);
  if (max_tokens < 4) throw LoadError("manifest: max_tokens must be at least 4");

  auto vocab_path = dir / manifest.value("vocab", std::string("vocab.txt"));
  std::ifstream vin(vocab_path);
  if (!vin) throw LoadError("tokenizer vocabulary sidecar not found: " + vocab_path.string());
  std::vector<std::string> vocab;
  for (std::string line; std::getline(vin, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    vocab.push_back(line);
  }

  auto graph = detail::read_json_file(dir / manifest.value("graph", std::string("graph.json")), "graph");
  std::vector<PortableScorer::Node> nodes;
  try {
    for (const auto& jn : graph.at("nodes")) {
      PortableScorer::Node n{detail::parse_op(jn.at("op").get<std::string>()), {}, {}, {}, {}};
      if (jn.contains("weight")) n.weight = detail::read_matrix(jn["weight"], "weight");
      if (jn.contains("segment_weight")) {
        n.segment_weight = detail::read_matrix(jn["segment_weight"], "segment_weight");
      }
      if (jn.contains("position_weight")) {
        n.position_weight = detail::read_matrix(jn["position_weight"], "position_weight");
      }
      if (jn.contains("bias")) n.bias = jn["bias"].get<std::vector<double>>();
      nodes.push_back(std::move(n));
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("graph: ") + e.what());
  }
  return std::make_unique<PortableScorer>(WordTokenizer(std::move(vocab)), std::move(nodes),
                                          static_cast<std::size_t>(max_tokens));
}

}  // namespace agora
