#include "stancecast/embed.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace stancecast::embed {

namespace {

bool is_keep_char(unsigned char c) {
  return std::isalnum(c) || c == '#' || c >= 0x80;
}

bool has_substance(const std::string& token) {
  for (unsigned char c : token)
    if (std::isalnum(c) || c >= 0x80) return true;
  return false;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  for (const auto& raw : split_whitespace(text)) {
    std::string low = lowercase_ascii(raw);
    if (low == "<url>" || low == "<user>") {  // idempotence on own output
      tokens.push_back(low);
      continue;
    }
    if (low.rfind("http://", 0) == 0 || low.rfind("https://", 0) == 0 ||
        low.rfind("www.", 0) == 0) {
      tokens.push_back("<url>");
      continue;
    }
    if (low[0] == '@') {
      tokens.push_back("<user>");
      continue;
    }
    std::string cleaned;
    cleaned.reserve(low.size());
    for (unsigned char c : low)
      if (is_keep_char(c)) cleaned.push_back(static_cast<char>(c));
    if (!has_substance(cleaned)) continue;
    tokens.push_back(std::move(cleaned));
  }
  return tokens;
}

WordVectorTable load_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vector file: " + path);

  WordVectorTable table;
  std::string line;
  std::size_t line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;

    if (first_content_line && fields.size() == 2) {
      // "count dim" header; both fields must be integers.
      char* end0 = nullptr;
      char* end1 = nullptr;
      long count = std::strtol(fields[0].c_str(), &end0, 10);
      long dim = std::strtol(fields[1].c_str(), &end1, 10);
      if (*end0 == '\0' && *end1 == '\0' && count >= 0 && dim > 0) {
        table.dimension = static_cast<std::size_t>(dim);
        first_content_line = false;
        continue;
      }
    }
    first_content_line = false;

    if (fields.size() < 2)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected `token v1 ... vd`");
    const std::size_t d = fields.size() - 1;
    if (table.dimension == 0) {
      table.dimension = d;
    } else if (d != table.dimension) {
      throw DataError(path + ":" + std::to_string(line_no) + ": dimension " +
                      std::to_string(d) + " != expected " +
                      std::to_string(table.dimension));
    }
    std::vector<double> vec(d);
    for (std::size_t i = 0; i < d; ++i) {
      char* end = nullptr;
      vec[i] = std::strtod(fields[i + 1].c_str(), &end);
      if (end == fields[i + 1].c_str() || *end != '\0' ||
          !std::isfinite(vec[i]))
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": non-numeric vector component '" + fields[i + 1] +
                        "'");
    }
    std::string token = lowercase_ascii(fields[0]);
    if (table.entries.count(token)) {
      ++table.duplicate_tokens;
      continue;  // first wins
    }
    table.entries.emplace(std::move(token), std::move(vec));
  }
  if (table.entries.empty())
    throw DataError(path + ": vector file has no entries");
  return table;
}

EmbeddingVector embed_document(const std::string& document,
                               const WordVectorTable& table) {
  EmbeddingVector out;
  out.values.assign(table.dimension, 0.0);
  out.source = "wordvec:" + std::to_string(table.dimension);

  std::size_t matched = 0;
  for (const auto& token : tokenize(document)) {
    auto it = table.entries.find(token);
    if (it == table.entries.end()) continue;
    for (std::size_t i = 0; i < table.dimension; ++i)
      out.values[i] += it->second[i];
    ++matched;
  }
  if (matched == 0) {
    out.no_vocab = true;
    return out;
  }
  for (auto& v : out.values) v /= static_cast<double>(matched);
  return out;
}

EmbeddingVector embed_document_hashed(const std::string& document,
                                      std::size_t dimension,
                                      std::uint64_t seed) {
  EmbeddingVector out;
  out.values.assign(dimension, 0.0);
  out.source =
      "hashed:" + std::to_string(dimension) + ":" + std::to_string(seed);

  auto tokens = tokenize(document);
  if (tokens.empty()) {
    out.no_vocab = true;
    return out;
  }
  for (const auto& token : tokens) {
    std::uint64_t h = splitmix64(fnv1a64(token) ^ seed);
    std::size_t index = static_cast<std::size_t>(h % dimension);
    double sign = ((h >> 63) & 1u) ? -1.0 : 1.0;
    out.values[index] += sign;
  }
  double norm = 0.0;
  for (double v : out.values) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    // Signed counts can cancel exactly; treat as no usable signal.
    out.no_vocab = true;
    return out;
  }
  for (auto& v : out.values) v /= norm;
  return out;
}

namespace {

class HashedEmbedder final : public Embedder {
 public:
  HashedEmbedder(std::size_t dimension, std::uint64_t seed)
      : dimension_(dimension), seed_(seed) {}
  std::size_t dimension() const override { return dimension_; }
  std::string id() const override {
    return "hashed:" + std::to_string(dimension_) + ":" +
           std::to_string(seed_);
  }
  EmbeddingVector embed(const std::string& document) const override {
    return embed_document_hashed(document, dimension_, seed_);
  }

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

class WordVecEmbedder final : public Embedder {
 public:
  explicit WordVecEmbedder(WordVectorTable table) : table_(std::move(table)) {}
  std::size_t dimension() const override { return table_.dimension; }
  std::string id() const override {
    return "wordvec:" + std::to_string(table_.dimension);
  }
  EmbeddingVector embed(const std::string& document) const override {
    return embed_document(document, table_);
  }

 private:
  WordVectorTable table_;
};

}  // namespace

std::unique_ptr<Embedder> make_hashed_embedder(std::size_t dimension,
                                               std::uint64_t seed) {
  if (dimension < 2) throw UsageError("hashed embedder needs dimension >= 2");
  return std::make_unique<HashedEmbedder>(dimension, seed);
}

std::unique_ptr<Embedder> make_wordvec_embedder(WordVectorTable table) {
  if (table.dimension == 0 || table.entries.empty())
    throw DataError("wordvec embedder needs a non-empty vector table");
  return std::make_unique<WordVecEmbedder>(std::move(table));
}

std::unique_ptr<Embedder> make_embedder(const std::string& id,
                                        const std::string& vectors_path) {
  auto parts = split_char(id, ':');
  auto parse_u64 = [&](const std::string& s) -> std::uint64_t {
    char* end = nullptr;
    unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0')
      throw UsageError("bad embedder id '" + id + "': '" + s +
                       "' is not an integer");
    return v;
  };
  if (parts.size() == 3 && parts[0] == "hashed") {
    std::uint64_t dim = parse_u64(parts[1]);
    if (dim < 2) throw UsageError("hashed embedder needs dimension >= 2");
    return make_hashed_embedder(static_cast<std::size_t>(dim),
                                parse_u64(parts[2]));
  }
  if (parts.size() == 2 && parts[0] == "wordvec") {
    std::uint64_t dim = parse_u64(parts[1]);
    if (vectors_path.empty())
      throw UsageError("embedder '" + id + "' needs a word-vector file");
    auto table = load_vectors(vectors_path);
    if (table.dimension != dim)
      throw DataError("vector file dimension " +
                      std::to_string(table.dimension) +
                      " does not match embedder id '" + id + "'");
    return make_wordvec_embedder(std::move(table));
  }
  throw UsageError("unknown embedder id '" + id +
                   "' (want hashed:<dim>:<seed> or wordvec:<dim>)");
}

}  // namespace stancecast::embed
