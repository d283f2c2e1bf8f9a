#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "stancecast/common.hpp"

// Document vectorization: a shared tokenizer, a word-vector table with
// mean-of-vectors embedding, and a dependency-free hashing embedder.

namespace stancecast::embed {

// Lowercases, maps URLs to `<url>` and @mentions to `<user>`, keeps hashtags
// with their '#', strips other ASCII punctuation, splits on whitespace.
// Idempotent on its own output rejoined with spaces.
std::vector<std::string> tokenize(const std::string& text);

struct WordVectorTable {
  std::size_t dimension = 0;
  std::unordered_map<std::string, std::vector<double>> entries;
  std::int64_t duplicate_tokens = 0;  // later duplicates dropped, first wins
};

// File format: optional "count dim" header line, then `token v1 ... vd`.
// Inconsistent dimension or a non-numeric component is fatal.
WordVectorTable load_vectors(const std::string& path);

struct EmbeddingVector {
  std::vector<double> values;
  std::string source;      // embedder identifier
  bool no_vocab = false;   // empty document or no in-vocabulary token
};

// Mean of in-vocabulary token vectors; zero vector with no_vocab set when
// nothing matches.
EmbeddingVector embed_document(const std::string& document,
                               const WordVectorTable& table);

// Each token hashes to (index, sign); the vector is the L2-normalized signed
// count profile. Deterministic for a fixed seed.
EmbeddingVector embed_document_hashed(const std::string& document,
                                      std::size_t dimension,
                                      std::uint64_t seed);

// Pluggable embedder used by the pipeline. Identifiers:
//   "hashed:<dim>:<seed>"  hashing embedder
//   "wordvec:<dim>"        mean of word vectors from a loaded table
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::string id() const = 0;
  virtual EmbeddingVector embed(const std::string& document) const = 0;
};

std::unique_ptr<Embedder> make_hashed_embedder(std::size_t dimension,
                                               std::uint64_t seed);
std::unique_ptr<Embedder> make_wordvec_embedder(WordVectorTable table);

// Builds an embedder from its identifier. A wordvec id needs `vectors_path`;
// the loaded table's dimension must match the id. UsageError on a malformed
// id, DataError on a table mismatch.
std::unique_ptr<Embedder> make_embedder(const std::string& id,
                                        const std::string& vectors_path = "");

}  // namespace stancecast::embed
