#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "badx/http_transport.hpp"
#include "badx/text.hpp"

namespace badx {

using Vector = std::vector<double>;

double dot(const Vector& u, const Vector& v);
double l2_norm(const Vector& v);

// Cosine similarity clamped to [-1, 1]. Throws DimMismatch / ZeroNorm.
double cosine(const Vector& u, const Vector& v);

// ---------------------------------------------------------------------------
// Word-vector text files ("term v1 v2 ... vd", optional "count dim" header).

using WordVectorMap = std::map<std::string, Vector>;

WordVectorMap parse_word_vectors(std::istream& source,
                                 std::optional<int> dim_hint = std::nullopt);
WordVectorMap load_word_vectors(const std::string& path);

// Writes "count dim" header then one line per term (sorted), components at
// 17 significant digits so parse ∘ serialize round-trips bit-exactly.
void serialize_word_vectors(const WordVectorMap& vectors, std::ostream& out);

// ---------------------------------------------------------------------------
// Hash-seeded unit vector, bit-exact across platforms. FNV-1a-64 over the
// token's UTF-8 bytes seeds a SplitMix64 stream; component i is
// 2*((z_i >> 11) * 2^-53) - 1; the result is L2-normalized (e1 if the
// pre-normalization norm is below 1e-12).
Vector deterministic_embed(std::string_view token, int dim);

// ---------------------------------------------------------------------------
// Providers.

enum class ProviderKind { StaticFile, Remote, Deterministic };
const char* to_string(ProviderKind kind);
ProviderKind provider_kind_from_string(std::string_view s);

struct ProviderConfig {
  ProviderKind kind = ProviderKind::Deterministic;
  std::string model_id;
  std::string endpoint;    // remote only
  int dim = 0;             // 0 = infer from file (static-file only)
  std::string file_path;   // static-file only
  std::string cache_path;  // optional persistent cache (remote)
};

// Append-only JSON-lines vector cache, keyed "<provider>/<model>/<hash>"
// with hash = FNV-1a-64 hex of the UTF-8 text. Safe for concurrent use.
class EmbedCache {
 public:
  // In-memory only.
  EmbedCache() = default;
  // Backed by a JSON-lines file; loads existing entries, appends new ones.
  explicit EmbedCache(const std::string& path);

  static std::string make_key(std::string_view provider_id,
                              std::string_view model_id,
                              std::string_view text);

  std::optional<Vector> get(const std::string& key) const;
  void put(const std::string& key, const Vector& vector);

  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Vector> entries_;
  std::string path_;  // empty = memory only
};

struct RemoteOptions {
  std::string bearer_token;
  RetryPolicy retry;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string provider_id() const = 0;  // cache key prefix
  virtual std::string model_id() const = 0;
  virtual int dim() const = 0;

  // Word-level lookup; nullopt when the term is out of vocabulary.
  virtual std::optional<Vector> try_embed_term(const std::string& term) = 0;

  // Text-level embedding (sentence or window). Static-file providers have
  // no composition rule for free text and throw Unsupported.
  virtual Vector embed_text(const std::string& text) = 0;

  virtual std::vector<Vector> embed_texts(const std::vector<std::string>& texts);
};

std::unique_ptr<EmbeddingProvider> make_provider(
    const ProviderConfig& config, std::shared_ptr<EmbedCache> cache = nullptr,
    const RemoteOptions& remote = {});

// One vector per text, order preserved, cache written through; cached texts
// are never re-requested. config.kind must be Remote.
std::vector<Vector> remote_embed(const std::vector<std::string>& texts,
                                 const ProviderConfig& config,
                                 std::shared_ptr<EmbedCache> cache = nullptr,
                                 const RemoteOptions& remote = {});

// Embedding of a mention in context: the vector of the whole sentence
// window containing span.
Vector mention_embed(std::string_view text, CharSpan span,
                     EmbeddingProvider& provider);

}  // namespace badx
