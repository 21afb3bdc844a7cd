#include <algorithm>
#include <cmath>
#include <utility>

#include "badx/embedding.hpp"
#include "badx/error.hpp"
#include "json_util.hpp"

namespace badx {

const char* to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::StaticFile: return "static-file";
    case ProviderKind::Remote: return "remote";
    case ProviderKind::Deterministic: return "deterministic";
  }
  return "unknown";
}

ProviderKind provider_kind_from_string(std::string_view s) {
  if (s == "static-file") return ProviderKind::StaticFile;
  if (s == "remote") return ProviderKind::Remote;
  if (s == "deterministic") return ProviderKind::Deterministic;
  throw Error(ErrorKind::Config,
              "unknown provider kind \"" + std::string(s) +
                  "\" (expected static-file, remote or deterministic)");
}

std::vector<Vector> EmbeddingProvider::embed_texts(
    const std::vector<std::string>& texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_text(t));
  return out;
}

namespace {

class DeterministicProvider final : public EmbeddingProvider {
 public:
  explicit DeterministicProvider(ProviderConfig config)
      : config_(std::move(config)) {}

  std::string provider_id() const override { return "deterministic"; }
  std::string model_id() const override { return config_.model_id; }
  int dim() const override { return config_.dim; }

  std::optional<Vector> try_embed_term(const std::string& term) override {
    return deterministic_embed(term, config_.dim);
  }

  Vector embed_text(const std::string& text) override {
    return deterministic_embed(text, config_.dim);
  }

 private:
  ProviderConfig config_;
};

class StaticFileProvider final : public EmbeddingProvider {
 public:
  explicit StaticFileProvider(ProviderConfig config)
      : config_(std::move(config)),
        vectors_(load_word_vectors(config_.file_path)) {
    if (vectors_.empty())
      throw Error(ErrorKind::EmptyInput,
                  "word-vector file " + config_.file_path + " has no terms");
    int file_dim = static_cast<int>(vectors_.begin()->second.size());
    if (config_.dim > 0 && config_.dim != file_dim)
      throw Error(ErrorKind::DimMismatch,
                  "config dim " + std::to_string(config_.dim) +
                      " but file vectors have dim " + std::to_string(file_dim));
    dim_ = file_dim;
  }

  std::string provider_id() const override { return "static-file"; }
  std::string model_id() const override { return config_.model_id; }
  int dim() const override { return dim_; }

  std::optional<Vector> try_embed_term(const std::string& term) override {
    auto it = vectors_.find(term);
    if (it != vectors_.end()) return it->second;
    it = vectors_.find(to_lower_ascii(term));
    if (it != vectors_.end()) return it->second;
    return std::nullopt;
  }

  Vector embed_text(const std::string&) override {
    throw Error(ErrorKind::Unsupported,
                "static-file provider has no text-level embeddings; bind a "
                "remote or deterministic provider for sentence inputs");
  }

 private:
  ProviderConfig config_;
  WordVectorMap vectors_;
  int dim_ = 0;
};

class RemoteProvider final : public EmbeddingProvider {
 public:
  RemoteProvider(ProviderConfig config, std::shared_ptr<EmbedCache> cache,
                 RemoteOptions options)
      : config_(std::move(config)),
        cache_(std::move(cache)),
        options_(std::move(options)) {
    if (!cache_) {
      cache_ = config_.cache_path.empty()
                   ? std::make_shared<EmbedCache>()
                   : std::make_shared<EmbedCache>(config_.cache_path);
    }
  }

  std::string provider_id() const override { return "remote"; }
  std::string model_id() const override { return config_.model_id; }
  int dim() const override { return config_.dim; }

  std::optional<Vector> try_embed_term(const std::string& term) override {
    return embed_text(term);
  }

  Vector embed_text(const std::string& text) override {
    return embed_texts({text}).front();
  }

  std::vector<Vector> embed_texts(
      const std::vector<std::string>& texts) override {
    std::vector<Vector> out(texts.size());
    std::vector<std::string> keys(texts.size());
    std::vector<std::string> pending;  // unique uncached texts, first-seen order
    for (std::size_t i = 0; i < texts.size(); ++i) {
      keys[i] = EmbedCache::make_key(provider_id(), config_.model_id, texts[i]);
      if (auto hit = cache_->get(keys[i])) {
        out[i] = std::move(*hit);
      } else if (std::find(pending.begin(), pending.end(), texts[i]) ==
                 pending.end()) {
        pending.push_back(texts[i]);
      }
    }
    if (!pending.empty()) {
      fetch_batch(pending);
      for (std::size_t i = 0; i < texts.size(); ++i) {
        if (out[i].empty()) {
          auto hit = cache_->get(keys[i]);
          if (!hit)
            throw Error(ErrorKind::Protocol,
                        "embedding endpoint response did not cover input " +
                            std::to_string(i));
          out[i] = std::move(*hit);
        }
      }
    }
    return out;
  }

 private:
  void fetch_batch(const std::vector<std::string>& inputs) {
    jsonu::json payload;
    payload["model"] = config_.model_id;
    payload["input"] = inputs;

    std::map<std::string, std::string> headers;
    if (!options_.bearer_token.empty())
      headers["Authorization"] = "Bearer " + options_.bearer_token;

    HttpResponse resp =
        http_post_json_with_retry(config_.endpoint + "/v1/embeddings",
                                  payload.dump(), headers, options_.retry);
    if (resp.status == 401 || resp.status == 403)
      throw Error(ErrorKind::Auth,
                  "embedding endpoint rejected credentials (HTTP " +
                      std::to_string(resp.status) +
                      "); set BADX_API_KEY or the per-model variant");
    if (resp.status == 429)
      throw Error(ErrorKind::RateLimited,
                  "embedding endpoint still rate-limiting after retries");
    if (resp.status == 0 || (resp.status >= 500 && resp.status <= 599))
      throw Error(ErrorKind::Network,
                  "embedding request failed after retries: " +
                      (resp.status == 0 ? resp.body
                                        : "HTTP " + std::to_string(resp.status)));
    if (resp.status < 200 || resp.status >= 300)
      throw Error(ErrorKind::Protocol,
                  "unexpected HTTP " + std::to_string(resp.status) +
                      " from embedding endpoint");

    jsonu::json body = jsonu::parse_text(resp.body, "embedding response");
    if (!body.is_object() || !body.contains("data") ||
        !body.at("data").is_array())
      throw Error(ErrorKind::Protocol,
                  "embedding response has no \"data\" array");
    const auto& data = body.at("data");
    if (data.size() != inputs.size())
      throw Error(ErrorKind::Protocol,
                  "embedding endpoint returned " + std::to_string(data.size()) +
                      " vectors for " + std::to_string(inputs.size()) +
                      " inputs");

    std::vector<bool> seen(inputs.size(), false);
    for (const auto& item : data) {
      if (!item.is_object() || !item.contains("index") ||
          !item.contains("embedding") || !item.at("embedding").is_array())
        throw Error(ErrorKind::Protocol,
                    "embedding response item missing index/embedding");
      auto idx = item.at("index").get<std::int64_t>();
      if (idx < 0 || idx >= static_cast<std::int64_t>(inputs.size()) ||
          seen[static_cast<std::size_t>(idx)])
        throw Error(ErrorKind::Protocol,
                    "embedding response has bad index " + std::to_string(idx));
      seen[static_cast<std::size_t>(idx)] = true;
      Vector vec = item.at("embedding").get<Vector>();
      if (config_.dim > 0 && static_cast<int>(vec.size()) != config_.dim)
        throw Error(ErrorKind::Protocol,
                    "embedding has dim " + std::to_string(vec.size()) +
                        ", expected " + std::to_string(config_.dim));
      for (double v : vec)
        if (!std::isfinite(v))
          throw Error(ErrorKind::Protocol,
                      "embedding contains a non-finite component");
      cache_->put(EmbedCache::make_key(provider_id(), config_.model_id,
                                       inputs[static_cast<std::size_t>(idx)]),
                  vec);
    }
  }

  ProviderConfig config_;
  std::shared_ptr<EmbedCache> cache_;
  RemoteOptions options_;
};

}  // namespace

std::unique_ptr<EmbeddingProvider> make_provider(
    const ProviderConfig& config, std::shared_ptr<EmbedCache> cache,
    const RemoteOptions& remote) {
  switch (config.kind) {
    case ProviderKind::StaticFile:
      if (config.file_path.empty())
        throw Error(ErrorKind::Config,
                    "static-file provider requires file_path");
      return std::make_unique<StaticFileProvider>(config);
    case ProviderKind::Remote:
      if (config.endpoint.empty())
        throw Error(ErrorKind::Config, "remote provider requires endpoint");
      if (config.dim <= 0)
        throw Error(ErrorKind::Config,
                    "remote provider requires a positive dim");
      return std::make_unique<RemoteProvider>(config, std::move(cache), remote);
    case ProviderKind::Deterministic:
      if (config.dim < 2)
        throw Error(ErrorKind::Config,
                    "deterministic provider requires dim >= 2");
      return std::make_unique<DeterministicProvider>(config);
  }
  throw Error(ErrorKind::Config, "unhandled provider kind");
}

std::vector<Vector> remote_embed(const std::vector<std::string>& texts,
                                 const ProviderConfig& config,
                                 std::shared_ptr<EmbedCache> cache,
                                 const RemoteOptions& remote) {
  if (config.kind != ProviderKind::Remote)
    throw Error(ErrorKind::Config, "remote_embed requires a remote provider");
  auto provider = make_provider(config, std::move(cache), remote);
  return provider->embed_texts(texts);
}

}  // namespace badx
