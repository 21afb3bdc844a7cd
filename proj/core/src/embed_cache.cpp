#include <filesystem>
#include <fstream>

#include "badx/embedding.hpp"
#include "badx/error.hpp"
#include "badx/hash.hpp"
#include "json_util.hpp"
#include "timeutil.hpp"

namespace badx {

EmbedCache::EmbedCache(const std::string& path) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return;  // nothing cached yet; file is created on first put
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    jsonu::json j = jsonu::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      // A torn final line is the expected crash-mid-append artifact; a bad
      // line in the middle means the file is corrupt.
      if (in.peek() == EOF) break;
      throw Error(ErrorKind::Schema, path + ":" + std::to_string(line_no) +
                                         ": invalid cache line");
    }
    if (!j.is_object() || !j.contains("k") || !j.contains("v"))
      throw Error(ErrorKind::Schema, path + ":" + std::to_string(line_no) +
                                         ": cache line missing k/v");
    std::string key = j.at("k").get<std::string>();
    Vector vec = j.at("v").get<Vector>();
    entries_.emplace(std::move(key), std::move(vec));  // first wins
  }
}

std::string EmbedCache::make_key(std::string_view provider_id,
                                 std::string_view model_id,
                                 std::string_view text) {
  return std::string(provider_id) + "/" + std::string(model_id) + "/" +
         fnv1a64_hex(text);
}

std::optional<Vector> EmbedCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbedCache::put(const std::string& key, const Vector& vector) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = entries_.emplace(key, vector);
  if (!inserted) return;  // entries are immutable once stored
  if (path_.empty()) return;

  std::filesystem::path p(path_);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorKind::Io, "cannot append to cache " + path_);
  jsonu::json j;
  j["k"] = key;
  j["v"] = vector;
  j["t"] = iso8601_utc_now();
  out << j.dump() << '\n';
}

std::size_t EmbedCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

}  // namespace badx
