#pragma once

// Internal helpers shared by the parsing/serialization code. Not installed.

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include "badx/error.hpp"
#include "json.hpp"

namespace badx::jsonu {

using json = nlohmann::json;

// Parse with badx errors instead of nlohmann exceptions.
json parse_file(const std::string& path);
json parse_text(std::string_view text, const std::string& what);

// Compact dump with lexicographically sorted keys; the canonical form used
// for fingerprints and cache keys. nlohmann's default map keeps keys sorted,
// but inputs may arrive as ordered_json, so re-build defensively.
std::string canonical(const json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// Strictness: every key must be declared either required or optional.
void require_keys(const json& obj, const std::string& context,
                  std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional = {});

std::string get_string(const json& obj, const char* key,
                       const std::string& context);
double get_double(const json& obj, const char* key,
                  const std::string& context);
std::int64_t get_int(const json& obj, const char* key,
                     const std::string& context);
const json& get_array(const json& obj, const char* key,
                      const std::string& context);
const json& get_object(const json& obj, const char* key,
                       const std::string& context);

}  // namespace badx::jsonu
