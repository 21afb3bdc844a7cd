#include "json_util.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace badx::jsonu {

json parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Io, "cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw Error(ErrorKind::Schema, path + " is not valid JSON");
  return j;
}

json parse_text(std::string_view text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw Error(ErrorKind::Schema, what + " is not valid JSON");
  return j;
}

std::string canonical(const json& j) {
  // json (as opposed to ordered_json) keeps object keys sorted; a round trip
  // through it normalizes whatever ordering the input carried.
  json sorted = json::parse(j.dump());
  return sorted.dump();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorKind::Io, "cannot write " + path);
  out.write(content.data(),
            static_cast<std::streamsize>(content.size()));
  if (!out)
    throw Error(ErrorKind::Io, "short write to " + path);
}

void require_keys(const json& obj, const std::string& context,
                  std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional) {
  if (!obj.is_object())
    throw Error(ErrorKind::Schema, context + " must be a JSON object");
  for (const char* key : required) {
    if (!obj.contains(key))
      throw Error(ErrorKind::Schema,
                  context + " is missing required key \"" + key + "\"");
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* k : required)
      if (key == k) { known = true; break; }
    if (!known)
      for (const char* k : optional)
        if (key == k) { known = true; break; }
    if (!known)
      throw Error(ErrorKind::UnknownKey,
                  "unknown key \"" + key + "\" in " + context);
  }
}

namespace {
const json& fetch(const json& obj, const char* key, const std::string& context) {
  if (!obj.is_object() || !obj.contains(key))
    throw Error(ErrorKind::Schema,
                context + " is missing required key \"" + key + "\"");
  return obj.at(key);
}
}  // namespace

std::string get_string(const json& obj, const char* key,
                       const std::string& context) {
  const json& v = fetch(obj, key, context);
  if (!v.is_string())
    throw Error(ErrorKind::Schema,
                context + "." + key + " must be a string");
  return v.get<std::string>();
}

double get_double(const json& obj, const char* key,
                  const std::string& context) {
  const json& v = fetch(obj, key, context);
  if (!v.is_number())
    throw Error(ErrorKind::Schema,
                context + "." + key + " must be a number");
  return v.get<double>();
}

std::int64_t get_int(const json& obj, const char* key,
                     const std::string& context) {
  const json& v = fetch(obj, key, context);
  if (!v.is_number_integer())
    throw Error(ErrorKind::Schema,
                context + "." + key + " must be an integer");
  return v.get<std::int64_t>();
}

const json& get_array(const json& obj, const char* key,
                      const std::string& context) {
  const json& v = fetch(obj, key, context);
  if (!v.is_array())
    throw Error(ErrorKind::Schema,
                context + "." + key + " must be an array");
  return v;
}

const json& get_object(const json& obj, const char* key,
                       const std::string& context) {
  const json& v = fetch(obj, key, context);
  if (!v.is_object())
    throw Error(ErrorKind::Schema,
                context + "." + key + " must be an object");
  return v;
}

}  // namespace badx::jsonu
