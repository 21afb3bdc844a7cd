#include "badx/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "badx/error.hpp"
#include "badx/hash.hpp"
#include "timeutil.hpp"

namespace badx {

std::string iso8601_utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[80];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

double dot(const Vector& u, const Vector& v) {
  if (u.size() != v.size())
    throw Error(ErrorKind::DimMismatch,
                "vector dims differ: " + std::to_string(u.size()) + " vs " +
                    std::to_string(v.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

double l2_norm(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double cosine(const Vector& u, const Vector& v) {
  double d = dot(u, v);  // also checks dims
  double nu = l2_norm(u);
  double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0)
    throw Error(ErrorKind::ZeroNorm, "cosine of a zero-norm vector");
  return std::clamp(d / (nu * nv), -1.0, 1.0);
}

namespace {

// Whitespace-separated fields of one line.
std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() &&
           std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t begin = i;
    while (i < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > begin) out.push_back(line.substr(begin, i - begin));
  }
  return out;
}

bool parse_double_field(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool is_uint_field(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

}  // namespace

WordVectorMap parse_word_vectors(std::istream& source,
                                 std::optional<int> dim_hint) {
  WordVectorMap out;
  int established_dim = dim_hint.value_or(0);
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_fields(line);
    if (fields.empty()) continue;

    if (first) {
      first = false;
      // A first line of exactly two integer tokens is a "count dim" header.
      if (fields.size() == 2 && is_uint_field(fields[0]) &&
          is_uint_field(fields[1])) {
        int header_dim = 0;
        std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(),
                        header_dim);
        if (established_dim > 0 && header_dim != established_dim)
          throw Error(ErrorKind::DimMismatch,
                      "line 1: header dim " + std::to_string(header_dim) +
                          " conflicts with expected dim " +
                          std::to_string(established_dim));
        established_dim = header_dim;
        continue;
      }
    }

    if (fields.size() < 2)
      throw Error(ErrorKind::Parse,
                  "line " + std::to_string(line_no) +
                      ": expected \"term v1 ... vd\"");
    std::string term(fields[0]);
    Vector vec;
    vec.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double value = 0.0;
      if (!parse_double_field(fields[i], value))
        throw Error(ErrorKind::Parse,
                    "line " + std::to_string(line_no) +
                        ": component " + std::to_string(i) + " (\"" +
                        std::string(fields[i]) + "\") is not a finite number");
      vec.push_back(value);
    }
    int row_dim = static_cast<int>(vec.size());
    if (established_dim == 0) {
      established_dim = row_dim;
    } else if (row_dim != established_dim) {
      throw Error(ErrorKind::DimMismatch,
                  "line " + std::to_string(line_no) + ": row has " +
                      std::to_string(row_dim) + " components, expected " +
                      std::to_string(established_dim));
    }
    auto [it, inserted] = out.emplace(std::move(term), std::move(vec));
    if (!inserted)
      throw Error(ErrorKind::DuplicateId,
                  "line " + std::to_string(line_no) + ": duplicate term \"" +
                      it->first + "\"");
  }
  return out;
}

WordVectorMap load_word_vectors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Io, "cannot open word-vector file " + path);
  return parse_word_vectors(in);
}

void serialize_word_vectors(const WordVectorMap& vectors, std::ostream& out) {
  std::size_t dim = vectors.empty() ? 0 : vectors.begin()->second.size();
  out << vectors.size() << ' ' << dim << '\n';
  char buf[64];
  for (const auto& [term, vec] : vectors) {
    out << term;
    for (double v : vec) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

Vector deterministic_embed(std::string_view token, int dim) {
  if (dim < 2)
    throw Error(ErrorKind::InvalidDim,
                "embedding dim must be >= 2, got " + std::to_string(dim));
  if (token.empty())
    throw Error(ErrorKind::EmptyInput, "cannot embed an empty token");

  SplitMix64 rng(fnv1a64(token));
  Vector v(static_cast<std::size_t>(dim));
  for (double& component : v) component = 2.0 * rng.next_double() - 1.0;

  double norm = l2_norm(v);
  if (norm < 1e-12) {
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1.0;
    return v;
  }
  for (double& component : v) component /= norm;
  return v;
}

Vector mention_embed(std::string_view text, CharSpan span,
                     EmbeddingProvider& provider) {
  if (span.begin >= span.end || span.end > text.size())
    throw Error(ErrorKind::SpanOutOfBounds,
                "span [" + std::to_string(span.begin) + ", " +
                    std::to_string(span.end) + ") not within text of " +
                    std::to_string(text.size()) + " bytes");
  CharSpan window = sentence_window_at(text, span.begin);
  return provider.embed_text(
      std::string(text.substr(window.begin, window.size())));
}

}  // namespace badx
