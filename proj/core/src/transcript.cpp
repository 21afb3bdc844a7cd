#include <filesystem>
#include <fstream>

#include "badx/error.hpp"
#include "badx/llm_client.hpp"
#include "json_util.hpp"

namespace badx {

TranscriptStore::TranscriptStore(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec)
    throw Error(ErrorKind::Io,
                "cannot create transcript directory " + dir_ + ": " +
                    ec.message());
}

std::string TranscriptStore::path_for(const std::string& fingerprint) const {
  return dir_ + "/" + fingerprint + ".jsonl";
}

void TranscriptStore::append(const std::string& fingerprint,
                             const std::string& request_json, int status,
                             const std::string& response_body,
                             const std::string& timestamp) {
  jsonu::json line;
  line["fp"] = fingerprint;
  line["request"] = jsonu::parse_text(request_json, "transcript request");
  jsonu::json response;
  response["status"] = status;
  jsonu::json body = jsonu::json::parse(response_body, nullptr, false);
  if (body.is_discarded())
    response["body"] = response_body;  // non-JSON bodies kept verbatim
  else
    response["body"] = std::move(body);
  line["response"] = std::move(response);
  line["t"] = timestamp;

  std::lock_guard lock(mu_);
  std::ofstream out(path_for(fingerprint), std::ios::binary | std::ios::app);
  if (!out)
    throw Error(ErrorKind::Io, "cannot append to transcript for fingerprint " +
                                   fingerprint);
  out << line.dump() << '\n';
}

std::vector<std::string> TranscriptStore::read_lines(
    const std::string& fingerprint) const {
  std::lock_guard lock(mu_);
  std::ifstream in(path_for(fingerprint), std::ios::binary);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

bool TranscriptStore::has(const std::string& fingerprint) const {
  std::lock_guard lock(mu_);
  return std::filesystem::exists(path_for(fingerprint));
}

}  // namespace badx
