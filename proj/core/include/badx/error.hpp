#pragma once

#include <stdexcept>
#include <string>

namespace badx {

// Every failure surfaced by the library carries one of these kinds so that
// callers (and the CLI exit-code mapping) can react without string matching.
enum class ErrorKind {
  Io,                  // file missing / unreadable / unwritable
  Schema,              // structural problem in an input document
  DuplicateId,
  EmptyCorpus,
  Parse,               // malformed word-vector line, bad number, etc.
  DimMismatch,
  ZeroNorm,
  InvalidDim,
  Unsupported,         // operation not available on this provider kind
  Network,             // transport failure or exhausted 5xx retries
  Auth,                // 401/403 from a provider
  RateLimited,         // 429 still failing after backoff
  Protocol,            // unexpected HTTP status
  MalformedResponse,   // 2xx body that does not match the wire contract
  FixtureMissing,      // replay store has no recording for a request
  EmptySet,
  DegenerateSpread,    // all association values identical; no effect size
  CombinatorialLimit,  // exact permutation test too large
  EmptyInput,
  InsufficientSamples,
  WrongArity,
  UnresolvableLexicon, // a stimulus side ends up empty after fallbacks
  SpanOutOfBounds,
  DegenerateDesign,    // regression design matrix not solvable
  DegenerateData,      // e.g. zero-spread sample handed to a density fit
  Config,              // semantic problem in an audit config
  UnknownKey,          // strict parsing found an unrecognized field
  Interrupted,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace badx
