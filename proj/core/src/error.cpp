#include "badx/error.hpp"

namespace badx {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::DuplicateId: return "duplicate-id";
    case ErrorKind::EmptyCorpus: return "empty-corpus";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::DimMismatch: return "dim-mismatch";
    case ErrorKind::ZeroNorm: return "zero-norm";
    case ErrorKind::InvalidDim: return "invalid-dim";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Network: return "network";
    case ErrorKind::Auth: return "auth";
    case ErrorKind::RateLimited: return "rate-limited";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::MalformedResponse: return "malformed-response";
    case ErrorKind::FixtureMissing: return "fixture-missing";
    case ErrorKind::EmptySet: return "empty-set";
    case ErrorKind::DegenerateSpread: return "degenerate-spread";
    case ErrorKind::CombinatorialLimit: return "combinatorial-limit";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::InsufficientSamples: return "insufficient-samples";
    case ErrorKind::WrongArity: return "wrong-arity";
    case ErrorKind::UnresolvableLexicon: return "unresolvable-lexicon";
    case ErrorKind::SpanOutOfBounds: return "span-out-of-bounds";
    case ErrorKind::DegenerateDesign: return "degenerate-design";
    case ErrorKind::DegenerateData: return "degenerate-data";
    case ErrorKind::Config: return "config";
    case ErrorKind::UnknownKey: return "unknown-key";
    case ErrorKind::Interrupted: return "interrupted";
  }
  return "unknown";
}

}  // namespace badx
