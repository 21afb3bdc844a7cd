#pragma once

// Internal: wall-clock formatting. Run orchestration takes an injectable
// clock so replayed runs can pin timestamps; this is the default source.

#include <string>

namespace badx {

// "YYYY-MM-DDTHH:MM:SSZ", UTC.
std::string iso8601_utc_now();

}  // namespace badx
