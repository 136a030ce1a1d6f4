#pragma once

#include "ledgerscope/types.hpp"

#include <string>
#include <string_view>

namespace ledgerscope {

// Accepts unix seconds ("1325376000") or ISO-8601 UTC dates and date-times:
// "2012-01-01", "2012-01-01T12:30:00Z", "2012-01-01 12:30:00",
// "2012-01-01T12:30:00+02:00". Throws InvalidArgument otherwise.
UnixSeconds parse_time(std::string_view text);

// "2012-01-01T12:30:00Z"
std::string format_iso8601(UnixSeconds t);

UnixSeconds now_unix();

}  // namespace ledgerscope
