#include "ledgerscope/timefmt.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace ledgerscope {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    for (std::size_t i = pos; i < pos + len; ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return true;
}

[[noreturn]] void bad(std::string_view text) {
    throw InvalidArgument("invalid time '" + std::string(text) + "'; use unix seconds or ISO-8601");
}

}  // namespace

UnixSeconds parse_time(std::string_view text) {
    if (text.empty()) bad(text);
    if (text.find('-', 1) == std::string_view::npos) {
        UnixSeconds v = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || p != text.data() + text.size()) bad(text);
        return v;
    }

    int y, mo, d, h = 0, mi = 0, sec = 0;
    if (!read_int(text, 0, 4, y) || text.size() < 10 || text[4] != '-' || !read_int(text, 5, 2, mo) ||
        text[7] != '-' || !read_int(text, 8, 2, d))
        bad(text);
    std::size_t pos = 10;
    if (pos < text.size()) {
        if (text[pos] != 'T' && text[pos] != ' ') bad(text);
        if (!read_int(text, pos + 1, 2, h) || text.size() < pos + 6 || text[pos + 3] != ':' ||
            !read_int(text, pos + 4, 2, mi))
            bad(text);
        pos += 6;
        if (pos < text.size() && text[pos] == ':') {
            if (!read_int(text, pos + 1, 2, sec)) bad(text);
            pos += 3;
        }
    }
    int offset = 0;
    if (pos < text.size()) {
        if (text[pos] == 'Z' && pos + 1 == text.size()) {
            ++pos;
        } else if (text[pos] == '+' || text[pos] == '-') {
            int oh, om;
            if (text.size() != pos + 6 || !read_int(text, pos + 1, 2, oh) || text[pos + 3] != ':' ||
                !read_int(text, pos + 4, 2, om))
                bad(text);
            offset = (oh * 3600 + om * 60) * (text[pos] == '-' ? -1 : 1);
            pos = text.size();
        } else {
            bad(text);
        }
    }
    if (h > 23 || mi > 59 || sec > 60) bad(text);

    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) bad(text);
    const auto days_since = sys_days{ymd}.time_since_epoch().count();
    return static_cast<UnixSeconds>(days_since) * kSecondsPerDay + h * 3600 + mi * 60 + sec - offset;
}

std::string format_iso8601(UnixSeconds t) {
    using namespace std::chrono;
    const auto d = day_of(t);
    const year_month_day ymd{sys_days{days{d}}};
    const auto secs = t - d * kSecondsPerDay;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60));
    return buf;
}

UnixSeconds now_unix() {
    using namespace std::chrono;
    return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace ledgerscope
