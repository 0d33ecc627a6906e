#include "bnq/dates.hpp"

#include <charconv>
#include <cstdio>

#include "bnq/errors.hpp"

namespace bnq {

Day parse_date(std::string_view text) {
    int y = 0;
    unsigned m = 0, d = 0;
    auto field = [&](std::size_t pos, std::size_t len, auto& out) {
        if (text.size() < pos + len) return false;
        const auto* first = text.data() + pos;
        const auto [ptr, ec] = std::from_chars(first, first + len, out);
        return ec == std::errc{} && ptr == first + len;
    };
    const bool shape = text.size() >= 10 && text[4] == '-' && text[7] == '-' &&
                       (text.size() == 10 || text[10] == 'T' || text[10] == ' ');
    if (!shape || !field(0, 4, y) || !field(5, 2, m) || !field(8, 2, d)) {
        throw ParseError(0, "malformed date '" + std::string(text) + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw ParseError(0, "invalid date '" + std::string(text) + "'");
    return Day{ymd};
}

std::string format_date(Day day) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace bnq
