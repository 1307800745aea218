#include "tsx/date.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace tsx::date {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, unsigned m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return kDays[m - 1];
}

// 52 or 53 ISO weeks in a given year.
int iso_weeks_in_year(int y) {
  const int jan1 = day_of_week(from_civil(y, 1, 1));  // Monday = 0
  if (jan1 == 3) return 53;                           // starts on Thursday
  if (jan1 == 2 && is_leap(y)) return 53;             // leap year starting Wednesday
  return 52;
}

}  // namespace

// Howard Hinnant's civil-date algorithms.
std::int64_t from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void to_civil(std::int64_t serial, int& year, unsigned& month, unsigned& day) {
  serial += 719468;
  const std::int64_t era = (serial >= 0 ? serial : serial - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(serial - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = doy - (153 * mp + 2) / 5 + 1;
  month = mp + (mp < 10 ? 3 : -9);
  year = static_cast<int>(y + (month <= 2));
}

int day_of_week(std::int64_t serial) {
  // 1970-01-01 was a Thursday.
  return static_cast<int>(((serial % 7) + 7 + 3) % 7);
}

int day_of_month(std::int64_t serial) {
  int y;
  unsigned m, d;
  to_civil(serial, y, m, d);
  return static_cast<int>(d);
}

int month(std::int64_t serial) {
  int y;
  unsigned m, d;
  to_civil(serial, y, m, d);
  return static_cast<int>(m);
}

int iso_week(std::int64_t serial) {
  int y;
  unsigned m, d;
  to_civil(serial, y, m, d);
  const int doy = static_cast<int>(serial - from_civil(y, 1, 1)) + 1;
  const int dow = day_of_week(serial) + 1;  // Monday = 1 .. Sunday = 7
  const int week = (doy - dow + 10) / 7;
  if (week < 1) return iso_weeks_in_year(y - 1);
  if (week > iso_weeks_in_year(y)) return 1;
  return week;
}

std::int64_t parse(std::string_view text) {
  const auto fail = [&] {
    throw std::invalid_argument("invalid date '" + std::string(text) +
                                "' (expected YYYY-MM-DD)");
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') fail();
  int y = 0;
  unsigned m = 0, d = 0;
  const auto number = [&](std::size_t pos, std::size_t len, auto& out) {
    const char* first = text.data() + pos;
    const auto [ptr, ec] = std::from_chars(first, first + len, out);
    if (ec != std::errc() || ptr != first + len) fail();
  };
  number(0, 4, y);
  number(5, 2, m);
  number(8, 2, d);
  if (m < 1 || m > 12) fail();
  if (d < 1 || static_cast<int>(d) > days_in_month(y, m)) fail();
  return from_civil(y, m, d);
}

std::string format(std::int64_t serial) {
  int y;
  unsigned m, d;
  to_civil(serial, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
  return buf;
}

}  // namespace tsx::date
