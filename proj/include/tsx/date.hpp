#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tsx::date {

/// Serial day number for a civil date (days since 1970-01-01, negative before).
std::int64_t from_civil(int year, unsigned month, unsigned day);

/// Inverse of from_civil.
void to_civil(std::int64_t serial, int& year, unsigned& month, unsigned& day);

/// Day of week, Monday = 0 .. Sunday = 6.
int day_of_week(std::int64_t serial);

/// Day of month, 1..31.
int day_of_month(std::int64_t serial);

/// Month, 1..12.
int month(std::int64_t serial);

/// ISO-8601 week number, 1..53.
int iso_week(std::int64_t serial);

/// Parse a strict ISO-8601 calendar date "YYYY-MM-DD". Throws
/// std::invalid_argument on malformed input or out-of-range components.
std::int64_t parse(std::string_view text);

/// Format a serial day as "YYYY-MM-DD".
std::string format(std::int64_t serial);

}  // namespace tsx::date
