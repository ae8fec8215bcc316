#pragma once

#include <cstdint>
#include <vector>

// Plain proleptic Gregorian date arithmetic, kept apart from the library.
namespace day_count {

bool is_leap(std::int64_t year);
int days_in_month(std::int64_t year, int month);  // month 1..12
std::int64_t days_in_year(std::int64_t year);

/// Lengths of consecutive months starting with January of first_year.
std::vector<int> month_lengths(std::int64_t first_year, std::int64_t years);

/// Smallest number of days after which the sequence of month lengths
/// starting at January of first_year repeats, searched over whole years up
/// to max_years.
std::int64_t month_cycle_days(std::int64_t first_year, std::int64_t max_years);

} // namespace day_count
