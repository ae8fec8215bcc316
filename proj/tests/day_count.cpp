#include "day_count.hpp"

namespace day_count {

bool is_leap(std::int64_t year)
{
    if (year % 400 == 0)
        return true;
    if (year % 100 == 0)
        return false;
    return year % 4 == 0;
}

int days_in_month(std::int64_t year, int month)
{
    switch (month) {
    case 2:
        return is_leap(year) ? 29 : 28;
    case 4:
    case 6:
    case 9:
    case 11:
        return 30;
    default:
        return 31;
    }
}

std::int64_t days_in_year(std::int64_t year)
{
    std::int64_t total = 0;
    for (int m = 1; m <= 12; ++m)
        total += days_in_month(year, m);
    return total;
}

std::vector<int> month_lengths(std::int64_t first_year, std::int64_t years)
{
    std::vector<int> out;
    for (std::int64_t y = first_year; y < first_year + years; ++y)
        for (int m = 1; m <= 12; ++m)
            out.push_back(days_in_month(y, m));
    return out;
}

std::int64_t month_cycle_days(std::int64_t first_year, std::int64_t max_years)
{
    // Compare the month sequence with itself shifted by c years over
    // max_years years, for every candidate c.
    for (std::int64_t c = 1; c <= max_years; ++c) {
        bool repeats = true;
        for (std::int64_t y = first_year; y < first_year + max_years && repeats; ++y)
            for (int m = 1; m <= 12 && repeats; ++m)
                repeats = days_in_month(y, m) == days_in_month(y + c, m);
        if (repeats) {
            std::int64_t days = 0;
            for (std::int64_t y = first_year; y < first_year + c; ++y)
                days += days_in_year(y);
            return days;
        }
    }
    return -1;
}

} // namespace day_count
