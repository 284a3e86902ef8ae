#pragma once

#include <cstdint>
#include <string>

namespace outage::timeutil {

// All timestamps are UTC seconds since the epoch. Text form is
// "YYYY-MM-DDTHH:MM:SS" (RFC-3339 without offset, implied Z).

int64_t parse(const std::string& text);  // throws std::invalid_argument
std::string format(int64_t t);

struct Calendar {
  int year;
  int month;        // 1..12
  int day;          // 1..31
  int day_of_week;  // 0 = Sunday .. 6
  int day_of_year;  // 1..366
  int hour;         // 0..23
  int minute;
};

Calendar calendar(int64_t t);

inline double hours_between(int64_t from, int64_t to) {
  return double(to - from) / 3600.0;
}

}  // namespace outage::timeutil
