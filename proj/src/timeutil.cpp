#include "outage/timeutil.hpp"

#include <cstdio>
#include <ctime>
#include <stdexcept>

namespace outage::timeutil {

int64_t parse(const std::string& text) {
  std::tm tm{};
  int y, mo, d, h, mi, s;
  if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s) != 6)
    throw std::invalid_argument("bad timestamp: '" + text + "'");
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
      s < 0 || s > 60)
    throw std::invalid_argument("timestamp field out of range: '" + text + "'");
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = s;
  time_t t = timegm(&tm);
  if (t == time_t(-1)) throw std::invalid_argument("unrepresentable timestamp: '" + text + "'");
  return int64_t(t);
}

std::string format(int64_t t) {
  std::tm tm{};
  time_t tt = time_t(t);
  gmtime_r(&tt, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

Calendar calendar(int64_t t) {
  std::tm tm{};
  time_t tt = time_t(t);
  gmtime_r(&tt, &tm);
  return Calendar{tm.tm_year + 1900, tm.tm_mon + 1,  tm.tm_mday, tm.tm_wday,
                  tm.tm_yday + 1,    tm.tm_hour, tm.tm_min};
}

}  // namespace outage::timeutil
