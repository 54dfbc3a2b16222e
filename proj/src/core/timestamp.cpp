#include "sitsr/core/timestamp.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>

#include "sitsr/errors.hpp"

namespace sitsr {

namespace {

// Civil-calendar conversion (Howard Hinnant's public-domain algorithms).
int64_t days_from_civil(int64_t y, int m, int d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const int64_t yoe = y - era * 400;
  const int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

void civil_from_days(int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const int64_t doe = z - era * 146097;
  const int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t yr = yoe + era * 400;
  const int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const int64_t mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yr + (m <= 2));
}

}  // namespace

Timestamp parse_timestamp(const std::string& text) {
  if (text.empty()) throw DomainError("timestamp: empty string");
  int y = 0, m = 0, d = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%d", &y, &m, &d) == 3) {
    if (m < 1 || m > 12 || d < 1 || d > 31)
      throw DomainError("timestamp: bad calendar date '" + text + "'");
    return Timestamp{static_cast<int32_t>(days_from_civil(y, m, d))};
  }
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (end == nullptr || *end != '\0')
    throw DomainError("timestamp: cannot parse '" + text + "'");
  return Timestamp{static_cast<int32_t>(v)};
}

std::string format_timestamp(Timestamp t) {
  int y, m, d;
  civil_from_days(t.epoch_day, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

}  // namespace sitsr
