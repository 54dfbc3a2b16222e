#pragma once

#include <cstdint>
#include <string>

namespace sitsr {

/// Acquisition date with day granularity, stored as a signed count of days
/// since 1970-01-01. Differences between timestamps are exact integers, which
/// keeps the time-equivariance properties of the relative encoding bit-exact.
struct Timestamp {
  int32_t epoch_day = 0;

  friend bool operator==(Timestamp a, Timestamp b) { return a.epoch_day == b.epoch_day; }
  friend bool operator!=(Timestamp a, Timestamp b) { return a.epoch_day != b.epoch_day; }
  friend bool operator<(Timestamp a, Timestamp b) { return a.epoch_day < b.epoch_day; }
  friend bool operator<=(Timestamp a, Timestamp b) { return a.epoch_day <= b.epoch_day; }
  friend bool operator>(Timestamp a, Timestamp b) { return a.epoch_day > b.epoch_day; }
  friend bool operator>=(Timestamp a, Timestamp b) { return a.epoch_day >= b.epoch_day; }
};

inline int64_t days_between(Timestamp from, Timestamp to) {
  return static_cast<int64_t>(to.epoch_day) - static_cast<int64_t>(from.epoch_day);
}

/// Parses "YYYY-MM-DD" or a bare signed integer day count.
Timestamp parse_timestamp(const std::string& text);

/// Formats as ISO "YYYY-MM-DD".
std::string format_timestamp(Timestamp t);

}  // namespace sitsr
