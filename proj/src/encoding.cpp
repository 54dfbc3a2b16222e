#include "sitsr/encoding.hpp"

#include <algorithm>
#include <cmath>

#include "sitsr/errors.hpp"

namespace sitsr {

void EncodingConfig::validate() const {
  if (tau <= 0.0) throw ConfigError("encoding: tau must be positive");
  if (c_e < 1 || heads < 1) throw ConfigError("encoding: c_e and heads must be positive");
  if (c_e % heads != 0) throw ConfigError("encoding: c_e must be divisible by heads");
}

namespace {

PositionalEncoding encode_days(const std::vector<int64_t>& days, const EncodingConfig& cfg) {
  cfg.validate();
  const int d = cfg.per_head_dim();
  PositionalEncoding pe;
  pe.rows = static_cast<int>(days.size());
  pe.cols = d;
  pe.v.resize(days.size() * static_cast<size_t>(d));
  // One-based frequency index, matching the displayed formula.
  std::vector<double> inv_scale(static_cast<size_t>(d));
  for (int i = 1; i <= d; ++i)
    inv_scale[static_cast<size_t>(i - 1)] =
        1.0 / std::pow(cfg.tau, static_cast<double>(i) / static_cast<double>(d));
  for (size_t k = 0; k < days.size(); ++k)
    for (int i = 0; i < d; ++i)
      pe.v[k * static_cast<size_t>(d) + static_cast<size_t>(i)] = static_cast<float>(
          std::sin(static_cast<double>(days[k]) * inv_scale[static_cast<size_t>(i)]));
  return pe;
}

}  // namespace

PositionalEncoding absolute_encoding(const std::vector<Timestamp>& timestamps,
                                     const EncodingConfig& cfg) {
  if (timestamps.empty()) throw DomainError("absolute_encoding: empty timestamp list");
  const auto first = std::min_element(timestamps.begin(), timestamps.end());
  std::vector<int64_t> days;
  days.reserve(timestamps.size());
  for (auto t : timestamps) days.push_back(days_between(*first, t));
  return encode_days(days, cfg);
}

PositionalEncoding relative_encoding(const std::vector<Timestamp>& timestamps, Timestamp t_ref,
                                     const EncodingConfig& cfg) {
  if (timestamps.empty()) throw DomainError("relative_encoding: empty timestamp list");
  std::vector<int64_t> days;
  days.reserve(timestamps.size());
  for (auto t : timestamps) days.push_back(days_between(t_ref, t));
  return encode_days(days, cfg);
}

}  // namespace sitsr
