#include "sitsr/fusion/recursive.hpp"

#include <numeric>

namespace sitsr {

std::vector<int> recursive_padding_indices(const std::vector<int64_t>& gaps_days,
                                           const std::vector<int64_t>& signed_days) {
  std::vector<int> order(gaps_days.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto sa = static_cast<size_t>(a), sb = static_cast<size_t>(b);
    if (gaps_days[sa] != gaps_days[sb]) return gaps_days[sa] < gaps_days[sb];
    return signed_days[sa] < signed_days[sb];
  });
  return order;
}

}  // namespace sitsr
