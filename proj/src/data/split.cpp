#include "sitsr/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sitsr/errors.hpp"
#include "sitsr/rng.hpp"

namespace sitsr {

void SplitRatios::validate() const {
  if (train < 0.0 || val < 0.0 || test < 0.0)
    throw ConfigError("split ratios must be nonnegative");
  if (std::abs(train + val + test - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");
}

std::map<int64_t, Split> block_split(const std::vector<int64_t>& block_ids,
                                     const SplitRatios& ratios, uint64_t seed) {
  ratios.validate();
  std::set<int64_t> unique(block_ids.begin(), block_ids.end());
  std::vector<int64_t> blocks(unique.begin(), unique.end());
  const size_t b = blocks.size();

  size_t n_splits = 0;
  for (double r : {ratios.train, ratios.val, ratios.test})
    if (r > 0.0) ++n_splits;
  if (b < n_splits) throw DomainError("block_split: fewer blocks than splits");

  // Deterministic Fisher-Yates over the sorted unique ids.
  Rng rng(seed);
  for (size_t i = b; i > 1; --i)
    std::swap(blocks[i - 1], blocks[static_cast<size_t>(rng.randint(0, static_cast<int64_t>(i) - 1))]);

  size_t n_test = static_cast<size_t>(std::lround(ratios.test * static_cast<double>(b)));
  size_t n_val = static_cast<size_t>(std::lround(ratios.val * static_cast<double>(b)));
  if (ratios.test > 0.0 && n_test == 0) n_test = 1;
  if (ratios.val > 0.0 && n_val == 0) n_val = 1;
  if (n_test + n_val >= b && ratios.train > 0.0)
    throw DomainError("block_split: not enough blocks for the requested ratios");

  std::map<int64_t, Split> out;
  size_t i = 0;
  for (; i < b - n_test - n_val; ++i) out[blocks[i]] = Split::train;
  for (; i < b - n_test; ++i) out[blocks[i]] = Split::val;
  for (; i < b; ++i) out[blocks[i]] = Split::test;
  return out;
}

void apply_split(DatasetManifest& manifest, const std::map<int64_t, Split>& assignment) {
  for (auto& rec : manifest.records) {
    const auto it = assignment.find(rec.block_id);
    if (it == assignment.end())
      throw DomainError("apply_split: block " + std::to_string(rec.block_id) +
                        " missing from assignment");
    rec.split = it->second;
  }
}

}  // namespace sitsr
