#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "ltae_oracle.hpp"
#include "sitsr/errors.hpp"
#include "sitsr/fusion/ltae.hpp"
#include "sitsr/fusion/median.hpp"
#include "sitsr/fusion/recursive.hpp"

using namespace sitsr;
using namespace sitsr::test;
using nn::Tape;
using nn::TensorT;
using nn::Var;

namespace {

LTAEConfig ltae_cfg(int heads, int d_k) {
  LTAEConfig cfg;
  cfg.encoding.tau = 1000.0;
  cfg.encoding.c_e = 8 * heads;  // d_in = 8
  cfg.encoding.heads = heads;
  cfg.d_k = d_k;
  return cfg;
}

PositionalEncoding random_encoding(int frames, int d, Rng& rng) {
  PositionalEncoding pe;
  pe.rows = frames;
  pe.cols = d;
  pe.v.resize(static_cast<size_t>(frames) * d);
  for (auto& v : pe.v) v = static_cast<float>(std::sin(rng.uniform(-3.0, 3.0)));
  return pe;
}

}  // namespace

TEST_CASE("ltae matches the loop-based scalar oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const int frames = 4, c_f = 8, heads = 2, d_k = 5, h = 5, w = 5;
    nn::ParamSet<double> ps;
    Rng init(100 + static_cast<uint64_t>(trial));
    LTAE2d<double> ltae(ps, init, "ltae", c_f, ltae_cfg(heads, d_k));

    TensorT<double> feats({frames, c_f, h, w});
    fill_random(feats, rng);
    const PositionalEncoding pe = random_encoding(frames, 8, rng);

    Tape<double> tape;
    Var attn{-1};
    const Var fused = ltae.forward(tape, tape.input(feats), pe, &attn);

    const auto oracle =
        ltae_oracle(feats, pe, oracle_params_from(ps, "ltae", c_f, heads, 8, d_k, c_f));
    const auto& fv = tape.val(fused);
    REQUIRE(fv.numel() == static_cast<int64_t>(oracle.fused.size()));
    for (int64_t i = 0; i < fv.numel(); ++i)
      CHECK(rel_err(fv[i], oracle.fused[static_cast<size_t>(i)]) < 1e-9);
    const auto& av = tape.val(attn);
    for (int64_t i = 0; i < av.numel(); ++i)
      CHECK(rel_err(av[i], oracle.weights[static_cast<size_t>(i)]) < 1e-9);
  }
}

TEST_CASE("attention weights sum to one at every pixel and head") {
  Rng rng(32);
  nn::ParamSet<double> ps;
  Rng init(1);
  LTAE2d<double> ltae(ps, init, "ltae", 12, ltae_cfg(3, 4));
  TensorT<double> feats({6, 12, 4, 4});
  fill_random(feats, rng, 2.0);
  Tape<double> tape;
  Var attn{-1};
  ltae.forward(tape, tape.input(feats), random_encoding(6, 8, rng), &attn);
  const auto maps = ltae.read_maps(tape, attn);
  for (int hd = 0; hd < maps.heads; ++hd)
    for (int y = 0; y < maps.h; ++y)
      for (int x = 0; x < maps.w; ++x) {
        double sum = 0.0;
        for (int t = 0; t < maps.frames; ++t) sum += maps.at(hd, t, y, x);
        CHECK(std::abs(sum - 1.0) < 1e-6);
      }
}

TEST_CASE("T = 1 gives unit weights and the MLP of the single frame") {
  Rng rng(33);
  nn::ParamSet<double> ps;
  Rng init(2);
  const int c_f = 8;
  LTAE2d<double> ltae(ps, init, "ltae", c_f, ltae_cfg(2, 4));
  TensorT<double> feats({1, c_f, 3, 3});
  fill_random(feats, rng);
  Tape<double> tape;
  Var attn{-1};
  const Var fused = ltae.forward(tape, tape.input(feats), random_encoding(1, 8, rng), &attn);
  for (int64_t i = 0; i < tape.val(attn).numel(); ++i) CHECK(tape.val(attn)[i] == 1.0);

  // With unit weights the attention mix is the frame itself; the output must
  // equal the MLP applied to it.
  const auto oracle =
      ltae_oracle(feats, random_encoding(1, 8, rng),
                  oracle_params_from(ps, "ltae", c_f, 2, 8, 4, c_f));
  for (int64_t i = 0; i < tape.val(fused).numel(); ++i)
    CHECK(rel_err(tape.val(fused)[i], oracle.fused[static_cast<size_t>(i)]) < 1e-9);
}

TEST_CASE("identical frames with identical timestamps share attention weights") {
  Rng rng(34);
  nn::ParamSet<double> ps;
  Rng init(3);
  LTAE2d<double> ltae(ps, init, "ltae", 8, ltae_cfg(2, 4));
  TensorT<double> feats({3, 8, 4, 4});
  fill_random(feats, rng);
  // Frames 1 and 2 identical.
  const int64_t fs = feats.numel() / 3;
  for (int64_t i = 0; i < fs; ++i) feats[2 * fs + i] = feats[fs + i];
  PositionalEncoding pe = random_encoding(3, 8, rng);
  for (int i = 0; i < 8; ++i) pe.v[static_cast<size_t>(2 * 8 + i)] = pe.v[static_cast<size_t>(8 + i)];

  Tape<double> tape;
  Var attn{-1};
  ltae.forward(tape, tape.input(feats), pe, &attn);
  const auto maps = ltae.read_maps(tape, attn);
  for (int hd = 0; hd < maps.heads; ++hd)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x)
        CHECK(maps.at(hd, 1, y, x) == doctest::Approx(maps.at(hd, 2, y, x)).epsilon(1e-12));
}

TEST_CASE("ltae fusion is invariant to frame permutations") {
  Rng rng(35);
  nn::ParamSet<double> ps;
  Rng init(4);
  LTAE2d<double> ltae(ps, init, "ltae", 8, ltae_cfg(2, 4));
  const int frames = 5;
  TensorT<double> feats({frames, 8, 4, 4});
  fill_random(feats, rng);
  const PositionalEncoding pe = random_encoding(frames, 8, rng);

  Tape<double> t1;
  Var attn1{-1};
  const Var f1 = ltae.forward(t1, t1.input(feats), pe, &attn1);

  const std::vector<int> perm{3, 0, 4, 1, 2};
  TensorT<double> feats_p({frames, 8, 4, 4});
  PositionalEncoding pe_p = pe;
  const int64_t fs = feats.numel() / frames;
  for (int k = 0; k < frames; ++k) {
    std::copy(feats.v.begin() + perm[static_cast<size_t>(k)] * fs,
              feats.v.begin() + (perm[static_cast<size_t>(k)] + 1) * fs,
              feats_p.v.begin() + k * fs);
    for (int i = 0; i < 8; ++i)
      pe_p.v[static_cast<size_t>(k * 8 + i)] = pe.v[static_cast<size_t>(perm[static_cast<size_t>(k)] * 8 + i)];
  }
  Tape<double> t2;
  Var attn2{-1};
  const Var f2 = ltae.forward(t2, t2.input(feats_p), pe_p, &attn2);

  for (int64_t i = 0; i < t1.val(f1).numel(); ++i)
    CHECK(rel_err(t1.val(f1)[i], t2.val(f2)[i]) < 1e-5);
  // Re-indexed attention maps match too.
  const auto m1 = ltae.read_maps(t1, attn1);
  const auto m2 = ltae.read_maps(t2, attn2);
  for (int hd = 0; hd < m1.heads; ++hd)
    for (int k = 0; k < frames; ++k)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
          CHECK(rel_err(m1.at(hd, perm[static_cast<size_t>(k)], y, x), m2.at(hd, k, y, x)) <
                1e-5);
}

TEST_CASE("ltae parameter gradients match central differences (4x8x5x5)") {
  Rng rng(36);
  nn::ParamSet<double> ps;
  Rng init(5);
  LTAE2d<double> ltae(ps, init, "ltae", 8, ltae_cfg(2, 4));
  TensorT<double> feats({4, 8, 5, 5});
  fill_random(feats, rng);
  const PositionalEncoding pe = random_encoding(4, 8, rng);
  TensorT<double> probe({1, 8, 5, 5});
  fill_random(probe, rng);
  const auto build = [&](Tape<double>& t) {
    return t.weighted_sum(ltae.forward(t, t.input(feats), pe, nullptr), probe);
  };
  CHECK(gradcheck(ps, build) < 1e-4);
}

TEST_CASE("ltae input validation") {
  nn::ParamSet<double> ps;
  Rng init(6);
  LTAE2d<double> ltae(ps, init, "ltae", 8, ltae_cfg(2, 4));
  Rng rng(0);
  TensorT<double> feats({2, 8, 3, 3});
  fill_random(feats, rng);
  Tape<double> t;
  CHECK_THROWS_AS(ltae.forward(t, t.input(feats), random_encoding(3, 8, rng), nullptr),
                  DomainError);
  LTAEConfig bad = ltae_cfg(3, 4);
  nn::ParamSet<double> ps2;
  CHECK_THROWS_AS(LTAE2d<double>(ps2, init, "x", 8, bad), ConfigError);  // 8 % 3 != 0
}

// ---- median reference ----

TEST_CASE("median of a single frame is the frame itself") {
  TimedSeries s;
  Raster r(3, 4, 4);
  Rng rng(40);
  for (auto& v : r.v) v = static_cast<float>(rng.uniform());
  s.frames.push_back({r, Timestamp{10}});
  s.t_ref = Timestamp{10};
  CHECK(median_reference(s).v == r.v);
}

TEST_CASE("median of three values picks the middle order statistic") {
  TimedSeries s;
  for (float val : {0.0f, 1.0f, 0.5f}) {
    Raster r(1, 2, 2);
    r.v.assign(4, val);
    s.frames.push_back({r, Timestamp{0}});
  }
  const Raster m = median_reference(s);
  for (float v : m.v) CHECK(v == 0.5f);
}

TEST_CASE("median matches a sort-based per-pixel oracle, odd and even T") {
  Rng rng(41);
  for (int frames : {4, 5, 7}) {
    TimedSeries s;
    for (int k = 0; k < frames; ++k) {
      Raster r(2, 6, 6);
      for (auto& v : r.v) v = static_cast<float>(rng.normal());
      s.frames.push_back({r, Timestamp{k}});
    }
    const Raster m = median_reference(s);
    for (size_t i = 0; i < m.v.size(); ++i) {
      std::vector<float> vals;
      for (const auto& f : s.frames) vals.push_back(f.raster.v[i]);
      std::sort(vals.begin(), vals.end());
      const float expect = frames % 2 == 1
                               ? vals[static_cast<size_t>(frames / 2)]
                               : 0.5f * (vals[static_cast<size_t>(frames / 2 - 1)] +
                                         vals[static_cast<size_t>(frames / 2)]);
      CHECK(m.v[i] == doctest::Approx(expect).epsilon(1e-7));
    }
  }
}

// ---- recursive fusion ----

TEST_CASE("padding indices follow the closest-to-reference order") {
  // Gaps 12, 3, 40, 3: closest is index 1; tie between 1 and 3 broken by
  // the earlier date.
  const std::vector<int64_t> gaps{12, 3, 40, 3};
  const std::vector<int64_t> signed_days{-12, -3, 40, 3};
  const auto order = recursive_padding_indices(gaps, signed_days);
  CHECK(order[0] == 1);  // gap 3, date -3 (earlier than +3)
  CHECK(order[1] == 3);
  CHECK(order[2] == 0);
  CHECK(order[3] == 2);
}

TEST_CASE("recursive fusion of T=1 is the identity") {
  nn::ParamSet<double> ps;
  Rng init(7);
  RecursiveFusion<double> fuse(ps, init, "rf", 6);
  Rng rng(42);
  TensorT<double> states({1, 6, 4, 4});
  fill_random(states, rng);
  Tape<double> t;
  const Var out = fuse.forward(t, t.input(states), {5}, {5});
  CHECK(t.val(out).v == states.v);
}

TEST_CASE("T=5 pads to 8 with the three closest frames") {
  // Padded membership confirmed by an independent nearest-date sort.
  const std::vector<int64_t> gaps{20, 3, 8, 15, 1};
  const std::vector<int64_t> signed_days{-20, 3, -8, 15, 1};
  const auto order = recursive_padding_indices(gaps, signed_days);
  const std::vector<int> expect_closest{4, 1, 2};  // gaps 1, 3, 8
  for (int i = 0; i < 3; ++i) CHECK(order[static_cast<size_t>(i)] == expect_closest[static_cast<size_t>(i)]);

  nn::ParamSet<double> ps;
  Rng init(8);
  RecursiveFusion<double> fuse(ps, init, "rf", 4);
  Rng rng(43);
  TensorT<double> states({5, 4, 3, 3});
  fill_random(states, rng);
  Tape<double> t;
  const Var out = fuse.forward(t, t.input(states), gaps, signed_days);
  CHECK(t.val(out).shape == std::vector<int>{1, 4, 3, 3});
}

TEST_CASE("T=8 fuses in exactly three halving rounds") {
  // 8 -> 4 -> 2 -> 1: all all-pairs go through the same shared block; with a
  // linear probe we simply check the output exists and is finite, and that
  // the fusion graph consumed exactly 7 pair fusions (node count is stable).
  nn::ParamSet<double> ps;
  Rng init(9);
  RecursiveFusion<double> fuse(ps, init, "rf", 4);
  Rng rng(44);
  TensorT<double> states({8, 4, 3, 3});
  fill_random(states, rng);
  std::vector<int64_t> gaps(8), sd(8);
  for (int i = 0; i < 8; ++i) {
    gaps[static_cast<size_t>(i)] = i;
    sd[static_cast<size_t>(i)] = i;
  }
  Tape<double> t;
  const size_t before = t.size();
  const Var out = fuse.forward(t, t.input(states), gaps, sd);
  CHECK(t.val(out).shape == std::vector<int>{1, 4, 3, 3});
  // Each round r fuses n/2 pairs with 8 tape nodes per round batch
  // (2 gathers, concat, 2 convs + weights..); just pin the round structure
  // indirectly: node count for T=8 equals that of three rounds.
  const size_t nodes_t8 = t.size() - before;
  Tape<double> t2;
  TensorT<double> states2({2, 4, 3, 3});
  fill_random(states2, rng);
  const size_t before2 = t2.size();
  fuse.forward(t2, t2.input(states2), {0, 1}, {0, 1});
  const size_t nodes_t2 = t2.size() - before2;
  // Three rounds for T=8 vs one round for T=2: the per-round node count is
  // constant.
  CHECK((nodes_t8 - 1) == 3 * (nodes_t2 - 1));
}

TEST_CASE("recursive fusion is order sensitive (witness permutation)") {
  nn::ParamSet<double> ps;
  Rng init(10);
  RecursiveFusion<double> fuse(ps, init, "rf", 4);
  Rng rng(45);
  TensorT<double> states({4, 4, 3, 3});
  fill_random(states, rng);
  std::vector<int64_t> gaps{1, 2, 3, 4}, sd{1, 2, 3, 4};

  Tape<double> t1;
  const Var o1 = fuse.forward(t1, t1.input(states), gaps, sd);
  // Swap frames 0 and 2 (and their gaps, so padding cannot mask the change).
  TensorT<double> swapped = states;
  const int64_t fs = states.numel() / 4;
  for (int64_t i = 0; i < fs; ++i) {
    std::swap(swapped.v[static_cast<size_t>(i)], swapped.v[static_cast<size_t>(2 * fs + i)]);
  }
  std::swap(gaps[0], gaps[2]);
  std::swap(sd[0], sd[2]);
  Tape<double> t2;
  const Var o2 = fuse.forward(t2, t2.input(swapped), gaps, sd);

  double max_diff = 0.0;
  for (int64_t i = 0; i < t1.val(o1).numel(); ++i)
    max_diff = std::max(max_diff, std::abs(t1.val(o1)[i] - t2.val(o2)[i]));
  CHECK(max_diff > 1e-6);
}

TEST_CASE("recursive fusion gradients") {
  nn::ParamSet<double> ps;
  Rng init(11);
  RecursiveFusion<double> fuse(ps, init, "rf", 4);
  Rng rng(46);
  TensorT<double> states({3, 4, 3, 3});
  fill_random(states, rng);
  TensorT<double> probe({1, 4, 3, 3});
  fill_random(probe, rng);
  const auto build = [&](Tape<double>& t) {
    return t.weighted_sum(fuse.forward(t, t.input(states), {7, 2, 9}, {-7, 2, 9}), probe);
  };
  CHECK(gradcheck(ps, build) < 1e-5);
}
