#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "sitsr/core/npy.hpp"
#include "sitsr/metrics/evaluate.hpp"

using namespace sitsr;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("SITSR_CLI");
  REQUIRE_MESSAGE(p != nullptr, "SITSR_CLI must point at the CLI binary");
  return p;
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = cli_path() + " " + args + " >>" + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Workspace {
  fs::path root;
  fs::path log;

  Workspace() {
    root = fs::temp_directory_path() / "sitsr_cli_test";
    fs::remove_all(root);
    fs::create_directories(root);
    log = root / "cli.log";
  }
  ~Workspace() {
    if (std::getenv("SITSR_KEEP_CLI_WORKSPACE") == nullptr) fs::remove_all(root);
  }
};

Workspace& ws() {
  static Workspace w;
  return w;
}

std::string synth_args(const fs::path& out, uint64_t seed) {
  return "synth --out " + out.string() + " --seed " + std::to_string(seed) +
         " --set synth.lr_size=8 --set synth.count=30 --set synth.samples_per_block=5"
         " --set synth.t_min=3 --set synth.t_max=6 --set synth.cloud_prob=0.1";
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("", ws().log) == 2);                       // missing subcommand
  CHECK(run("describe", ws().log) == 2);               // missing --checkpoint
  CHECK(run("eval --out /tmp/x", ws().log) == 2);      // missing checkpoint
  CHECK(run("synth", ws().log) == 2);                  // missing --out
  CHECK(run("frobnicate", ws().log) == 2);             // unknown subcommand
}

TEST_CASE("unknown config keys are rejected") {
  const fs::path cfg = ws().root / "bad.json";
  std::ofstream(cfg) << R"({"sython": {"count": 3}})";
  CHECK(run("synth --config " + cfg.string() + " --out " + (ws().root / "d0").string(),
            ws().log) == 2);
  const fs::path cfg2 = ws().root / "bad2.json";
  std::ofstream(cfg2) << R"({"synth": {"countt": 3}})";
  CHECK(run("synth --config " + cfg2.string() + " --out " + (ws().root / "d0").string(),
            ws().log) == 2);
}

TEST_CASE("synth writes a dataset and is byte-identical under the same seed") {
  const fs::path d1 = ws().root / "data1";
  const fs::path d2 = ws().root / "data2";
  REQUIRE(run(synth_args(d1, 9), ws().log) == 0);
  REQUIRE(run(synth_args(d2, 9), ws().log) == 0);
  CHECK(fs::exists(d1 / "manifest.json"));
  CHECK(fs::exists(d1 / "config.resolved.json"));
  CHECK(slurp(d1 / "manifest.json") == slurp(d2 / "manifest.json"));
  CHECK(slurp(d1 / "sample_00000/lr_000.npy") == slurp(d2 / "sample_00000/lr_000.npy"));
  CHECK(slurp(d1 / "sample_00000/hr.npy") == slurp(d2 / "sample_00000/hr.npy"));
  CHECK(slurp(d1 / "sample_00000/meta.json") == slurp(d2 / "sample_00000/meta.json"));
}

TEST_CASE("train / describe / eval / report / super-resolve work end to end") {
  const fs::path data = ws().root / "data1";
  if (!fs::exists(data / "manifest.json")) REQUIRE(run(synth_args(data, 9), ws().log) == 0);

  const fs::path run_dir = ws().root / "run";
  const std::string model_args =
      " --set model.kind=highresnet_ltae --set model.base_channels=8"
      " --set model.dec_channels=8 --set model.enc_layers=1"
      " --set model.encoding.c_e=16 --set model.encoding.heads=2 --set model.fusion.d_k=4";
  REQUIRE(run("train --out " + run_dir.string() + " --set data.dataset=" + data.string() +
                  model_args +
                  " --set train.steps=30 --set train.batch_size=2 --set train.lr=0.001"
                  " --set train.series_length=3 --set train.val_interval=15"
                  " --set train.val_subset=2 --seed 3",
              ws().log) == 0);
  const fs::path ckpt = run_dir / "checkpoints/final.ckpt";
  REQUIRE(fs::exists(ckpt));
  CHECK(fs::exists(run_dir / "config.resolved.json"));
  CHECK(fs::exists(run_dir / "norm_stats.json"));
  CHECK(fs::exists(run_dir / "logs.csv"));

  // describe prints the spec echo.
  const fs::path describe_out = ws().root / "describe.json";
  const std::string cmd = cli_path() + " describe --checkpoint " + ckpt.string() + " > " +
                          describe_out.string() + " 2>>" + ws().log.string();
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  const std::string described = slurp(describe_out);
  CHECK(described.find("highresnet_ltae") != std::string::npos);
  CHECK(described.find("parameter_count") != std::string::npos);

  // eval with two series lengths.
  const fs::path eval_dir = ws().root / "eval";
  REQUIRE(run("eval --out " + eval_dir.string() + " --checkpoint " + ckpt.string() +
                  " --set data.dataset=" + data.string() +
                  " --series-length 3 --series-length 2 --set eval.threads=2",
              ws().log) == 0);
  const fs::path report_json = eval_dir / "reports/report.json";
  REQUIRE(fs::exists(report_json));
  CHECK(fs::exists(eval_dir / "reports/report.csv"));
  const MetricsReport report = load_report_json(report_json.string());
  CHECK(report.entries.size() == 2);
  CHECK(report.entries[0].aggregates.count > 0);

  // report figures (two entries -> ablation table present).
  const fs::path fig_dir = ws().root / "figs";
  REQUIRE(run("report --out " + fig_dir.string() + " --report " + report_json.string(),
              ws().log) == 0);
  CHECK(fs::exists(fig_dir / "figures/mae_boxplot_N3.svg"));
  CHECK(fs::exists(fig_dir / "figures/metrics_table.csv"));
  CHECK(fs::exists(fig_dir / "figures/series_length_table.csv"));

  // super-resolve at a chosen date, twice: byte-identical outputs.
  const fs::path sr1 = ws().root / "sr1";
  const fs::path sr2 = ws().root / "sr2";
  const std::string series = (data / "sample_00000").string();
  for (const fs::path& out : {sr1, sr2})
    REQUIRE(run("super-resolve --out " + out.string() + " --checkpoint " + ckpt.string() +
                    " --series " + series + " --seed 11",
                ws().log) == 0);
  CHECK(fs::exists(sr1 / "sr.png"));
  CHECK(fs::exists(sr1 / "sr.npy"));
  CHECK(fs::exists(sr1 / "attention.npy"));
  CHECK(slurp(sr1 / "sr.npy") == slurp(sr2 / "sr.npy"));
  CHECK(slurp(sr1 / "sr.png") == slurp(sr2 / "sr.png"));

  // attention maps are per-head and normalized over frames.
  const NpyArray attn = npy_load((sr1 / "attention.npy").string());
  REQUIRE(attn.shape.size() == 4);
  CHECK(attn.shape[0] == 2);  // heads
  const int64_t frames = attn.shape[1];
  const int64_t hw = attn.shape[2] * attn.shape[3];
  for (int64_t px = 0; px < hw; ++px) {
    double sum = 0.0;
    for (int64_t t = 0; t < frames; ++t) sum += attn.data[static_cast<size_t>(t * hw + px)];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
  }

  // --at-date inside the span works and changes the output.
  const fs::path sr3 = ws().root / "sr3";
  const StoredSample sample = load_sample(series);
  const int32_t mid =
      (sample.sample.lr_series.frames.front().time.epoch_day +
       sample.sample.lr_series.frames.back().time.epoch_day) / 2;
  REQUIRE(run("super-resolve --out " + sr3.string() + " --checkpoint " + ckpt.string() +
                  " --series " + series + " --at-date " + std::to_string(mid) + " --seed 11",
              ws().log) == 0);
  CHECK(fs::exists(sr3 / "sr.npy"));

  // --at-date outside span + slack is a usage error (exit 2).
  const int32_t far = sample.sample.lr_series.frames.back().time.epoch_day + 100;
  CHECK(run("super-resolve --out " + (ws().root / "sr4").string() + " --checkpoint " +
                ckpt.string() + " --series " + series + " --at-date " + std::to_string(far),
            ws().log) == 2);

  // missing checkpoint path is a usage error.
  CHECK(run("super-resolve --out " + (ws().root / "sr5").string() +
                " --checkpoint /nonexistent.ckpt --series " + series,
            ws().log) == 1);
}

TEST_CASE("SISR checkpoints reject multi-frame series unless --select-closest") {
  const fs::path data = ws().root / "data1";
  if (!fs::exists(data / "manifest.json")) REQUIRE(run(synth_args(data, 9), ws().log) == 0);
  const fs::path run_dir = ws().root / "run_sisr";
  REQUIRE(run("train --out " + run_dir.string() + " --set data.dataset=" + data.string() +
                  " --set model.kind=rrdb_sisr --set model.base_channels=8"
                  " --set model.dec_channels=8 --set model.n_rrdb_blocks=1"
                  " --set model.rrdb_growth=4 --set train.steps=8 --set train.batch_size=2"
                  " --set train.series_length=3 --set train.val_interval=0 --seed 4",
              ws().log) == 0);
  const fs::path ckpt = run_dir / "checkpoints/final.ckpt";
  const std::string series = (data / "sample_00000").string();
  CHECK(run("super-resolve --out " + (ws().root / "sr6").string() + " --checkpoint " +
                ckpt.string() + " --series " + series,
            ws().log) == 2);
  CHECK(run("super-resolve --out " + (ws().root / "sr7").string() + " --checkpoint " +
                ckpt.string() + " --series " + series + " --select-closest",
            ws().log) == 0);
  CHECK(fs::exists(ws().root / "sr7/sr.png"));
}
