#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gapkit/cli.hpp"
#include "gapkit/embedding_io.hpp"
#include "gapkit/error.hpp"
#include "gapkit/metrics.hpp"
#include "gapkit/ot.hpp"
#include "gapkit/report.hpp"
#include "gapkit/synth.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace gapkit;
namespace fs = std::filesystem;

namespace {

int run_gapkit(const std::string& args) {
  const std::string cmd = std::string("\"") + GAPKIT_EXE + "\" " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

fs::path synth(const fs::path& dir, Index n, double gap = 5.0, const std::string& dataset = "SYNTH") {
  const int rc = run_gapkit("synth --n " + std::to_string(n) + " --gap " + std::to_string(gap) + " --dataset " +
                        dataset + " --seed 3 --out " + q(dir));
  REQUIRE(rc == 0);
  return dir / "manifest.json";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("argument validation") {
    cli::RunConfig cfg;
    cfg.command = cli::Command::Align;
    cfg.manifests = {"m.json"};
    cfg.out = "o";
    cfg.method = cli::Method::Spec;
    CHECK_THROWS_WITH(cfg.validate(), doctest::Contains("--k is required"));
    cfg.k = 10;
    CHECK_NOTHROW(cfg.validate());
    cfg.method = cli::Method::Orig;
    CHECK_THROWS(cfg.validate());
    CHECK(cli::method_label(cli::Method::Spec, 60) == "SPEC60");
    CHECK(cli::method_label(cli::Method::Ot, std::nullopt) == "OT");
    CHECK_THROWS(cli::parse_method("umap"));
    CHECK_THROWS(cli::parse_metrics({"bleu"}));
    const auto all = cli::parse_metrics({"all"});
    CHECK((all.heterogeneity && all.ranks && all.fid && all.recall && all.distance));
  }

  TEST_CASE("seeded permutation is a reproducible permutation") {
    const auto a = cli::seeded_permutation(50, 9);
    CHECK(a == cli::seeded_permutation(50, 9));
    CHECK(a != cli::seeded_permutation(50, 10));
    auto s = a;
    std::sort(s.begin(), s.end());
    for (Index i = 0; i < 50; ++i) CHECK(s[static_cast<std::size_t>(i)] == i);
  }

  TEST_CASE("bad usage exits non-zero") {
    const auto dir = testutil::scratch_dir("cli_bad");
    CHECK(run_gapkit("") != 0);
    CHECK(run_gapkit("frobnicate") != 0);
    CHECK(run_gapkit("align --manifest " + q(dir / "missing.json") + " --method spec --k 5 --out " + q(dir / "o")) != 0);
    const auto m = synth(dir / "d", 30);
    CHECK(run_gapkit("align --manifest " + q(m) + " --method spec --out " + q(dir / "o")) != 0);
    CHECK(run_gapkit("align --manifest " + q(m) + " --method orig --eta 1 --out " + q(dir / "o")) != 0);
  }

  TEST_CASE("spectral alignment with k above the input dimension") {
    const auto dir = testutil::scratch_dir("cli_spec");
    const auto m = synth(dir / "d", 100);
    REQUIRE(run_gapkit("align --manifest " + q(m) + " --method spec --k 120 --out " + q(dir / "a")) == 0);
    const auto ds = load_paired_dataset(dir / "a" / "manifest.json");
    CHECK(ds.size() == 100);
    CHECK(ds.dim() == 120);
    CHECK(read_manifest(dir / "a" / "manifest.json").method == "SPEC120");
  }

  TEST_CASE("PCA alignment keeps k components") {
    const auto dir = testutil::scratch_dir("cli_pca");
    const auto m = synth(dir / "d", 80);
    REQUIRE(run_gapkit("align --manifest " + q(m) + " --method pca --k 20 --out " + q(dir / "a")) == 0);
    const auto ds = load_paired_dataset(dir / "a" / "manifest.json");
    CHECK(ds.size() == 80);
    CHECK(ds.dim() == 20);
  }

  TEST_CASE("OT alignment writes a plan with valid marginals") {
    const auto dir = testutil::scratch_dir("cli_ot");
    const auto m = synth(dir / "d", 50);
    REQUIRE(run_gapkit("align --manifest " + q(m) + " --method ot --eta 1 --lambda-s 1 --lambda-t 1 --sim-k 5 --out " +
                   q(dir / "a")) == 0);
    const auto plan = load_plan(dir / "a" / "plan.npz");
    CHECK(plan.gamma.rows() == 50);
    CHECK((plan.gamma.rowwise().sum() - plan.mu).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((plan.gamma.colwise().sum().transpose() - plan.nu).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(plan.gamma.minCoeff() >= -1e-12);
    const auto pj = read_json(dir / "a" / "plan.json");
    CHECK(pj.at("mapped") == "images");
    const auto ds = load_paired_dataset(dir / "a" / "manifest.json");
    const auto orig = load_paired_dataset(m);
    CHECK(ds.texts().data() == orig.texts().data());
  }

  TEST_CASE("OT with a training subset maps every pair") {
    const auto dir = testutil::scratch_dir("cli_ot_sub");
    const auto m = synth(dir / "d", 60);
    REQUIRE(run_gapkit("align --manifest " + q(m) + " --method ot --eta 1 --lambda-s 1 --lambda-t 1 --sim-k 5 " +
                   "--train-pairs 20 --inverse --out " + q(dir / "a")) == 0);
    const auto pj = read_json(dir / "a" / "plan.json");
    CHECK(pj.at("train_pairs") == 20);
    CHECK(pj.at("mapped") == "texts");
    const auto ds = load_paired_dataset(dir / "a" / "manifest.json");
    CHECK(ds.size() == 60);
    CHECK(ds.images().data() == load_paired_dataset(m).images().data());
  }

  TEST_CASE("eval on perfectly aligned pairs") {
    const auto dir = testutil::scratch_dir("cli_eval");
    const Matrix x = Matrix::Identity(12, 12);
    save_paired_dataset(PairedDataset(EmbeddingMatrix(x, Modality::Image), EmbeddingMatrix(x, Modality::Text)),
                        dir / "d", "ID", "ORIG");
    REQUIRE(run_gapkit("eval --manifest " + q(dir / "d" / "manifest.json") + " --recall-k 1,5 --out " + q(dir / "e")) == 0);
    const auto cells = read_reports(dir / "e" / "report.json");
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].recall->at(1) == 1.0);
    CHECK(cells[0].ranks->tmr == 1.0);
    CHECK(cells[0].ranks->imr == 1.0);
    CHECK(cells[0].fid.has_value());
    CHECK(fs::exists(dir / "e" / "report.txt"));
    CHECK(fs::exists(dir / "e" / "report.csv"));
    CHECK(fs::exists(dir / "e" / "hist_ID_ORIG.csv"));
    const auto prov = read_json(dir / "e" / "provenance.json");
    CHECK(prov.at("command") == "eval");
    CHECK(prov.at("inputs").size() >= 3);
    for (const auto& rec : prov.at("inputs")) CHECK(rec.at("sha256").get<std::string>().size() == 64);
    for (const auto& rec : prov.at("outputs")) CHECK(rec.at("sha256").get<std::string>().size() == 64);
  }

  TEST_CASE("eval restricted to one metric") {
    const auto dir = testutil::scratch_dir("cli_eval_fid");
    const auto m = synth(dir / "d", 40);
    REQUIRE(run_gapkit("eval --manifest " + q(m) + " --metrics fid --out " + q(dir / "e")) == 0);
    const auto j = read_json(dir / "e" / "report.json");
    const auto& cell = j.at("reports").at(0);
    CHECK(cell.contains("fid"));
    CHECK_FALSE(cell.contains("heterogeneity"));
    CHECK_FALSE(cell.contains("ranks"));
    CHECK_FALSE(cell.contains("recall"));
    CHECK_FALSE(cell.contains("distance"));
  }

  TEST_CASE("spectral alignment improves recall over the original embeddings") {
    const auto dir = testutil::scratch_dir("cli_gain");
    const auto m = synth(dir / "d", 200);
    REQUIRE(run_gapkit("align --manifest " + q(m) + " --method spec --k 60 --out " + q(dir / "s")) == 0);
    REQUIRE(run_gapkit("eval --manifest " + q(m) + " --manifest " + q(dir / "s" / "manifest.json") +
                   " --normalize --metrics recall,distance --out " + q(dir / "e")) == 0);
    const auto cells = read_reports(dir / "e" / "report.json");
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].method == "ORIG");
    CHECK(cells[1].method == "SPEC60");
    CHECK(cells[1].recall->at(5) > cells[0].recall->at(5));
    CHECK(cells[1].distance->baseline == std::optional<std::string>("ORIG"));
    CHECK(cells[1].distance->p_wilcoxon.has_value());
  }

  TEST_CASE("eval rejects duplicate cells") {
    const auto dir = testutil::scratch_dir("cli_dup");
    const auto m = synth(dir / "d", 30);
    CHECK(run_gapkit("eval --manifest " + q(m) + " --manifest " + q(m) + " --out " + q(dir / "e")) != 0);
  }

  TEST_CASE("tune-ot grids") {
    const auto dir = testutil::scratch_dir("cli_tune");
    const auto m = synth(dir / "d", 100);
    const std::string base = "tune-ot --manifest " + q(m) + " --sim-k 5 --val-fraction 0.2 ";
    REQUIRE(run_gapkit(base + "--grid-eta 1 --grid-lambda-s 1 --grid-lambda-t 1 --out " + q(dir / "t1")) == 0);
    const auto lb = read_json(dir / "t1" / "leaderboard.json");
    CHECK(lb.at("entries").size() == 1);
    CHECK(lb.at("validation_pairs") == 20);
    CHECK(lb.at("train_pairs") == 80);
    CHECK(fs::exists(dir / "t1" / "best_params.json"));
    CHECK(fs::exists(dir / "t1" / "leaderboard.csv"));

    REQUIRE(run_gapkit(base + "--grid-eta 0,1 --grid-lambda-s 1 --grid-lambda-t 1 --out " + q(dir / "t2")) == 0);
    const auto lb2 = read_json(dir / "t2" / "leaderboard.json");
    REQUIRE(lb2.at("entries").size() == 2);
    double prev = 2.0, unregularized = -1.0, best_regularized = -1.0;
    for (const auto& e : lb2.at("entries")) {
      const double r = e.at("recall_at_5").get<double>();
      CHECK(r <= prev);
      prev = r;
      if (e.at("eta").get<double>() == 0.0)
        unregularized = r;
      else
        best_regularized = std::max(best_regularized, r);
    }
    REQUIRE(unregularized >= 0.0);
    CHECK(unregularized <= best_regularized + 0.05);

    REQUIRE(run_gapkit(base + "--grid-eta 0,1 --grid-lambda-s 1 --grid-lambda-t 1 --out " + q(dir / "t3")) == 0);
    CHECK(slurp(dir / "t2" / "leaderboard.json") == slurp(dir / "t3" / "leaderboard.json"));
    CHECK(slurp(dir / "t2" / "best_params.json") == slurp(dir / "t3" / "best_params.json"));
  }

  TEST_CASE("tune-ot refuses a tiny validation split") {
    const auto dir = testutil::scratch_dir("cli_tune_small");
    const auto m = synth(dir / "d", 40);
    CHECK(run_gapkit("tune-ot --manifest " + q(m) + " --sim-k 5 --val-fraction 0.2 --out " + q(dir / "t")) != 0);
  }

  TEST_CASE("report merges cells and checks dataset labels") {
    const auto dir = testutil::scratch_dir("cli_report");
    const auto a = synth(dir / "a", 40, 5.0, "ALPHA");
    const auto b = synth(dir / "b", 40, 5.0, "BETA");
    REQUIRE(run_gapkit("align --manifest " + q(a) + " --method pca --k 10 --out " + q(dir / "ap")) == 0);
    REQUIRE(run_gapkit("eval --manifest " + q(a) + " --out " + q(dir / "e1")) == 0);
    REQUIRE(run_gapkit("eval --manifest " + q(dir / "ap" / "manifest.json") + " --out " + q(dir / "e2")) == 0);
    REQUIRE(run_gapkit("eval --manifest " + q(b) + " --out " + q(dir / "e3")) == 0);

    REQUIRE(run_gapkit("report --input " + q(dir / "e1" / "report.json") + " --input " + q(dir / "e2" / "report.json") +
                   " --out " + q(dir / "r")) == 0);
    const auto text = slurp(dir / "r" / "report.txt");
    CHECK(text.find("ORIG") != std::string::npos);
    CHECK(text.find("PCA10") != std::string::npos);
    const auto merged = read_reports(dir / "r" / "report.json");
    REQUIRE(merged.size() == 2);
    const auto first = read_reports(dir / "e1" / "report.json");
    CHECK(to_json(merged[0]).dump() == to_json(first[0]).dump());

    CHECK(run_gapkit("report --input " + q(dir / "e1" / "report.json") + " --input " + q(dir / "e3" / "report.json") +
                 " --out " + q(dir / "r2")) != 0);
    CHECK(run_gapkit("report --input " + q(dir / "e1" / "report.json") + " --input " + q(dir / "e3" / "report.json") +
                 " --allow-mixed --out " + q(dir / "r3")) == 0);
    CHECK(read_reports(dir / "r3" / "report.json").size() == 2);
    CHECK(run_gapkit("report --input " + q(dir / "e1" / "report.json") + " --input " + q(dir / "e1" / "report.json") +
                 " --out " + q(dir / "r4")) != 0);
  }
}
