#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "trkm/benchmark.hpp"
#include "trkm/errors.hpp"

using namespace trkm;
namespace fs = std::filesystem;

namespace {

const char* kTwoByTwo = R"({
  "seed": 11,
  "datasets": [
    {"name": "haberman", "path": "haberman.csv", "label_column": "class"},
    {"name": "thyroid", "path": "new-thyroid1.csv"}
  ],
  "models": [
    {"name": "TRKM-C", "kind": "trkm-c", "grid": {"gamma": [1], "eta": [0.1, 1], "sigma": [1], "folds": 3}},
    {"name": "RKM", "kind": "rkm", "params": {"gamma": 1, "eta": 1, "sigma": 1}}
  ]
})";

BenchmarkResult run(const std::string& json_text) {
  std::ostringstream log;
  return run_benchmark(BenchmarkConfig::parse(json_text, TRKM_TEST_DATA), log);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("config parsing") {
  const auto c = BenchmarkConfig::parse(kTwoByTwo, "/base");
  CHECK(c.seed == 11);
  CHECK(c.train_fraction == 0.7);
  CHECK(c.stratified);
  CHECK(c.normalize);
  REQUIRE(c.datasets.size() == 2);
  CHECK(c.datasets[0].path == fs::path("/base/haberman.csv"));
  CHECK(c.datasets[0].schema.label_column == "class");
  CHECK(c.datasets[1].schema.label_column == "last");
  REQUIRE(c.models.size() == 2);
  CHECK(c.models[0].grid->eta_values == std::vector<double>{0.1, 1});
  CHECK(c.models[0].grid->folds == 3);
  CHECK(c.models[1].kind == ModelKind::Rkm);
  CHECK(c.models[1].fixed->eta1 == 1);

  const auto d = BenchmarkConfig::parse(R"({"datasets":[{"name":"a","path":"a.csv"}],
    "models":[{"name":"T","kind":"trkm-c","grid":"default"}]})", ".");
  CHECK(d.models[0].grid->cell_count(ModelKind::TrkmClassifier) == 1331);
}

TEST_CASE("config errors") {
  const auto bad = [](const std::string& text) { return BenchmarkConfig::parse(text, "."); };
  CHECK_THROWS_AS(bad("{not json"), InvalidArgument);
  CHECK_THROWS_AS(bad(R"({"task":"cluster","datasets":[],"models":[]})"), InvalidArgument);
  CHECK_THROWS_AS(bad(R"({"datasets":[{"name":"a","path":"a.csv"}],
    "models":[{"name":"T","kind":"trkm-c"}]})"), InvalidArgument);
  CHECK_THROWS_AS(bad(R"({"datasets":[{"name":"a","path":"a.csv"}],
    "models":[{"name":"T","kind":"trkm-r","params":{"gamma":1,"eta":1,"sigma":1}}]})"), InvalidArgument);
  CHECK_THROWS_AS(bad(R"({"train_fraction":1.5,"datasets":[{"name":"a","path":"a.csv"}],
    "models":[{"name":"T","kind":"rkm","params":{"gamma":1,"eta":1,"sigma":1}}]})"), InvalidArgument);
  CHECK_THROWS_AS(bad(R"({"datasets":[{"name":"a","path":"a.csv"}],
    "models":[{"name":"T","kind":"rkm","params":{"gamma":1,"eta":1,"sigma":1},
               "grid":{"gamma":[1],"eta":[1],"sigma":[1]}}]})"), InvalidArgument);
}

TEST_CASE("2 x 2 benchmark") {
  const auto r = run(kTwoByTwo);
  REQUIRE(r.scores.rows() == 2);
  REQUIRE(r.scores.cols() == 2);
  CHECK(r.dataset_names == std::vector<std::string>{"haberman", "thyroid"});
  CHECK(r.model_names == std::vector<std::string>{"TRKM-C", "RKM"});
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(r.scores(i) >= 0);
    CHECK(r.scores(i) <= 100);
  }
  CHECK(r.complete_rows().size() == 2);
  CHECK(r.params[1][1]->gamma1 == 1);

  const auto report = analyze(r);
  for (Eigen::Index i = 0; i < 2; ++i) CHECK(report.ranks.ranks.row(i).sum() == 3.0);
  CHECK(report.pairwise[0][1].wins == report.pairwise[1][0].losses);

  const auto text = render_report_text(r, report);
  CHECK(contains(text, "TRKM-C"));
  CHECK(contains(text, "haberman"));
  const auto csv = render_scores_csv(r);
  const auto back = parse_scores_csv(csv, Better::Higher);
  CHECK(back.scores == r.scores);
}

TEST_CASE("a missing dataset is marked failed and the rest still runs") {
  std::string text = kTwoByTwo;
  text.replace(text.find("new-thyroid1.csv"), std::string("new-thyroid1.csv").size(), "absent.csv");
  std::ostringstream log;
  const auto r = run_benchmark(BenchmarkConfig::parse(text, TRKM_TEST_DATA), log);
  CHECK(std::isnan(r.scores(1, 0)));
  CHECK(std::isnan(r.scores(1, 1)));
  CHECK_FALSE(std::isnan(r.scores(0, 0)));
  CHECK(contains(r.failures[1], "absent.csv"));
  CHECK(contains(log.str(), "absent.csv"));
  CHECK(r.complete_rows() == std::vector<Eigen::Index>{0});
  CHECK(contains(render_scores_csv(r), "failed"));
  const auto report = analyze(r);
  CHECK_FALSE(report.friedman);
  CHECK(contains(render_report_text(r, report), "Friedman: skipped"));
}

TEST_CASE("a degenerate Friedman statistic does not stop the report") {
  const auto r = parse_scores_csv("dataset,A,B\nx,2,1\ny,2,1\n", Better::Higher);
  const auto report = analyze(r);
  CHECK_FALSE(report.friedman);
  CHECK(contains(report.friedman_skipped, "denominator"));
  CHECK(contains(render_report_json(r, report), "skipped"));
}

TEST_CASE("regression benchmark scores RMSE") {
  const auto dir = fs::temp_directory_path() / "trkm_test_benchmark";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "wave.csv");
    out << "x,y\n";
    for (int i = 0; i < 60; ++i) out << i * 0.1 << "," << std::sin(i * 0.1) << "\n";
  }
  const auto r = run_benchmark(BenchmarkConfig::parse(R"({"task":"regress","datasets":[{"name":"wave","path":"wave.csv"}],
    "models":[{"name":"TRKM-R","kind":"trkm-r","params":{"gamma":0.01,"eta":0.01,"sigma":0.5}}]})", dir),
                               std::cerr);
  CHECK(r.better == Better::Lower);
  CHECK(r.scores(0, 0) < 0.2);
}

TEST_CASE("outputs are byte-identical across runs") {
  const auto base = fs::temp_directory_path() / "trkm_test_benchmark";
  const auto write = [&](const std::string& sub) {
    const auto r = run(kTwoByTwo);
    write_benchmark_outputs(base / sub, r, analyze(r));
  };
  write("one");
  write("two");
  for (const char* f : {"scores.csv", "ranks.csv", "report.txt", "report.json"}) {
    const auto a = slurp(base / "one" / f);
    CHECK(!a.empty());
    CHECK(a == slurp(base / "two" / f));
  }
}

TEST_CASE("score table parsing") {
  const auto r = parse_scores_csv("dataset,A,B\nx,1,2\ny,failed,3\nz,,4\n", Better::Higher);
  CHECK(r.model_names == std::vector<std::string>{"A", "B"});
  CHECK(std::isnan(r.scores(1, 0)));
  CHECK(std::isnan(r.scores(2, 0)));
  CHECK(r.complete_rows().size() == 1);
  try {
    parse_scores_csv("dataset,A,B\nx,1,oops\n", Better::Higher, "t.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(contains(e.what(), "oops"));
  }
}
