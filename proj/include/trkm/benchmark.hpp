#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trkm/data_io.hpp"
#include "trkm/model_selection.hpp"
#include "trkm/stats.hpp"

namespace trkm {

struct BenchmarkDataset {
  std::string name;
  std::filesystem::path path;
  CsvSchema schema;
};

struct BenchmarkModel {
  std::string name;
  ModelKind kind = ModelKind::TrkmClassifier;
  // Exactly one of the two is set.
  std::optional<GridSpec> grid;
  std::optional<TwinHyperparams> fixed;
};

// Parsed from a JSON file:
//   { "task": "classify", "seed": 7, "train_fraction": 0.7, "stratified": true,
//     "normalize": true,
//     "datasets": [{"name": "haberman", "path": "haberman.csv", "label_column": "class"}],
//     "models": [{"name": "TRKM-C", "kind": "trkm-c",
//                 "grid": {"gamma": [...], "eta": [...], "sigma": [...], "folds": 5}},
//                {"name": "RKM", "kind": "rkm", "params": {"gamma": 1, "eta": 1, "sigma": 1}}] }
// "grid": "default" selects the full default grid. Relative dataset paths
// resolve against the config file's directory.
struct BenchmarkConfig {
  Task task = Task::Classify;
  std::vector<BenchmarkDataset> datasets;
  std::vector<BenchmarkModel> models;
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  bool stratified = true;
  bool normalize = true;

  static BenchmarkConfig parse(const std::string& json_text, const std::filesystem::path& base_dir);
  static BenchmarkConfig load(const std::filesystem::path& path);
  void validate() const;
};

// Score matrix: rows are datasets, columns are models. A failed dataset row
// holds NaN and a message in failures.
struct BenchmarkResult {
  std::vector<std::string> dataset_names;
  std::vector<std::string> model_names;
  Matrix scores;
  std::vector<std::string> failures;
  // hyperparameters used per (dataset, model); empty for scores read from a file
  std::vector<std::vector<std::optional<TwinHyperparams>>> params;
  Better better = Better::Higher;

  std::vector<Eigen::Index> complete_rows() const;
};

BenchmarkResult run_benchmark(const BenchmarkConfig& config, std::ostream& log);

// First column names the dataset, remaining columns are model scores.
BenchmarkResult parse_scores_csv(const std::string& text, Better better, const std::string& source = "<memory>");
BenchmarkResult load_scores_csv(const std::filesystem::path& path, Better better);

struct StatsReport {
  std::vector<std::string> model_names;
  std::vector<std::string> dataset_names;  // rows that entered the analysis
  RankTable ranks;
  std::optional<FriedmanReport> friedman;
  std::string friedman_skipped;  // why friedman is empty, if it is
  std::optional<double> q_alpha;
  std::optional<double> critical_difference;
  // pairwise[i][j]: model i against model j
  std::vector<std::vector<WinTieLoss>> pairwise;
};

StatsReport analyze(const BenchmarkResult& result, std::optional<double> f_critical = std::nullopt,
                    std::optional<double> q_alpha = std::nullopt);

std::string render_scores_csv(const BenchmarkResult& result);
std::string render_ranks_csv(const StatsReport& report);
std::string render_report_text(const BenchmarkResult& result, const StatsReport& report);
std::string render_report_json(const BenchmarkResult& result, const StatsReport& report);

// scores.csv, ranks.csv, report.txt and report.json, each written atomically.
void write_benchmark_outputs(const std::filesystem::path& dir, const BenchmarkResult& result,
                             const StatsReport& report);

}  // namespace trkm
