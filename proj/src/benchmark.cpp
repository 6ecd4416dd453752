#include "trkm/benchmark.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "trkm/errors.hpp"

namespace trkm {

using json = nlohmann::json;

namespace {

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

std::string exact(double value) { return std::isnan(value) ? "failed" : fmt("%.17g", value); }

std::vector<double> number_list(const json& j, const char* key) {
  if (!j.contains(key)) throw InvalidArgument(std::string("benchmark grid is missing '") + key + "'");
  return j.at(key).get<std::vector<double>>();
}

GridSpec parse_grid(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "default") throw InvalidArgument("grid must be an object or \"default\"");
    return GridSpec::defaults();
  }
  GridSpec grid;
  grid.gamma_values = number_list(j, "gamma");
  grid.eta_values = number_list(j, "eta");
  grid.sigma_values = number_list(j, "sigma");
  grid.folds = j.value("folds", 5);
  grid.equal_penalties = j.value("equal_penalties", true);
  grid.validate();
  return grid;
}

TwinHyperparams parse_params(const json& j) {
  const double gamma = j.at("gamma").get<double>();
  const double eta = j.at("eta").get<double>();
  TwinHyperparams hp = TwinHyperparams::equal_penalties(gamma, eta, KernelSpec::gaussian(j.at("sigma").get<double>()));
  hp.gamma2 = j.value("gamma2", gamma);
  hp.eta2 = j.value("eta2", eta);
  hp.validate();
  return hp;
}

std::string describe(const TwinHyperparams& hp) {
  std::string out = "gamma=" + fmt("%g", hp.gamma1);
  if (hp.gamma2 != hp.gamma1) out += "/" + fmt("%g", hp.gamma2);
  out += " eta=" + fmt("%g", hp.eta1);
  if (hp.eta2 != hp.eta1) out += "/" + fmt("%g", hp.eta2);
  out += " sigma=" + fmt("%g", hp.kernel.sigma);
  return out;
}

}  // namespace

BenchmarkConfig BenchmarkConfig::parse(const std::string& json_text, const std::filesystem::path& base_dir) {
  BenchmarkConfig config;
  try {
    const json j = json::parse(json_text);
    const auto task = j.value("task", std::string("classify"));
    if (task == "classify") {
      config.task = Task::Classify;
    } else if (task == "regress") {
      config.task = Task::Regress;
    } else {
      throw InvalidArgument("benchmark task must be 'classify' or 'regress'");
    }
    config.seed = j.value("seed", std::uint64_t{0});
    config.train_fraction = j.value("train_fraction", 0.7);
    config.stratified = j.value("stratified", true);
    config.normalize = j.value("normalize", true);
    for (const auto& d : j.at("datasets")) {
      BenchmarkDataset entry;
      entry.path = d.at("path").get<std::string>();
      if (entry.path.is_relative()) entry.path = base_dir / entry.path;
      entry.name = d.value("name", entry.path.stem().string());
      const auto response = config.task == Task::Classify ? "label_column" : "target_column";
      const auto column = d.value(response, std::string("last"));
      if (config.task == Task::Classify) {
        entry.schema.label_column = column;
      } else {
        entry.schema.target_column = column;
      }
      const auto delimiter = d.value("delimiter", std::string(","));
      if (delimiter.size() != 1) throw InvalidArgument("delimiter must be a single character");
      entry.schema.delimiter = delimiter[0];
      entry.schema.header = d.value("header", true);
      config.datasets.push_back(std::move(entry));
    }
    for (const auto& m : j.at("models")) {
      BenchmarkModel entry;
      entry.kind = model_kind_from_string(m.at("kind").get<std::string>());
      entry.name = m.value("name", to_string(entry.kind));
      if (m.contains("grid")) entry.grid = parse_grid(m.at("grid"));
      if (m.contains("params")) entry.fixed = parse_params(m.at("params"));
      config.models.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed benchmark config: ") + e.what());
  }
  config.validate();
  return config;
}

BenchmarkConfig BenchmarkConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open benchmark config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.parent_path());
}

void BenchmarkConfig::validate() const {
  if (datasets.empty() || models.empty()) throw InvalidArgument("benchmark needs at least one dataset and one model");
  for (const auto& m : models) {
    if (m.grid.has_value() == m.fixed.has_value()) {
      throw InvalidArgument("model '" + m.name + "' needs exactly one of 'grid' or 'params'");
    }
    if (task_of(m.kind) != task) throw InvalidArgument("model '" + m.name + "' does not fit the benchmark task");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train_fraction must be in (0, 1)");
}

std::vector<Eigen::Index> BenchmarkResult::complete_rows() const {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    if (scores.row(i).allFinite()) rows.push_back(i);
  }
  return rows;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config, std::ostream& log) {
  config.validate();
  BenchmarkResult result;
  result.better = config.task == Task::Classify ? Better::Higher : Better::Lower;
  for (const auto& m : config.models) result.model_names.push_back(m.name);
  const auto n_data = static_cast<Eigen::Index>(config.datasets.size());
  const auto n_models = static_cast<Eigen::Index>(config.models.size());
  result.scores = Matrix::Constant(n_data, n_models, std::numeric_limits<double>::quiet_NaN());
  result.failures.assign(config.datasets.size(), "");
  result.params.assign(config.datasets.size(), std::vector<std::optional<TwinHyperparams>>(config.models.size()));

  const std::uint64_t cv_seed = config.seed ^ 0x9e3779b97f4a7c15ULL;
  for (Eigen::Index d = 0; d < n_data; ++d) {
    const auto& entry = config.datasets[static_cast<std::size_t>(d)];
    auto& failure = result.failures[static_cast<std::size_t>(d)];
    result.dataset_names.push_back(entry.name);
    Dataset train;
    Dataset test;
    try {
      const Dataset data = load_csv(entry.path, entry.schema);
      std::tie(train, test) = split(data, {config.train_fraction, config.seed, config.stratified});
      if (config.normalize) {
        train = normalize_minmax(train);
        test = apply_normalization(test, *train.normalization);
      }
    } catch (const Error& e) {
      failure = e.what();
      log << "warning: dataset '" << entry.name << "' failed: " << e.what() << "\n";
      continue;
    }
    for (Eigen::Index m = 0; m < n_models; ++m) {
      const auto& model = config.models[static_cast<std::size_t>(m)];
      try {
        TwinHyperparams params;
        if (model.grid) {
          const auto grid = grid_search(train, *model.grid, model.kind, cv_seed);
          params = grid.best_params;
        } else {
          params = *model.fixed;
        }
        result.params[static_cast<std::size_t>(d)][static_cast<std::size_t>(m)] = params;
        result.scores(d, m) = fit_and_score(train, test, model.kind, params);
        log << entry.name << " / " << model.name << ": " << fmt("%.4f", result.scores(d, m)) << " ("
            << describe(params) << ")\n";
      } catch (const Error& e) {
        if (!failure.empty()) failure += "; ";
        failure += model.name + ": " + e.what();
        log << "warning: " << entry.name << " / " << model.name << " failed: " << e.what() << "\n";
      }
    }
  }
  return result;
}

BenchmarkResult parse_scores_csv(const std::string& text, Better better, const std::string& source) {
  BenchmarkResult result;
  result.better = better;
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  const auto split_line = [](const std::string& l) {
    std::vector<std::string> fields;
    std::stringstream ss(l);
    std::string field;
    while (std::getline(ss, field, ',')) {
      const auto a = field.find_first_not_of(" \t\r");
      const auto b = field.find_last_not_of(" \t\r");
      fields.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
    }
    return fields;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_line(line);
    if (result.model_names.empty()) {
      if (fields.size() < 3) throw ParseError(source + ": need a dataset column and at least two model columns");
      result.model_names.assign(fields.begin() + 1, fields.end());
      continue;
    }
    if (fields.size() != result.model_names.size() + 1) {
      throw ParseError(source + ": row " + std::to_string(line_no) + ": expected " +
                       std::to_string(result.model_names.size() + 1) + " fields, got " +
                       std::to_string(fields.size()));
    }
    result.dataset_names.push_back(fields[0]);
    std::vector<double> values;
    std::string failure;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      char* end = nullptr;
      const double v = std::strtod(fields[k].c_str(), &end);
      if (fields[k].empty() || fields[k] == "failed" || end != fields[k].c_str() + fields[k].size() ||
          !std::isfinite(v)) {
        if (fields[k] != "failed" && !fields[k].empty()) {
          throw ParseError(source + ": row " + std::to_string(line_no) + ", column " + std::to_string(k) + ": '" +
                           fields[k] + "' is not a number");
        }
        values.push_back(std::numeric_limits<double>::quiet_NaN());
        failure = "no score recorded";
      } else {
        values.push_back(v);
      }
    }
    rows.push_back(std::move(values));
    result.failures.push_back(failure);
  }
  if (rows.empty()) throw EmptyInput(source + ": no score rows");
  result.scores.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(result.model_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      result.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  result.params.assign(rows.size(), std::vector<std::optional<TwinHyperparams>>(result.model_names.size()));
  return result;
}

BenchmarkResult load_scores_csv(const std::filesystem::path& path, Better better) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scores file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scores_csv(buffer.str(), better, path.string());
}

StatsReport analyze(const BenchmarkResult& result, std::optional<double> f_critical, std::optional<double> q_alpha) {
  const auto rows = result.complete_rows();
  if (rows.empty()) throw DegenerateStatistic("no dataset has scores for every model");
  StatsReport report;
  report.model_names = result.model_names;
  for (const auto r : rows) report.dataset_names.push_back(result.dataset_names[static_cast<std::size_t>(r)]);
  const Matrix scores = result.scores(rows, Eigen::all);
  report.ranks = rank_models(scores, result.better);

  const int p = static_cast<int>(scores.cols());
  const int n = static_cast<int>(scores.rows());
  if (n < 2) {
    report.friedman_skipped = "needs at least two datasets";
  } else {
    try {
      report.friedman = friedman_test(report.ranks, f_critical);
    } catch (const DegenerateStatistic& e) {
      report.friedman_skipped = e.what();
    }
  }
  report.q_alpha = q_alpha ? q_alpha : nemenyi_q_alpha_005(p);
  if (report.q_alpha) report.critical_difference = nemenyi_cd(p, n, *report.q_alpha);

  report.pairwise.assign(static_cast<std::size_t>(p), std::vector<WinTieLoss>(static_cast<std::size_t>(p)));
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (i != j) report.pairwise[i][j] = win_tie_loss(scores.col(i), scores.col(j), result.better);
    }
  }
  return report;
}

std::string render_scores_csv(const BenchmarkResult& result) {
  std::string out = "dataset";
  for (const auto& m : result.model_names) out += "," + m;
  out += "\n";
  for (Eigen::Index i = 0; i < result.scores.rows(); ++i) {
    out += result.dataset_names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < result.scores.cols(); ++j) out += "," + exact(result.scores(i, j));
    out += "\n";
  }
  return out;
}

std::string render_ranks_csv(const StatsReport& report) {
  std::string out = "dataset";
  for (const auto& m : report.model_names) out += "," + m;
  out += "\n";
  for (Eigen::Index i = 0; i < report.ranks.ranks.rows(); ++i) {
    out += report.dataset_names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < report.ranks.ranks.cols(); ++j) out += "," + exact(report.ranks.ranks(i, j));
    out += "\n";
  }
  out += "average";
  for (Eigen::Index j = 0; j < report.ranks.average_ranks.size(); ++j) {
    out += "," + exact(report.ranks.average_ranks(j));
  }
  out += "\n";
  return out;
}

std::string render_report_text(const BenchmarkResult& result, const StatsReport& report) {
  std::ostringstream out;
  const auto width = [](const std::string& s, std::size_t w) { return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' '); };
  std::size_t name_w = 8;
  for (const auto& d : result.dataset_names) name_w = std::max(name_w, d.size() + 2);

  out << "Scores (" << (result.better == Better::Higher ? "higher" : "lower") << " is better)\n";
  out << width("dataset", name_w);
  for (const auto& m : result.model_names) out << width(m, 14);
  out << "\n";
  for (Eigen::Index i = 0; i < result.scores.rows(); ++i) {
    out << width(result.dataset_names[static_cast<std::size_t>(i)], name_w);
    for (Eigen::Index j = 0; j < result.scores.cols(); ++j) {
      const double v = result.scores(i, j);
      out << width(std::isnan(v) ? "failed" : fmt("%.4f", v), 14);
    }
    out << "\n";
  }
  for (std::size_t i = 0; i < result.failures.size(); ++i) {
    if (!result.failures[i].empty()) out << "  failed: " << result.dataset_names[i] << ": " << result.failures[i] << "\n";
  }

  out << "\nAverage rank over " << report.dataset_names.size() << " datasets\n";
  for (std::size_t j = 0; j < report.model_names.size(); ++j) {
    out << "  " << width(report.model_names[j], 14) << fmt("%.4f", report.ranks.average_ranks(static_cast<Eigen::Index>(j)))
        << "\n";
  }
  if (report.friedman) {
    const auto& f = *report.friedman;
    out << "\nFriedman: chi2_F = " << fmt("%.4f", f.chi2) << ", F_F = " << fmt("%.4f", f.ff) << " with (" << f.df1
        << ", " << f.df2 << ") degrees of freedom";
    if (f.critical_value) out << "; critical " << fmt("%.4f", *f.critical_value) << (f.reject_null ? ", reject H0" : ", keep H0");
    out << "\n";
  } else {
    out << "\nFriedman: skipped, " << report.friedman_skipped << "\n";
  }
  if (report.critical_difference) {
    out << "Nemenyi: q_alpha = " << fmt("%.3f", *report.q_alpha) << ", C.D. = " << fmt("%.4f", *report.critical_difference)
        << "\n";
  }
  const auto p = report.model_names.size();
  if (!report.dataset_names.empty()) {
    out << "\nWin-tie-loss (row vs column), significant at >= "
        << fmt("%.2f", sign_test_threshold(static_cast<int>(report.dataset_names.size()))) << " wins\n";
    out << width("", 14);
    for (std::size_t j = 0; j + 1 < p; ++j) out << width(report.model_names[j], 14);
    out << "\n";
    for (std::size_t i = 1; i < p; ++i) {
      out << width(report.model_names[i], 14);
      for (std::size_t j = 0; j < i; ++j) {
        const auto& w = report.pairwise[i][j];
        out << width("[" + std::to_string(w.wins) + ", " + std::to_string(w.ties) + ", " + std::to_string(w.losses) + "]" +
                         (w.significant ? "*" : ""),
                     14);
      }
      out << "\n";
    }
  }
  return out.str();
}

std::string render_report_json(const BenchmarkResult& result, const StatsReport& report) {
  json j;
  j["better"] = result.better == Better::Higher ? "higher" : "lower";
  j["models"] = result.model_names;
  j["datasets"] = json::array();
  for (std::size_t i = 0; i < result.dataset_names.size(); ++i) {
    json row;
    row["name"] = result.dataset_names[i];
    row["scores"] = json::array();
    for (Eigen::Index k = 0; k < result.scores.cols(); ++k) {
      const double v = result.scores(static_cast<Eigen::Index>(i), k);
      row["scores"].push_back(std::isnan(v) ? json(nullptr) : json(v));
    }
    if (!result.failures[i].empty()) row["failure"] = result.failures[i];
    if (i < result.params.size()) {
      json params = json::array();
      for (const auto& hp : result.params[i]) {
        if (!hp) {
          params.push_back(nullptr);
          continue;
        }
        params.push_back({{"gamma1", hp->gamma1}, {"gamma2", hp->gamma2}, {"eta1", hp->eta1}, {"eta2", hp->eta2},
                          {"sigma", hp->kernel.sigma}});
      }
      row["params"] = params;
    }
    j["datasets"].push_back(row);
  }
  j["ranked_datasets"] = report.dataset_names;
  j["average_ranks"] = std::vector<double>(report.ranks.average_ranks.data(),
                                           report.ranks.average_ranks.data() + report.ranks.average_ranks.size());
  if (report.friedman) {
    const auto& f = *report.friedman;
    j["friedman"] = {{"chi2", f.chi2}, {"ff", f.ff}, {"df1", f.df1}, {"df2", f.df2}, {"reject_null", f.reject_null}};
    if (f.critical_value) j["friedman"]["critical_value"] = *f.critical_value;
  } else {
    j["friedman"] = {{"skipped", report.friedman_skipped}};
  }
  if (report.critical_difference) {
    j["nemenyi"] = {{"q_alpha", *report.q_alpha}, {"critical_difference", *report.critical_difference}};
  }
  j["win_tie_loss"] = json::array();
  for (std::size_t a = 0; a < report.pairwise.size(); ++a) {
    for (std::size_t b = 0; b < report.pairwise.size(); ++b) {
      if (a == b) continue;
      const auto& w = report.pairwise[a][b];
      j["win_tie_loss"].push_back({{"model", report.model_names[a]},
                                   {"against", report.model_names[b]},
                                   {"wins", w.wins},
                                   {"ties", w.ties},
                                   {"losses", w.losses},
                                   {"threshold", w.threshold},
                                   {"significant", w.significant}});
    }
  }
  return j.dump(2) + "\n";
}

void write_benchmark_outputs(const std::filesystem::path& dir, const BenchmarkResult& result,
                             const StatsReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  write_file_atomic(dir / "scores.csv", render_scores_csv(result));
  write_file_atomic(dir / "ranks.csv", render_ranks_csv(report));
  write_file_atomic(dir / "report.txt", render_report_text(result, report));
  write_file_atomic(dir / "report.json", render_report_json(result, report));
}

}  // namespace trkm
