#include "trkm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "trkm/benchmark.hpp"
#include "trkm/data_io.hpp"
#include "trkm/errors.hpp"
#include "trkm/model_selection.hpp"
#include "trkm/parallel.hpp"
#include "trkm/stats.hpp"

namespace trkm {

namespace fs = std::filesystem;

namespace {

std::string num(double v, const char* pattern = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

struct DataFlags {
  std::string path;
  std::string label_col = "last";
  std::string target_col = "last";
  std::string delimiter = ",";
  bool no_header = false;

  void add(CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--data", path, "CSV dataset");
    if (required) opt->required();
    cmd->add_option("--label-col", label_col, "label column: name, zero-based index or 'last'");
    cmd->add_option("--target-col", target_col, "regression target column: name, index or 'last'");
    cmd->add_option("--delimiter", delimiter, "field separator");
    cmd->add_flag("--no-header", no_header, "first row holds data");
  }

  CsvSchema schema(Task task) const {
    if (delimiter.size() != 1) throw InvalidArgument("--delimiter must be a single character");
    CsvSchema s;
    s.delimiter = delimiter[0];
    s.header = !no_header;
    if (task == Task::Classify) s.label_column = label_col;
    if (task == Task::Regress) s.target_column = target_col;
    return s;
  }
};

struct ModelFlags {
  std::string task = "classify";
  std::string model = "trkm";

  void add(CLI::App* cmd) {
    cmd->add_option("--task", task, "classify or regress")->check(CLI::IsMember({"classify", "regress"}));
    cmd->add_option("--model", model, "trkm or rkm")->check(CLI::IsMember({"trkm", "rkm"}));
  }

  Task parsed_task() const { return task == "regress" ? Task::Regress : Task::Classify; }

  ModelKind kind() const {
    if (model == "rkm") {
      if (task == "regress") throw InvalidArgument("the RKM baseline only supports --task classify");
      return ModelKind::Rkm;
    }
    return task == "regress" ? ModelKind::TrkmRegressor : ModelKind::TrkmClassifier;
  }
};

struct Global {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string output_dir = ".";
};

fs::path in_output_dir(const Global& g, const std::string& explicit_path, const char* default_name) {
  if (!explicit_path.empty()) return explicit_path;
  return fs::path(g.output_dir) / default_name;
}

void ensure_parent(const fs::path& file) {
  const auto parent = file.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory '" + parent.string() + "': " + ec.message());
}

// Normalization and target scaling fitted on the dataset, applied in place.
struct Prepared {
  Dataset data;
  std::optional<TargetScaling> scaling;
};

Prepared prepare(Dataset data, bool normalize, bool scale_target) {
  Prepared p;
  if (normalize) data = normalize_minmax(data);
  if (scale_target && data.task == Task::Regress) {
    p.scaling = TargetScaling::fit(data.targets);
    data.targets = p.scaling->apply(data.targets);
  }
  p.data = std::move(data);
  return p;
}

ModelFile fit_model_file(const Prepared& p, ModelKind kind, const TwinHyperparams& hp) {
  const Dataset& d = p.data;
  ModelFile file{TrkmClassifierModel<double>{}, d.normalization, d.label_mapping, p.scaling, d.feature_names};
  switch (kind) {
    case ModelKind::TrkmClassifier:
      file.model = fit_classifier<double>(d.X, d.labels, hp);
      break;
    case ModelKind::TrkmRegressor:
      file.model = fit_regressor<double>(d.X, d.targets, hp);
      break;
    case ModelKind::Rkm:
      file.model = fit_rkm<double>(d.X, d.labels, hp.gamma1, hp.eta1, hp.kernel);
      break;
  }
  return file;
}

void print_system(std::ostream& out, const char* name, const SolveReport<double>& r, double sum_h, double expected) {
  out << "  " << name << ": residual " << num(r.residual_norm, "%.3e") << ", cond " << num(r.condition_estimate, "%.3e")
      << ", sum(h) " << num(sum_h, "%.12g") << " (expected " << num(expected, "%.12g") << ")\n";
}

void print_fit_report(std::ostream& out, const ModelFile& file) {
  out << "model: " << file.kind() << "\n";
  if (const auto* m = std::get_if<TrkmClassifierModel<double>>(&file.model)) {
    print_system(out, "class +1 system", m->fit_diag[0], m->h1.sum(), static_cast<double>(m->B.rows()));
    print_system(out, "class -1 system", m->fit_diag[1], m->h2.sum(), -static_cast<double>(m->A.rows()));
    out << "  b1 " << num(m->b1, "%.12g") << ", b2 " << num(m->b2, "%.12g") << "\n";
  } else if (const auto* r = std::get_if<TrkmRegressorModel<double>>(&file.model)) {
    const auto n = static_cast<double>(r->X.rows());
    print_system(out, "lower regressor system", r->fit_diag[0], r->h1.sum(), n);
    print_system(out, "upper regressor system", r->fit_diag[1], r->h2.sum(), n);
    out << "  b1 " << num(r->b1, "%.12g") << ", b2 " << num(r->b2, "%.12g") << "\n";
  } else if (const auto* k = std::get_if<RkmModel<double>>(&file.model)) {
    print_system(out, "RKM system", k->fit_diag, k->h.sum(), 0.0);
    out << "  b " << num(k->b, "%.12g") << "\n";
  }
}

// Predictions in the units of the original data.
struct Predictions {
  Eigen::VectorXi labels;
  Vector scores;
  Vector values;
};

Predictions predict_file(const ModelFile& file, const Matrix& raw_X) {
  if (raw_X.cols() != file.features()) {
    throw FeatureCountMismatch("model expects " + std::to_string(file.features()) + " features, data has " +
                               std::to_string(raw_X.cols()));
  }
  const Matrix X = file.normalization ? file.normalization->apply(raw_X) : raw_X;
  Predictions p;
  if (const auto* m = std::get_if<TrkmClassifierModel<double>>(&file.model)) {
    const auto dv = decision_values(*m, X);
    p.scores = dv.g1 + dv.g2;
    p.labels = labels_from_scores<double>(p.scores);
  } else if (const auto* k = std::get_if<RkmModel<double>>(&file.model)) {
    p.scores = rkm_scores(*k, X);
    p.labels = labels_from_scores<double>(p.scores);
  } else {
    p.values = predict_regression(std::get<TrkmRegressorModel<double>>(file.model), X);
    if (file.target_scaling) p.values = file.target_scaling->invert(p.values);
  }
  return p;
}

void print_regression_metrics(std::ostream& out, const RegressionErrors& e) {
  out << "RMSE " << num(e.rmse, "%.6f") << "\nMAE " << num(e.mae, "%.6f") << "\nPos error "
      << num(e.pos_error, "%.6f") << " (" << e.count_pos << " under-predicted)\nNeg error " << num(e.neg_error, "%.6f")
      << " (" << e.count_neg << " over-predicted)\n";
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

Better parse_better(const std::string& s) { return s == "lower" ? Better::Lower : Better::Higher; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Twin restricted kernel machines: train, predict, tune and compare."};
  app.name("trkm");
  app.require_subcommand(1);
  app.fallthrough();

  Global g;
  app.add_option("--seed", g.seed, "seed for splits and folds");
  app.add_option("--threads", g.threads, "worker threads, 0 = all cores");
  app.add_option("--output-dir", g.output_dir, "where output files go");

  // train
  auto* train = app.add_subcommand("train", "fit one model with fixed hyperparameters");
  DataFlags train_data;
  ModelFlags train_model;
  double gamma = 1.0;
  double eta = 1.0;
  double sigma = 1.0;
  std::optional<double> gamma2;
  std::optional<double> eta2;
  std::string kernel = "gaussian";
  bool no_normalize = false;
  bool normalize_target = false;
  std::string model_out;
  train_model.add(train);
  train_data.add(train, true);
  train->add_option("--gamma", gamma, "gamma1 (and gamma2 unless --gamma2 is given)");
  train->add_option("--eta", eta, "eta1 (and eta2 unless --eta2 is given)");
  train->add_option("--sigma", sigma, "Gaussian kernel width");
  train->add_option("--gamma2", gamma2, "separate gamma for the second system");
  train->add_option("--eta2", eta2, "separate eta for the second system");
  train->add_option("--kernel", kernel, "gaussian or linear")->check(CLI::IsMember({"gaussian", "linear"}));
  train->add_flag("--no-normalize", no_normalize, "skip min-max feature scaling");
  train->add_flag("--normalize-target", normalize_target, "scale regression targets onto [0, 1]");
  train->add_option("--out", model_out, "model file (default <output-dir>/model.trkm)");

  // predict
  auto* predict = app.add_subcommand("predict", "apply a saved model to a CSV file");
  std::string model_in;
  DataFlags pred_data;
  bool with_truth = false;
  std::string pred_out;
  predict->add_option("--model-file", model_in, "model written by train or gridsearch")->required();
  pred_data.add(predict, true);
  predict->add_flag("--truth", with_truth, "the file has a truth column (--label-col / --target-col)");
  predict->add_option("--out", pred_out, "predictions CSV (default <output-dir>/predictions.csv)");

  // gridsearch
  auto* gridsearch = app.add_subcommand("gridsearch", "k-fold grid search, then refit the best cell");
  DataFlags grid_data;
  ModelFlags grid_model;
  GridSpec grid = GridSpec::defaults();
  bool unequal = false;
  double train_fraction = 0.7;
  bool no_stratify = false;
  bool grid_no_normalize = false;
  bool grid_normalize_target = false;
  grid_model.add(gridsearch);
  grid_data.add(gridsearch, true);
  gridsearch->add_option("--gamma-list", grid.gamma_values, "gamma values")->delimiter(',');
  gridsearch->add_option("--eta-list", grid.eta_values, "eta values")->delimiter(',');
  gridsearch->add_option("--sigma-list", grid.sigma_values, "sigma values")->delimiter(',');
  gridsearch->add_option("--folds", grid.folds, "cross-validation folds");
  gridsearch->add_flag("--unequal-penalties", unequal, "search gamma1, gamma2, eta1, eta2 separately");
  gridsearch->add_option("--train-fraction", train_fraction, "share of rows used for tuning; 1 keeps no test set");
  gridsearch->add_flag("--no-stratify", no_stratify, "plain random split for classification");
  gridsearch->add_flag("--no-normalize", grid_no_normalize, "skip min-max feature scaling");
  gridsearch->add_flag("--normalize-target", grid_normalize_target, "scale regression targets onto [0, 1]");

  // benchmark
  auto* benchmark = app.add_subcommand("benchmark", "run a dataset x model benchmark and compare the models");
  std::string config_path;
  std::string scores_path;
  std::string better = "higher";
  std::optional<double> f_critical;
  std::optional<double> q_alpha;
  auto* config_opt = benchmark->add_option("--config", config_path, "benchmark JSON config");
  auto* scores_opt = benchmark->add_option("--scores-file", scores_path, "skip training, read a score table");
  config_opt->excludes(scores_opt);
  benchmark->add_option("--better", better, "with --scores-file: higher or lower")
      ->check(CLI::IsMember({"higher", "lower"}));
  benchmark->add_option("--f-critical", f_critical, "critical value of the F distribution");
  benchmark->add_option("--q-alpha", q_alpha, "Nemenyi q_alpha (default: alpha = 0.05 table)");

  // stats
  auto* stats = app.add_subcommand("stats", "rank models from a score table");
  std::string stats_scores;
  std::string stats_better = "higher";
  std::optional<double> stats_f;
  std::optional<double> stats_q;
  bool stats_json = false;
  stats->add_option("--scores-file", stats_scores, "CSV: dataset column then one column per model")->required();
  stats->add_option("--better", stats_better, "higher or lower")->check(CLI::IsMember({"higher", "lower"}));
  stats->add_option("--f-critical", stats_f, "critical value of the F distribution");
  stats->add_option("--q-alpha", stats_q, "Nemenyi q_alpha");
  stats->add_flag("--json", stats_json, "print JSON instead of the text report");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitUsage;
  }

  try {
    set_num_threads(g.threads);

    if (*train) {
      const ModelKind kind = train_model.kind();
      TwinHyperparams hp = TwinHyperparams::equal_penalties(
          gamma, eta, kernel == "linear" ? KernelSpec::linear() : KernelSpec::gaussian(sigma));
      if (gamma2) hp.gamma2 = *gamma2;
      if (eta2) hp.eta2 = *eta2;
      hp.validate();
      const Task task = train_model.parsed_task();
      const Dataset raw = load_csv(train_data.path, train_data.schema(task));
      const auto p = prepare(raw, !no_normalize, normalize_target);
      const auto file = fit_model_file(p, kind, hp);
      const auto path = in_output_dir(g, model_out, "model.trkm");
      ensure_parent(path);
      save_model(file, path);
      out << "trained on " << p.data.size() << " rows, " << p.data.features() << " features\n";
      print_fit_report(out, file);
      const auto pred = predict_file(file, raw.X);
      if (task == Task::Classify) {
        out << "training accuracy " << num(classification_accuracy(pred.labels, raw.labels), "%.4f") << "%\n";
      } else {
        out << "training RMSE " << num(regression_errors(pred.values, raw.targets).rmse, "%.6f") << "\n";
      }
      out << "model written to " << path.string() << "\n";
      return kExitOk;
    }

    if (*predict) {
      const ModelFile file = load_model(model_in);
      const Task model_task = file.task();
      const bool label_given = predict->count("--label-col") > 0;
      const bool target_given = predict->count("--target-col") > 0;
      if ((model_task == Task::Classify && target_given) || (model_task == Task::Regress && label_given)) {
        throw TaskMismatch(std::string("model is a ") + (model_task == Task::Classify ? "classifier" : "regressor") +
                           " but the data names a " + (target_given ? "regression target" : "class label") +
                           " column");
      }
      const bool truth = with_truth || label_given || target_given;
      CsvSchema schema = pred_data.schema(truth ? model_task : Task::Unlabeled);
      if (model_task == Task::Classify) schema.mapping = file.label_mapping;
      const Dataset data = load_csv(pred_data.path, schema);
      const auto pred = predict_file(file, data.X);

      std::string csv;
      if (model_task == Task::Classify) {
        csv = "prediction,score\n";
        for (Eigen::Index i = 0; i < pred.labels.size(); ++i) {
          const std::string raw = file.label_mapping ? file.label_mapping->decode(pred.labels(i))
                                                     : std::to_string(pred.labels(i));
          csv += raw + "," + num(pred.scores(i), "%.17g") + "\n";
        }
      } else {
        csv = "prediction\n";
        for (Eigen::Index i = 0; i < pred.values.size(); ++i) csv += num(pred.values(i), "%.17g") + "\n";
      }
      const auto path = in_output_dir(g, pred_out, "predictions.csv");
      ensure_parent(path);
      write_file_atomic(path, csv);
      out << data.size() << " predictions written to " << path.string() << "\n";
      if (truth) {
        if (model_task == Task::Classify) {
          out << "accuracy " << num(classification_accuracy(pred.labels, data.labels), "%.4f") << "%\n";
        } else {
          print_regression_metrics(out, regression_errors(pred.values, data.targets));
        }
      }
      return kExitOk;
    }

    if (*gridsearch) {
      const ModelKind kind = grid_model.kind();
      const Task task = grid_model.parsed_task();
      grid.equal_penalties = !unequal;
      grid.validate();
      if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw InvalidArgument("--train-fraction must lie in (0, 1]");
      }
      const Dataset data = load_csv(grid_data.path, grid_data.schema(task));
      Dataset train_raw = data;
      std::optional<Dataset> test_raw;
      if (train_fraction < 1.0) {
        auto [tr, te] = split(data, {train_fraction, g.seed, !no_stratify});
        train_raw = std::move(tr);
        test_raw = std::move(te);
      }
      const auto p = prepare(train_raw, !grid_no_normalize, grid_normalize_target);
      const auto result = grid_search(p.data, grid, kind, g.seed ^ 0x9e3779b97f4a7c15ULL);

      std::string csv = "gamma1,gamma2,eta1,eta2,sigma,mean_score";
      for (int f = 0; f < grid.folds; ++f) csv += ",fold" + std::to_string(f + 1);
      csv += ",failure\n";
      nlohmann::json cells = nlohmann::json::array();
      for (const auto& cell : result.table) {
        const auto& c = cell.params;
        csv += num(c.gamma1, "%.17g") + "," + num(c.gamma2, "%.17g") + "," + num(c.eta1, "%.17g") + "," +
               num(c.eta2, "%.17g") + "," + num(c.kernel.sigma, "%.17g") + "," +
               (cell.failed ? std::string("failed") : num(cell.mean_score, "%.17g"));
        for (int f = 0; f < grid.folds; ++f) {
          csv += ",";
          if (static_cast<std::size_t>(f) < cell.fold_scores.size()) csv += num(cell.fold_scores[f], "%.17g");
        }
        std::string reason = cell.failure;
        std::replace(reason.begin(), reason.end(), ',', ';');
        csv += "," + reason + "\n";
        nlohmann::json jc = {{"gamma1", c.gamma1}, {"gamma2", c.gamma2}, {"eta1", c.eta1},
                             {"eta2", c.eta2},     {"sigma", c.kernel.sigma}, {"fold_scores", cell.fold_scores}};
        jc["mean_score"] = cell.failed ? nlohmann::json(nullptr) : nlohmann::json(cell.mean_score);
        if (cell.failed) jc["failure"] = cell.failure;
        cells.push_back(jc);
      }
      const auto& best = result.best_params;
      nlohmann::json summary = {{"model", to_string(kind)},
                                {"seed", g.seed},
                                {"folds", grid.folds},
                                {"metric", result.higher_is_better ? "accuracy" : "rmse"},
                                {"best_index", result.best_index},
                                {"best", {{"gamma1", best.gamma1}, {"gamma2", best.gamma2}, {"eta1", best.eta1},
                                          {"eta2", best.eta2}, {"sigma", best.kernel.sigma}}},
                                {"best_cv_score", result.best_cv_score},
                                {"cells", cells}};

      const auto file = fit_model_file(p, kind, best);
      std::optional<double> test_score;
      if (test_raw) {
        const auto pred = predict_file(file, test_raw->X);
        test_score = task == Task::Classify ? classification_accuracy(pred.labels, test_raw->labels)
                                            : regression_errors(pred.values, test_raw->targets).rmse;
        summary["test_score"] = *test_score;
      }

      const fs::path dir = g.output_dir;
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
      write_file_atomic(dir / "grid.csv", csv);
      write_file_atomic(dir / "grid.json", summary.dump(2) + "\n");
      save_model(file, dir / "model.trkm");

      std::size_t failed = 0;
      for (const auto& cell : result.table) failed += cell.failed ? 1 : 0;
      out << result.table.size() << " cells, " << failed << " failed\n";
      out << "best: gamma1=" << num(best.gamma1) << " gamma2=" << num(best.gamma2) << " eta1=" << num(best.eta1)
          << " eta2=" << num(best.eta2) << " sigma=" << num(best.kernel.sigma) << "\n";
      out << "cv " << (result.higher_is_better ? "accuracy " : "RMSE ") << num(result.best_cv_score, "%.4f") << "\n";
      if (test_score) out << "test " << (result.higher_is_better ? "accuracy " : "RMSE ") << num(*test_score, "%.4f") << "\n";
      out << "wrote grid.csv, grid.json and model.trkm to " << dir.string() << "\n";
      return kExitOk;
    }

    if (*benchmark) {
      BenchmarkResult result;
      if (!config_path.empty()) {
        result = run_benchmark(BenchmarkConfig::load(config_path), err);
      } else if (!scores_path.empty()) {
        result = load_scores_csv(scores_path, parse_better(better));
      } else {
        throw InvalidArgument("benchmark needs --config or --scores-file");
      }
      const auto report = analyze(result, f_critical, q_alpha);
      write_benchmark_outputs(g.output_dir, result, report);
      out << render_report_text(result, report);
      std::vector<std::string> failed;
      for (std::size_t i = 0; i < result.failures.size(); ++i) {
        if (!result.failures[i].empty()) failed.push_back(result.dataset_names[i]);
      }
      if (!failed.empty()) err << "warning: failed rows: " << join(failed, ", ") << "\n";
      return kExitOk;
    }

    if (*stats) {
      const auto result = load_scores_csv(stats_scores, parse_better(stats_better));
      const auto report = analyze(result, stats_f, stats_q);
      out << (stats_json ? render_report_json(result, report) : render_report_text(result, report));
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.category()) {
      case Error::Category::Usage:
        return kExitUsage;
      case Error::Category::Data:
        return kExitData;
      case Error::Category::Numeric:
        return kExitNumeric;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUnknown;
  }
  return kExitUnknown;
}

}  // namespace trkm
