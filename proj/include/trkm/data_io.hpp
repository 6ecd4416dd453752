#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "trkm/dense_solver.hpp"
#include "trkm/rkm.hpp"
#include "trkm/trkm_classifier.hpp"
#include "trkm/trkm_regressor.hpp"

namespace trkm {

enum class Task { Classify, Regress, Unlabeled };

// Raw label strings behind -1 and +1.
struct LabelMapping {
  std::string negative;
  std::string positive;

  int encode(const std::string& raw) const;
  const std::string& decode(int label) const { return label > 0 ? positive : negative; }

  friend bool operator==(const LabelMapping&, const LabelMapping&) = default;
};

// Per-feature affine map onto [0, 1] fitted on training data.
struct MinMaxRecord {
  Vector min;
  Vector max;

  static MinMaxRecord fit(const Matrix& X);
  Matrix apply(const Matrix& X) const;

  friend bool operator==(const MinMaxRecord&, const MinMaxRecord&) = default;
};

// Affine target scaling (y - offset) / scale, undone at predict time.
struct TargetScaling {
  double offset = 0.0;
  double scale = 1.0;

  static TargetScaling fit(const Vector& y);
  Vector apply(const Vector& y) const { return (y.array() - offset) / scale; }
  Vector invert(const Vector& y) const { return y.array() * scale + offset; }

  friend bool operator==(const TargetScaling&, const TargetScaling&) = default;
};

struct Dataset {
  Matrix X;
  Eigen::VectorXi labels;  // classification only, values in {-1, +1}
  Vector targets;          // regression only
  Task task = Task::Unlabeled;
  std::vector<std::string> feature_names;
  std::optional<LabelMapping> label_mapping;
  std::optional<MinMaxRecord> normalization;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index features() const { return X.cols(); }
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

struct CsvSchema {
  // Column name (with a header) or zero-based index; "last" selects the final
  // column. At most one of the two may be set; neither means features only.
  std::optional<std::string> label_column;
  std::optional<std::string> target_column;
  char delimiter = ',';
  bool header = true;
  // Reuse a stored mapping instead of deriving one from the file.
  std::optional<LabelMapping> mapping;
};

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
Dataset parse_csv(const std::string& text, const CsvSchema& schema, const std::string& source = "<memory>");

// Fits a min-max record on the dataset's features and applies it.
Dataset normalize_minmax(const Dataset& dataset);
// Applies an existing record, e.g. training statistics to test data.
Dataset apply_normalization(const Dataset& dataset, const MinMaxRecord& record);

using AnyModel = std::variant<TrkmClassifierModel<double>, TrkmRegressorModel<double>, RkmModel<double>>;

struct ModelFile {
  static constexpr int kFormatVersion = 1;

  AnyModel model;
  std::optional<MinMaxRecord> normalization;
  std::optional<LabelMapping> label_mapping;
  std::optional<TargetScaling> target_scaling;
  std::vector<std::string> feature_names;

  Task task() const;
  Eigen::Index features() const;
  std::string kind() const;
};

std::string serialize_model(const ModelFile& file);
ModelFile deserialize_model(const std::string& bytes);

void save_model(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

// Writes to a sibling temporary and renames over the destination.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// Exact text form of a double ("%a" hexadecimal float) and its inverse.
std::string hexfloat(double value);
double parse_hexfloat(const std::string& text);

}  // namespace trkm
