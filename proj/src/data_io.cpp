#include "trkm/data_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "trkm/errors.hpp"

namespace trkm {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// labels, normalization, subsets

int LabelMapping::encode(const std::string& raw) const {
  if (raw == positive) return 1;
  if (raw == negative) return -1;
  throw MoreThanTwoClasses("label '" + raw + "' is neither '" + negative + "' nor '" + positive + "'");
}

MinMaxRecord MinMaxRecord::fit(const Matrix& X) {
  if (X.rows() == 0) throw EmptyInput("cannot fit min-max normalization on an empty matrix");
  return {X.colwise().minCoeff().transpose(), X.colwise().maxCoeff().transpose()};
}

Matrix MinMaxRecord::apply(const Matrix& X) const {
  if (X.cols() != min.size()) {
    throw FeatureCountMismatch("normalization was fitted on " + std::to_string(min.size()) +
                               " features, data has " + std::to_string(X.cols()));
  }
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double range = max(j) - min(j);
    if (range > 0.0) {
      out.col(j) = (X.col(j).array() - min(j)) / range;
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

TargetScaling TargetScaling::fit(const Vector& y) {
  if (y.size() == 0) throw EmptyInput("cannot fit target scaling on an empty vector");
  const double lo = y.minCoeff();
  const double range = y.maxCoeff() - lo;
  return {lo, range > 0.0 ? range : 1.0};
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.X = X(rows, Eigen::all);
  if (labels.size() > 0) out.labels = labels(rows);
  if (targets.size() > 0) out.targets = targets(rows);
  out.task = task;
  out.feature_names = feature_names;
  out.label_mapping = label_mapping;
  out.normalization = normalization;
  return out;
}

Dataset normalize_minmax(const Dataset& dataset) {
  return apply_normalization(dataset, MinMaxRecord::fit(dataset.X));
}

Dataset apply_normalization(const Dataset& dataset, const MinMaxRecord& record) {
  Dataset out = dataset;
  out.X = record.apply(dataset.X);
  out.normalization = record;
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    fields.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? pos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::optional<double> parse_number(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::size_t resolve_column(const std::string& spec, const std::vector<std::string>& names, std::size_t columns,
                           const std::string& source) {
  if (spec == "last") return columns - 1;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == spec) return i;
  }
  if (!spec.empty() && std::all_of(spec.begin(), spec.end(), [](unsigned char c) { return std::isdigit(c); })) {
    const auto index = std::stoul(spec);
    if (index < columns) return index;
  }
  throw MissingColumn(source + ": no column '" + spec + "'");
}

}  // namespace

Dataset parse_csv(const std::string& text, const CsvSchema& schema, const std::string& source) {
  if (schema.label_column && schema.target_column) {
    throw InvalidArgument("a CSV schema names either a label column or a target column, not both");
  }

  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::vector<std::string> header;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = schema.header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line, schema.delimiter);
    if (header_pending) {
      header = std::move(fields);
      header_pending = false;
      continue;
    }
    rows.emplace_back(line_no, std::move(fields));
  }
  if (rows.empty()) throw EmptyInput(source + ": no data rows");

  const std::size_t columns = header.empty() ? rows.front().second.size() : header.size();
  for (const auto& [row_line, fields] : rows) {
    if (fields.size() != columns) {
      throw ParseError(source + ": row " + std::to_string(row_line) + ": expected " + std::to_string(columns) +
                       " fields, got " + std::to_string(fields.size()));
    }
  }

  Dataset out;
  std::optional<std::size_t> response;
  if (schema.label_column) {
    response = resolve_column(*schema.label_column, header, columns, source);
    out.task = Task::Classify;
  } else if (schema.target_column) {
    response = resolve_column(*schema.target_column, header, columns, source);
    out.task = Task::Regress;
  }

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < columns; ++c) {
    if (c != response) feature_cols.push_back(c);
  }
  if (feature_cols.empty()) throw ParseError(source + ": no feature columns");
  for (const auto c : feature_cols) {
    out.feature_names.push_back(header.empty() ? "x" + std::to_string(c) : header[c]);
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  out.X.resize(n, static_cast<Eigen::Index>(feature_cols.size()));
  std::vector<std::string> raw_labels;
  if (out.task == Task::Regress) out.targets.resize(n);

  const auto column_name = [&](std::size_t c) {
    return header.empty() ? std::to_string(c) : std::to_string(c) + " ('" + header[c] + "')";
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [row_line, fields] = rows[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const auto c = feature_cols[k];
      const auto value = parse_number(fields[c]);
      if (!value) {
        throw NonNumericFeature(source + ": row " + std::to_string(row_line) + ", column " + column_name(c) +
                                ": '" + fields[c] + "' is not a finite number");
      }
      out.X(i, static_cast<Eigen::Index>(k)) = *value;
    }
    if (out.task == Task::Classify) {
      raw_labels.push_back(fields[*response]);
    } else if (out.task == Task::Regress) {
      const auto value = parse_number(fields[*response]);
      if (!value) {
        throw ParseError(source + ": row " + std::to_string(row_line) + ", column " + column_name(*response) +
                         ": target '" + fields[*response] + "' is not a finite number");
      }
      out.targets(i) = *value;
    }
  }

  if (out.task == Task::Classify) {
    LabelMapping mapping;
    if (schema.mapping) {
      mapping = *schema.mapping;
    } else {
      const std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
      if (distinct.size() > 2) {
        throw MoreThanTwoClasses(source + ": found " + std::to_string(distinct.size()) +
                                 " distinct labels, expected 2");
      }
      if (distinct.size() < 2) throw EmptyClass(source + ": only one label value present");
      mapping = {*distinct.begin(), *distinct.rbegin()};
    }
    out.labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) out.labels(i) = mapping.encode(raw_labels[static_cast<std::size_t>(i)]);
    out.label_mapping = mapping;
  }
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), schema, path.string());
}

// ---------------------------------------------------------------------------
// model files

std::string hexfloat(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", value);
  return buf;
}

double parse_hexfloat(const std::string& text) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) throw CorruptModel("bad number '" + text + "'");
  return value;
}

namespace {

constexpr const char* kMagic = "trkm-model";

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string checksum_hex(std::string_view bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(bytes));
  return buf;
}

json encode_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(hexfloat(v(i)));
  return out;
}

json encode_matrix(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(hexfloat(m(i, j)));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Vector decode_vector(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_hexfloat(j[i].get<std::string>());
  return v;
}

Matrix decode_matrix(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw CorruptModel("matrix payload size does not match its shape");
  }
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = parse_hexfloat(data[k++].get<std::string>());
  }
  return m;
}

json encode_kernel(const KernelSpec& k) { return {{"family", to_string(k.family)}, {"sigma", hexfloat(k.sigma)}}; }

KernelSpec decode_kernel(const json& j) {
  const auto family = j.at("family").get<std::string>();
  KernelSpec k;
  if (family == "gaussian") {
    k.family = KernelFamily::Gaussian;
  } else if (family == "linear") {
    k.family = KernelFamily::Linear;
  } else {
    throw CorruptModel("unknown kernel family '" + family + "'");
  }
  k.sigma = parse_hexfloat(j.at("sigma").get<std::string>());
  return k;
}

json encode_twin(const TwinHyperparams& hp) {
  return {{"gamma1", hexfloat(hp.gamma1)}, {"gamma2", hexfloat(hp.gamma2)}, {"eta1", hexfloat(hp.eta1)},
          {"eta2", hexfloat(hp.eta2)},     {"kernel", encode_kernel(hp.kernel)}};
}

TwinHyperparams decode_twin(const json& j) {
  TwinHyperparams hp;
  hp.gamma1 = parse_hexfloat(j.at("gamma1").get<std::string>());
  hp.gamma2 = parse_hexfloat(j.at("gamma2").get<std::string>());
  hp.eta1 = parse_hexfloat(j.at("eta1").get<std::string>());
  hp.eta2 = parse_hexfloat(j.at("eta2").get<std::string>());
  hp.kernel = decode_kernel(j.at("kernel"));
  return hp;
}

struct ModelEncoder {
  json& out;

  void operator()(const TrkmClassifierModel<double>& m) const {
    out["kind"] = "trkm-c";
    out["hyperparams"] = encode_twin(m.hyperparams);
    out["A"] = encode_matrix(m.A);
    out["B"] = encode_matrix(m.B);
    out["h1"] = encode_vector(m.h1);
    out["b1"] = hexfloat(m.b1);
    out["h2"] = encode_vector(m.h2);
    out["b2"] = hexfloat(m.b2);
  }
  void operator()(const TrkmRegressorModel<double>& m) const {
    out["kind"] = "trkm-r";
    out["hyperparams"] = encode_twin(m.hyperparams);
    out["X"] = encode_matrix(m.X);
    out["Y"] = encode_vector(m.Y);
    out["h1"] = encode_vector(m.h1);
    out["b1"] = hexfloat(m.b1);
    out["h2"] = encode_vector(m.h2);
    out["b2"] = hexfloat(m.b2);
  }
  void operator()(const RkmModel<double>& m) const {
    out["kind"] = "rkm";
    out["gamma"] = hexfloat(m.gamma);
    out["eta"] = hexfloat(m.eta);
    out["kernel"] = encode_kernel(m.kernel);
    out["X"] = encode_matrix(m.X);
    out["y"] = std::vector<int>(m.y.data(), m.y.data() + m.y.size());
    out["h"] = encode_vector(m.h);
    out["b"] = hexfloat(m.b);
  }
};

AnyModel decode_model(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "trkm-c") {
    TrkmClassifierModel<double> m;
    m.hyperparams = decode_twin(j.at("hyperparams"));
    m.A = decode_matrix(j.at("A"));
    m.B = decode_matrix(j.at("B"));
    m.h1 = decode_vector(j.at("h1"));
    m.b1 = parse_hexfloat(j.at("b1").get<std::string>());
    m.h2 = decode_vector(j.at("h2"));
    m.b2 = parse_hexfloat(j.at("b2").get<std::string>());
    if (m.h1.size() != m.A.rows() || m.h2.size() != m.B.rows() || m.A.cols() != m.B.cols()) {
      throw CorruptModel("classifier dual variables do not match stored class matrices");
    }
    return m;
  }
  if (kind == "trkm-r") {
    TrkmRegressorModel<double> m;
    m.hyperparams = decode_twin(j.at("hyperparams"));
    m.X = decode_matrix(j.at("X"));
    m.Y = decode_vector(j.at("Y"));
    m.h1 = decode_vector(j.at("h1"));
    m.b1 = parse_hexfloat(j.at("b1").get<std::string>());
    m.h2 = decode_vector(j.at("h2"));
    m.b2 = parse_hexfloat(j.at("b2").get<std::string>());
    if (m.h1.size() != m.X.rows() || m.h2.size() != m.X.rows() || m.Y.size() != m.X.rows()) {
      throw CorruptModel("regressor dual variables do not match stored training matrix");
    }
    return m;
  }
  if (kind == "rkm") {
    RkmModel<double> m;
    m.gamma = parse_hexfloat(j.at("gamma").get<std::string>());
    m.eta = parse_hexfloat(j.at("eta").get<std::string>());
    m.kernel = decode_kernel(j.at("kernel"));
    m.X = decode_matrix(j.at("X"));
    const auto y = j.at("y").get<std::vector<int>>();
    m.y = Eigen::Map<const Eigen::VectorXi>(y.data(), static_cast<Eigen::Index>(y.size()));
    m.h = decode_vector(j.at("h"));
    m.b = parse_hexfloat(j.at("b").get<std::string>());
    if (m.h.size() != m.X.rows() || m.y.size() != m.X.rows()) {
      throw CorruptModel("RKM dual variables do not match stored training matrix");
    }
    return m;
  }
  throw CorruptModel("unknown model kind '" + kind + "'");
}

}  // namespace

Task ModelFile::task() const {
  return std::holds_alternative<TrkmRegressorModel<double>>(model) ? Task::Regress : Task::Classify;
}

Eigen::Index ModelFile::features() const {
  return std::visit([](const auto& m) { return m.features(); }, model);
}

std::string ModelFile::kind() const {
  switch (model.index()) {
    case 0:
      return "trkm-c";
    case 1:
      return "trkm-r";
    default:
      return "rkm";
  }
}

std::string serialize_model(const ModelFile& file) {
  json payload;
  std::visit(ModelEncoder{payload}, file.model);
  if (file.label_mapping) {
    payload["label_mapping"] = {{"negative", file.label_mapping->negative},
                                {"positive", file.label_mapping->positive}};
  }
  if (file.normalization) {
    payload["normalization"] = {{"min", encode_vector(file.normalization->min)},
                                {"max", encode_vector(file.normalization->max)}};
  }
  if (file.target_scaling) {
    payload["target_scaling"] = {{"offset", hexfloat(file.target_scaling->offset)},
                                 {"scale", hexfloat(file.target_scaling->scale)}};
  }
  payload["feature_names"] = file.feature_names;

  const std::string body = payload.dump();
  std::string out = std::string(kMagic) + " " + std::to_string(ModelFile::kFormatVersion) + "\n";
  out += body;
  out += "\nfnv1a64 " + checksum_hex(body) + "\n";
  return out;
}

ModelFile deserialize_model(const std::string& bytes) {
  const auto first_nl = bytes.find('\n');
  const std::string header = bytes.substr(0, first_nl);
  const std::string magic = std::string(kMagic) + " ";
  if (header.rfind(magic, 0) != 0) throw CorruptModel("missing model file header");
  int version = 0;
  const auto version_text = header.substr(magic.size());
  const auto [ptr, ec] = std::from_chars(version_text.data(), version_text.data() + version_text.size(), version);
  if (ec != std::errc() || ptr != version_text.data() + version_text.size()) {
    throw CorruptModel("unreadable model format version '" + version_text + "'");
  }
  if (version != ModelFile::kFormatVersion) {
    throw VersionMismatch("model format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(ModelFile::kFormatVersion) + ")");
  }
  if (first_nl == std::string::npos) throw CorruptModel("model file is truncated");

  const auto second_nl = bytes.find('\n', first_nl + 1);
  if (second_nl == std::string::npos) throw CorruptModel("model file is truncated");
  const std::string body = bytes.substr(first_nl + 1, second_nl - first_nl - 1);
  const auto third_nl = bytes.find('\n', second_nl + 1);
  if (third_nl == std::string::npos) throw CorruptModel("model file is truncated (no checksum)");
  const std::string trailer = bytes.substr(second_nl + 1, third_nl - second_nl - 1);
  if (trailer != "fnv1a64 " + checksum_hex(body)) throw CorruptModel("model checksum mismatch");

  try {
    const json payload = json::parse(body);
    ModelFile file{decode_model(payload), std::nullopt, std::nullopt, std::nullopt, {}};
    if (payload.contains("label_mapping")) {
      const auto& lm = payload.at("label_mapping");
      file.label_mapping = LabelMapping{lm.at("negative").get<std::string>(), lm.at("positive").get<std::string>()};
    }
    if (payload.contains("normalization")) {
      const auto& nm = payload.at("normalization");
      file.normalization = MinMaxRecord{decode_vector(nm.at("min")), decode_vector(nm.at("max"))};
    }
    if (payload.contains("target_scaling")) {
      const auto& ts = payload.at("target_scaling");
      file.target_scaling = TargetScaling{parse_hexfloat(ts.at("offset").get<std::string>()),
                                          parse_hexfloat(ts.at("scale").get<std::string>())};
    }
    file.feature_names = payload.at("feature_names").get<std::vector<std::string>>();
    return file;
  } catch (const json::exception& e) {
    throw CorruptModel(std::string("malformed model payload: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out.flush()) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

void save_model(const ModelFile& file, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(file));
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace trkm
