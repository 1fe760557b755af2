// Copyright 2026 The exmos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "exmos/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "exmos/error.hpp"
#include "exmos/random.hpp"
#include "exmos/stats.hpp"
#include "json.hpp"

namespace exmos {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kNumeric: return "numeric";
    case FeatureKind::kBinaryCategorical: return "binary-categorical";
  }
  return "numeric";
}

FeatureKind feature_kind_from_string(std::string_view s) {
  if (s == "numeric") return FeatureKind::kNumeric;
  if (s == "binary-categorical" || s == "binary") return FeatureKind::kBinaryCategorical;
  throw Error(ErrorCode::kInvalidMeta, "unknown feature kind", std::string(s));
}

// ---------------------------------------------------------------------------
// DataTable

DataTable::DataTable(Schema schema, Eigen::MatrixXd cells, std::vector<RowId> row_ids)
    : schema_(std::move(schema)), cells_(std::move(cells)), row_ids_(std::move(row_ids)) {
  if (schema_.empty()) throw Error(ErrorCode::kInvalidMeta, "schema is empty");
  if (cells_.cols() != static_cast<Eigen::Index>(schema_.size())) {
    throw Error(ErrorCode::kSchemaMismatch, "cell columns do not match schema");
  }
  if (cells_.rows() == 0) throw Error(ErrorCode::kEmptyTable, "table has no rows");
  if (static_cast<Eigen::Index>(row_ids_.size()) != cells_.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "row id count does not match rows");
  }
  std::set<std::string_view> names;
  std::optional<std::size_t> target;
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (!names.insert(schema_[i].name).second) {
      throw Error(ErrorCode::kInvalidMeta, "duplicate feature name", schema_[i].name);
    }
    if (schema_[i].target) {
      if (target) throw Error(ErrorCode::kInvalidMeta, "more than one target column");
      target = i;
    }
  }
  if (!target) throw Error(ErrorCode::kInvalidMeta, "schema has no target column");
  target_ = *target;
  if (schema_[target_].kind != FeatureKind::kBinaryCategorical) {
    throw Error(ErrorCode::kInvalidMeta, "target must be binary-categorical",
                schema_[target_].name);
  }
  std::unordered_set<RowId> ids(row_ids_.begin(), row_ids_.end());
  if (ids.size() != row_ids_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "row ids are not unique");
  }
  if (!cells_.allFinite()) throw Error(ErrorCode::kNonNumericCell, "non-finite cell");
  const auto target_col = cells_.col(static_cast<Eigen::Index>(target_));
  std::set<double> labels(target_col.begin(), target_col.end());
  if (labels.size() > 2) {
    throw Error(ErrorCode::kInvalidArgument, "target has more than two labels",
                schema_[target_].name);
  }
}

std::optional<std::size_t> DataTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (schema_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t DataTable::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(ErrorCode::kUnknownFeature, "unknown feature", std::string(name));
}

std::vector<std::size_t> DataTable::predictor_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (i != target_) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> DataTable::numeric_predictor_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i : predictor_indices()) {
    if (schema_[i].kind == FeatureKind::kNumeric) out.push_back(i);
  }
  return out;
}

std::vector<std::string> DataTable::predictor_names() const {
  std::vector<std::string> out;
  for (std::size_t i : predictor_indices()) out.push_back(schema_[i].name);
  return out;
}

DataTable DataTable::select_rows(std::span<const Eigen::Index> positions) const {
  Eigen::MatrixXd cells(static_cast<Eigen::Index>(positions.size()), cols());
  std::vector<RowId> ids;
  ids.reserve(positions.size());
  for (std::size_t r = 0; r < positions.size(); ++r) {
    cells.row(static_cast<Eigen::Index>(r)) = cells_.row(positions[r]);
    ids.push_back(row_ids_[static_cast<std::size_t>(positions[r])]);
  }
  return DataTable(schema_, std::move(cells), std::move(ids));
}

DataTable DataTable::select_columns(std::span<const std::size_t> indices) const {
  Schema schema;
  Eigen::MatrixXd cells(rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    schema.push_back(schema_.at(indices[c]));
    cells.col(static_cast<Eigen::Index>(c)) =
        cells_.col(static_cast<Eigen::Index>(indices[c]));
  }
  return DataTable(std::move(schema), std::move(cells), row_ids_);
}

DataTable DataTable::canonical() const {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return row_ids_[static_cast<std::size_t>(a)] < row_ids_[static_cast<std::size_t>(b)];
  });
  return select_rows(order);
}

DataTable DataTable::with_column(std::size_t index, const Eigen::VectorXd& values) const {
  Eigen::MatrixXd cells = cells_;
  cells.col(static_cast<Eigen::Index>(index)) = values;
  return DataTable(schema_, std::move(cells), row_ids_);
}

DataTable DataTable::append_rows(const Eigen::MatrixXd& extra,
                                 std::span<const RowId> extra_ids) const {
  Eigen::MatrixXd cells(rows() + extra.rows(), cols());
  cells << cells_, extra;
  std::vector<RowId> ids = row_ids_;
  ids.insert(ids.end(), extra_ids.begin(), extra_ids.end());
  return DataTable(schema_, std::move(cells), std::move(ids));
}

RowId DataTable::max_row_id() const {
  return *std::max_element(row_ids_.begin(), row_ids_.end());
}

bool DataTable::operator==(const DataTable& other) const {
  return schema_ == other.schema_ && row_ids_ == other.row_ids_ &&
         cells_.rows() == other.cells_.rows() && cells_.cols() == other.cells_.cols() &&
         cells_ == other.cells_;
}

// ---------------------------------------------------------------------------
// Class counts

Eigen::Index ClassCounts::minority() const {
  return counts.empty() ? 0 : *std::min_element(counts.begin(), counts.end());
}

Eigen::Index ClassCounts::majority() const {
  return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

double ClassCounts::minority_label() const {
  const auto it = std::min_element(counts.begin(), counts.end());
  return labels[static_cast<std::size_t>(it - counts.begin())];
}

ClassCounts class_counts(const DataTable& table) {
  std::vector<double> values(table.target().begin(), table.target().end());
  std::sort(values.begin(), values.end());
  ClassCounts out;
  for (double v : values) {
    if (out.labels.empty() || out.labels.back() != v) {
      out.labels.push_back(v);
      out.counts.push_back(0);
    }
    ++out.counts.back();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion

namespace {

Schema finish_schema(Schema schema) {
  if (schema.empty()) throw Error(ErrorCode::kInvalidMeta, "no features in sidecar");
  const bool any_target =
      std::any_of(schema.begin(), schema.end(), [](const auto& f) { return f.target; });
  if (!any_target) schema.back().target = true;
  for (auto& f : schema) {
    if (f.target) f.kind = FeatureKind::kBinaryCategorical;
  }
  return schema;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Schema parse_meta(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidMeta, "sidecar is not valid JSON", e.what());
  }
  const nlohmann::json& list = doc.is_object() ? doc.value("features", nlohmann::json()) : doc;
  if (!list.is_array()) throw Error(ErrorCode::kInvalidMeta, "sidecar lists no features");
  Schema schema;
  try {
    for (const auto& entry : list) {
      FeatureMeta f;
      f.name = entry.at("name").get<std::string>();
      f.kind = feature_kind_from_string(entry.value("kind", std::string("numeric")));
      f.unit = entry.value("unit", std::string());
      f.zero_invalid = entry.value("zero_invalid", false);
      f.actionable = entry.value("actionable", false);
      f.target = entry.value("target", false);
      schema.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidMeta, "malformed feature entry", e.what());
  }
  return finish_schema(std::move(schema));
}

Schema load_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open metadata file", path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_meta(buffer.str());
}

DataTable parse_csv(std::istream& in, const Schema& meta) {
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw Error(ErrorCode::kEmptyFile, "file is empty");

  const auto header = split_commas(trim(line));
  bool header_ok = header.size() == meta.size();
  for (std::size_t i = 0; header_ok && i < header.size(); ++i) {
    header_ok = header[i] == meta[i].name;
  }
  if (!header_ok) {
    std::string expected;
    for (const auto& f : meta) expected += (expected.empty() ? "" : ",") + f.name;
    throw Error(ErrorCode::kHeaderMismatch, "header does not match metadata",
                "expected " + expected + ", got " + std::string(trim(line)));
  }

  const auto ncols = static_cast<Eigen::Index>(meta.size());
  std::vector<double> values;
  Eigen::Index nrows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_commas(trim(line));
    for (Eigen::Index c = 0; c < ncols; ++c) {
      const auto cell = static_cast<std::size_t>(c) < fields.size()
                            ? fields[static_cast<std::size_t>(c)]
                            : std::string_view();
      double v = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
          !std::isfinite(v)) {
        throw Error(ErrorCode::kNonNumericCell, "cell is not a finite number",
                    "row " + std::to_string(nrows) + ", column " + std::to_string(c) +
                        " (" + meta[static_cast<std::size_t>(c)].name + "): '" +
                        std::string(cell) + "'");
      }
      values.push_back(v);
    }
    if (fields.size() > meta.size()) {
      throw Error(ErrorCode::kNonNumericCell, "row has extra cells",
                  "row " + std::to_string(nrows) + ", column " + std::to_string(ncols));
    }
    ++nrows;
  }
  if (nrows == 0) throw Error(ErrorCode::kEmptyFile, "file has a header but no rows");

  Eigen::MatrixXd cells =
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          values.data(), nrows, ncols);
  std::vector<RowId> ids(static_cast<std::size_t>(nrows));
  std::iota(ids.begin(), ids.end(), RowId{0});
  return DataTable(finish_schema(meta), std::move(cells), std::move(ids));
}

DataTable load_csv(const std::filesystem::path& path, const Schema& meta) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open data file", path.string());
  return parse_csv(in, meta);
}

// ---------------------------------------------------------------------------
// Splitting

Split split_train_test(const DataTable& table, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "test_fraction must lie in (0, 1)");
  }
  const DataTable canon = table.canonical();
  const ClassCounts classes = class_counts(canon);
  if (!classes.binary()) {
    throw Error(ErrorCode::kDegenerateClass, "split needs both classes present");
  }
  Rng rng(spec.seed);
  std::vector<Eigen::Index> train_pos;
  std::vector<Eigen::Index> test_pos;

  auto take = [&](std::vector<Eigen::Index> pool) {
    rng.shuffle(std::span(pool));
    const auto n = static_cast<double>(pool.size());
    const auto n_test = static_cast<std::size_t>(std::floor(n * spec.test_fraction + 0.5));
    test_pos.insert(test_pos.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_pos.insert(train_pos.end(), pool.begin() + static_cast<std::ptrdiff_t>(n_test), pool.end());
  };

  if (spec.stratified) {
    for (double label : classes.labels) {
      std::vector<Eigen::Index> pool;
      for (Eigen::Index r = 0; r < canon.rows(); ++r) {
        if (canon.target()(r) == label) pool.push_back(r);
      }
      take(std::move(pool));
    }
  } else {
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(canon.rows()));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    take(std::move(pool));
  }

  std::sort(train_pos.begin(), train_pos.end());
  std::sort(test_pos.begin(), test_pos.end());
  if (train_pos.empty() || test_pos.empty()) {
    throw Error(ErrorCode::kDegenerateClass, "split leaves one part empty");
  }
  Split out{canon.select_rows(train_pos), canon.select_rows(test_pos)};
  if (!class_counts(out.train).binary() || !class_counts(out.test).binary()) {
    throw Error(ErrorCode::kDegenerateClass, "a class would be absent from one part");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Description

ColumnStats column_stats(const DataTable& table, std::string_view feature) {
  const std::size_t idx = table.index_of(feature);
  if (table.schema()[idx].kind != FeatureKind::kNumeric) {
    throw Error(ErrorCode::kNotNumeric, "feature is not numeric", std::string(feature));
  }
  const auto col = table.cells().col(static_cast<Eigen::Index>(idx));
  const auto q = stats::quartiles(col);
  ColumnStats s;
  s.count = col.size();
  s.mean = col.mean();
  s.min = col.minCoeff();
  s.max = col.maxCoeff();
  s.q1 = q.q1;
  s.q2 = q.q2;
  s.q3 = q.q3;
  s.zero_fraction = static_cast<double>((col.array() == 0.0).count()) /
                    static_cast<double>(col.size());
  return s;
}

std::string table_digest(const DataTable& table) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                             &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  auto feed = [&](const void* data, std::size_t n) {
    EVP_DigestUpdate(ctx.get(), data, n);
  };
  for (const auto& f : table.schema()) {
    feed(f.name.data(), f.name.size());
    feed("\x1f", 1);
  }
  for (RowId id : table.row_ids()) feed(&id, sizeof id);
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      const double v = table.cells()(r, c);
      feed(&v, sizeof v);
    }
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

}  // namespace exmos
