#include "fqc/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "json.hpp"

#include "fqc/util.hpp"

namespace fqc {

using nlohmann::ordered_json;

std::string to_string(AggregationKind kind) {
  switch (kind) {
    case AggregationKind::mean: return "mean";
    case AggregationKind::max: return "max";
    case AggregationKind::linear: return "linear";
  }
  return "unknown";
}

AggregationKind aggregation_kind_from_string(const std::string& s) {
  if (s == "mean") return AggregationKind::mean;
  if (s == "max") return AggregationKind::max;
  if (s == "linear") return AggregationKind::linear;
  throw AggregationError("unknown aggregation kind: " + s);
}

void AggregationModel::validate() const {
  const bool linear = kind == AggregationKind::linear;
  if (linear != !weights.empty()) {
    throw AggregationError("weights present iff kind is linear");
  }
  if (linear && !subcategory_order.empty() && weights.size() != subcategory_order.size()) {
    throw AggregationError("weights length does not match subcategory order");
  }
}

double aggregate(const std::vector<int>& scores, const AggregationModel& model) {
  model.validate();
  if (scores.empty()) throw AggregationError("empty score vector");
  std::size_t pinned = 0;
  if (model.kind == AggregationKind::linear) pinned = model.weights.size();
  else if (!model.subcategory_order.empty()) pinned = model.subcategory_order.size();
  if (pinned != 0 && scores.size() != pinned) {
    throw AggregationError("score vector length " + std::to_string(scores.size()) +
                           " does not match model arity " + std::to_string(pinned));
  }

  switch (model.kind) {
    case AggregationKind::mean:
      return std::accumulate(scores.begin(), scores.end(), 0.0) /
             static_cast<double>(scores.size());
    case AggregationKind::max:
      return static_cast<double>(*std::max_element(scores.begin(), scores.end()));
    case AggregationKind::linear: {
      double fused = model.intercept;
      for (std::size_t i = 0; i < scores.size(); ++i) fused += model.weights[i] * scores[i];
      return fused;  // unclamped by design
    }
  }
  throw AggregationError("unreachable aggregation kind");
}

namespace {

// Solves A x = b for symmetric positive-definite A via Cholesky (LL^T).
// Returns false when a pivot collapses, so the caller can add damping.
bool cholesky_solve(std::vector<std::vector<double>> a, std::vector<double> b,
                    std::vector<double>& x) {
  const std::size_t n = a.size();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    a[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
      a[i][j] = s / a[j][j];
    }
  }
  // Forward substitution L y = b, then back substitution L^T x = y.
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i][k] * b[k];
    b[i] = s / a[i][i];
  }
  x.assign(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= a[k][ii] * x[k];
    x[ii] = s / a[ii][ii];
  }
  return true;
}

}  // namespace

AggregationModel fit_linear(const std::vector<TrainingRow>& rows, std::uint64_t seed,
                            const std::vector<std::string>& subcategory_order) {
  if (rows.empty()) throw AggregationError("no rows to fit");
  const std::size_t k = rows[0].scores.size();
  if (k == 0) throw AggregationError("empty score vectors");
  if (!subcategory_order.empty() && subcategory_order.size() != k) {
    throw AggregationError("subcategory order does not match score arity");
  }
  for (const TrainingRow& row : rows) {
    if (row.scores.size() != k) {
      throw AggregationError("ragged score vectors: " + row.item_id);
    }
  }

  // Stratified 50/50: per class, ids in sorted order are shuffled with the
  // pinned RNG and the first half becomes the training split. Sorting first
  // makes the split a function of (seed, id set), not of row order.
  std::set<std::string> train_ids;
  for (int label : {0, 1}) {
    std::vector<std::string> ids;
    for (const TrainingRow& row : rows) {
      if (row.label == label) ids.push_back(row.item_id);
    }
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_seed(seed, "train_split." + std::to_string(label)));
    rng.shuffle(ids);
    for (std::size_t i = 0; i < ids.size() / 2; ++i) train_ids.insert(ids[i]);
  }

  std::vector<const TrainingRow*> train;
  bool has_pos = false;
  bool has_neg = false;
  for (const TrainingRow& row : rows) {
    if (!train_ids.count(row.item_id)) continue;
    train.push_back(&row);
    (row.label == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw AggregationError("degenerate training labels");

  // Normal equations for [intercept, w]: (X^T X + lambda I) beta = X^T y.
  const std::size_t dim = k + 1;
  std::vector<std::vector<double>> xtx(dim, std::vector<double>(dim, 0.0));
  std::vector<double> xty(dim, 0.0);
  for (const TrainingRow* row : train) {
    std::vector<double> x(dim, 1.0);
    for (std::size_t i = 0; i < k; ++i) x[i + 1] = row->scores[i];
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) xtx[i][j] += x[i] * x[j];
      xty[i] += x[i] * row->label;
    }
  }

  std::vector<double> beta;
  double lambda = 1e-8;
  for (int attempt = 0; attempt < 6; ++attempt, lambda *= 100.0) {
    auto damped = xtx;
    for (std::size_t i = 0; i < dim; ++i) damped[i][i] += lambda;
    if (cholesky_solve(std::move(damped), xty, beta)) break;
    beta.clear();
  }
  if (beta.empty()) throw AggregationError("normal equations are numerically singular");

  AggregationModel model;
  model.kind = AggregationKind::linear;
  model.intercept = beta[0];
  model.weights.assign(beta.begin() + 1, beta.end());
  model.subcategory_order = subcategory_order;
  model.train_split_seed = seed;
  model.train_item_ids.assign(train_ids.begin(), train_ids.end());
  return model;
}

std::vector<FusedScore> apply_to_ledger(const RunLedger& ledger, const AggregationModel& model) {
  if (ledger.header.mode != "decomposed") {
    throw AggregationError("mode mismatch: aggregation needs a decomposed ledger, got " +
                           ledger.header.mode);
  }
  model.validate();
  if (!model.subcategory_order.empty() && !ledger.header.subcategory_order.empty() &&
      model.subcategory_order != ledger.header.subcategory_order) {
    throw AggregationError("model subcategory order does not match the ledger");
  }
  const std::set<std::string> train(model.train_item_ids.begin(), model.train_item_ids.end());

  std::vector<FusedScore> out;
  out.reserve(ledger.records.size());
  for (const ClassificationRecord& rec : ledger.records) {
    if (model.kind == AggregationKind::linear && train.count(rec.item_id)) continue;
    out.push_back({rec.item_id, aggregate(rec.scores, model), rec.label});
  }
  return out;
}

void save_model(const AggregationModel& model, const std::filesystem::path& path) {
  model.validate();
  ordered_json j;
  j["kind"] = to_string(model.kind);
  j["weights"] = model.weights;
  j["intercept"] = model.intercept;
  j["subcategory_order"] = model.subcategory_order;
  j["train_split_seed"] = model.train_split_seed;
  j["train_item_ids"] = model.train_item_ids;
  write_file(path, j.dump(2) + "\n");
}

AggregationModel load_model(const std::filesystem::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(path));
  } catch (const ordered_json::exception& e) {
    throw AggregationError("bad model file " + path.string() + ": " + e.what());
  }
  AggregationModel model;
  try {
    model.kind = aggregation_kind_from_string(j.at("kind"));
    model.weights = j.at("weights").get<std::vector<double>>();
    model.intercept = j.at("intercept");
    model.subcategory_order = j.at("subcategory_order").get<std::vector<std::string>>();
    model.train_split_seed = j.at("train_split_seed");
    model.train_item_ids = j.at("train_item_ids").get<std::vector<std::string>>();
  } catch (const ordered_json::exception& e) {
    throw AggregationError("bad model file " + path.string() + ": " + e.what());
  }
  model.validate();
  return model;
}

}  // namespace fqc
