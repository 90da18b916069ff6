#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "fqc/pipeline.hpp"

namespace fqc {

class AggregationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AggregationKind { mean, max, linear };

std::string to_string(AggregationKind kind);
AggregationKind aggregation_kind_from_string(const std::string& s);

/// Fusion rule over a subcategory score vector. mean and max need no state;
/// linear carries fitted weights plus the train-split bookkeeping needed to
/// keep evaluation on held-out items only.
struct AggregationModel {
  AggregationKind kind = AggregationKind::mean;
  std::vector<double> weights;  // linear only, one per subcategory
  double intercept = 0.0;       // linear only
  std::vector<std::string> subcategory_order;
  std::uint64_t train_split_seed = 0;
  std::vector<std::string> train_item_ids;  // linear only, sorted

  void validate() const;
};

/// mean -> arithmetic mean; max -> maximum; linear -> intercept + w.s,
/// deliberately unclamped so threshold sweeps see the raw fused value.
/// The score length is checked against the model whenever the model pins
/// one (weights or a nonempty subcategory_order).
double aggregate(const std::vector<int>& scores, const AggregationModel& model);

struct TrainingRow {
  std::string item_id;
  std::vector<int> scores;
  int label = 0;
};

/// Ordinary least squares of label on scores with intercept, fit on a seeded
/// stratified 50/50 split. Normal equations with ridge damping 1e-8 keep
/// rank-deficient designs (e.g. a constant column) solvable.
AggregationModel fit_linear(const std::vector<TrainingRow>& rows, std::uint64_t seed,
                            const std::vector<std::string>& subcategory_order);

struct FusedScore {
  std::string item_id;
  double score = 0.0;
  int label = 0;
};

/// Fuses every successful record of a decomposed ledger. Exclusions are
/// skipped; for linear models the training items are withheld so downstream
/// metrics see held-out data only.
std::vector<FusedScore> apply_to_ledger(const RunLedger& ledger, const AggregationModel& model);

void save_model(const AggregationModel& model, const std::filesystem::path& path);
AggregationModel load_model(const std::filesystem::path& path);

}  // namespace fqc
