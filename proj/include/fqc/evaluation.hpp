#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace fqc {

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScoredItem {
  std::string item_id;
  double score = 0.0;  // 0-100 for raw verdicts; any real for linear fusions
  int label = 0;

  bool operator==(const ScoredItem&) const = default;
};

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Points in sweep order (threshold descending, recall non-decreasing). The
/// first point is a display sentinel above the top score with precision
/// pinned to 1 at recall 0; it and any other recall-0 points are excluded
/// from the integral.
struct PRCurve {
  std::vector<PRPoint> points;
  double auc = 0.0;
};

/// Threshold sweep over all distinct scores, predicting positive at
/// score >= t. AUC is the trapezoidal integral of precision over recall
/// plus the flat extension from recall 0 to the first attained recall.
PRCurve pr_curve(const std::vector<ScoredItem>& scored);

/// Portions of the whole dataset (Table-1 convention), not per-class rates.
struct ConfusionPortions {
  double threshold = 0.0;
  double fp_portion = 0.0;
  double fn_portion = 0.0;
  double correct_portion = 0.0;
};

ConfusionPortions confusion_at(const std::vector<ScoredItem>& scored, double threshold);

struct ScoreHistogram {
  std::vector<double> bin_edges;   // bins + 1 edges spanning [0,1]
  std::vector<double> pos_counts;  // per-class normalized frequencies
  std::vector<double> neg_counts;
  double threshold_marker = 0.5;   // on the same normalized axis
};

/// Equal-width bins over scores normalized to [0,1]: divided by 100 when all
/// scores fit the verdict scale, min-max scaled otherwise (linear fusions).
ScoreHistogram histogram(const std::vector<ScoredItem>& scored, int bins, double threshold);

struct RunScores {
  std::string name;
  std::vector<ScoredItem> scored;
};

struct RunMetrics {
  std::string name;
  std::size_t n = 0;
  PRCurve curve;
  ConfusionPortions confusion;
};

/// Metric differences of one run against the reference (first) run.
struct MetricsDelta {
  std::string name;
  double auc_delta = 0.0;
  double fp_delta = 0.0;
  double fn_delta = 0.0;
};

struct ComparisonReport {
  double threshold = 0.0;
  std::vector<RunMetrics> runs;
  std::vector<MetricsDelta> deltas;  // one per non-reference run
};

/// All runs must cover the same item set with the same labels; mismatches
/// raise an error listing the differing ids.
ComparisonReport compare_runs(const std::vector<RunScores>& runs, double threshold);

/// One row of the category summary table; missing values render as "-".
struct MetricsRow {
  std::string category;
  long n = 0;
  std::optional<double> auc, fp, fn;
  std::optional<double> base_auc, base_fp, base_fn;
};

std::string render_metrics_table(const std::vector<MetricsRow>& rows);
std::string render_comparison(const ComparisonReport& report);

std::string pr_curve_csv(const PRCurve& curve);
std::string histogram_csv(const ScoreHistogram& hist);
nlohmann::ordered_json comparison_to_json(const ComparisonReport& report);

/// Self-contained SVG documents (no external resources).
std::string svg_pr_curves(const std::vector<std::pair<std::string, PRCurve>>& curves,
                          const std::string& title);
std::string svg_histogram(const ScoreHistogram& hist, const std::string& title);

}  // namespace fqc
