#include "fqc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

namespace fqc {

using nlohmann::ordered_json;

namespace {

std::string fmt(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

// Shortest round-trip-ish representation for CSV output.
std::string fmt_g(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

}  // namespace

PRCurve pr_curve(const std::vector<ScoredItem>& scored) {
  if (scored.empty()) throw EvaluationError("empty input");
  long total_pos = 0;
  long total_neg = 0;
  for (const ScoredItem& item : scored) (item.label == 1 ? total_pos : total_neg)++;
  if (total_pos == 0 || total_neg == 0) throw EvaluationError("single-class input");

  std::vector<std::pair<double, int>> by_score;  // (score, label), descending
  by_score.reserve(scored.size());
  for (const ScoredItem& item : scored) by_score.emplace_back(item.score, item.label);
  std::sort(by_score.begin(), by_score.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  PRCurve curve;
  // Display sentinel above the top score: zero predictions, precision := 1.
  curve.points.push_back({by_score.front().first + 1.0, 1.0, 0.0});

  long tp = 0;
  long fp = 0;
  std::size_t idx = 0;
  while (idx < by_score.size()) {
    const double t = by_score[idx].first;
    while (idx < by_score.size() && by_score[idx].first >= t) {
      (by_score[idx].second == 1 ? tp : fp)++;
      ++idx;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    curve.points.push_back({t, precision, recall});
  }

  // Trapezoids over attained recalls, anchored by a flat extension from
  // recall 0 at the first attained point's precision. Recall-0 points never
  // enter the integral.
  double auc = 0.0;
  const PRPoint* prev = nullptr;
  for (const PRPoint& p : curve.points) {
    if (p.recall <= 0.0) continue;
    if (prev == nullptr) {
      auc += p.recall * p.precision;
    } else {
      auc += (p.recall - prev->recall) * (p.precision + prev->precision) / 2.0;
    }
    prev = &p;
  }
  curve.auc = auc;
  return curve;
}

ConfusionPortions confusion_at(const std::vector<ScoredItem>& scored, double threshold) {
  if (scored.empty()) throw EvaluationError("empty input");
  long fp = 0;
  long fn = 0;
  for (const ScoredItem& item : scored) {
    const bool predicted = item.score >= threshold;
    if (predicted && item.label == 0) ++fp;
    if (!predicted && item.label == 1) ++fn;
  }
  const double n = static_cast<double>(scored.size());
  ConfusionPortions portions;
  portions.threshold = threshold;
  portions.fp_portion = fp / n;
  portions.fn_portion = fn / n;
  portions.correct_portion = (scored.size() - fp - fn) / n;
  return portions;
}

ScoreHistogram histogram(const std::vector<ScoredItem>& scored, int bins, double threshold) {
  if (bins < 2) throw EvaluationError("histogram needs at least 2 bins");
  if (scored.empty()) throw EvaluationError("empty input");

  double lo = scored.front().score;
  double hi = lo;
  for (const ScoredItem& item : scored) {
    lo = std::min(lo, item.score);
    hi = std::max(hi, item.score);
  }
  // Verdict-scale scores normalize by /100 so bins are comparable across
  // runs; anything outside that range (linear fusions) is min-max scaled.
  const bool verdict_scale = lo >= 0.0 && hi <= 100.0;
  const double span = hi - lo;
  auto normalize = [&](double s) {
    if (verdict_scale) return s / 100.0;
    if (span <= 0.0) return 0.5;
    return (s - lo) / span;
  };

  ScoreHistogram hist;
  hist.bin_edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) hist.bin_edges[i] = static_cast<double>(i) / bins;
  hist.pos_counts.assign(bins, 0.0);
  hist.neg_counts.assign(bins, 0.0);
  hist.threshold_marker = std::clamp(normalize(threshold), 0.0, 1.0);

  long n_pos = 0;
  long n_neg = 0;
  for (const ScoredItem& item : scored) {
    const double x = std::clamp(normalize(item.score), 0.0, 1.0);
    const int bin = std::min(bins - 1, static_cast<int>(x * bins));
    if (item.label == 1) {
      hist.pos_counts[bin] += 1.0;
      ++n_pos;
    } else {
      hist.neg_counts[bin] += 1.0;
      ++n_neg;
    }
  }
  // Per-class normalization; an empty class simply stays at zero.
  for (int i = 0; i < bins; ++i) {
    if (n_pos > 0) hist.pos_counts[i] /= n_pos;
    if (n_neg > 0) hist.neg_counts[i] /= n_neg;
  }
  return hist;
}

ComparisonReport compare_runs(const std::vector<RunScores>& runs, double threshold) {
  if (runs.empty()) throw EvaluationError("no runs to compare");

  std::map<std::string, int> reference;  // id -> label of the first run
  for (const ScoredItem& item : runs.front().scored) {
    if (!reference.emplace(item.item_id, item.label).second) {
      throw EvaluationError("duplicate item in run " + runs.front().name + ": " + item.item_id);
    }
  }

  auto list_ids = [](const std::set<std::string>& ids) {
    std::string out;
    std::size_t shown = 0;
    for (const std::string& id : ids) {
      if (shown++ == 8) {
        out += ", ...";
        break;
      }
      if (!out.empty()) out += ", ";
      out += id;
    }
    return out;
  };

  for (std::size_t i = 1; i < runs.size(); ++i) {
    std::set<std::string> seen;
    std::set<std::string> extra;
    std::set<std::string> label_diff;
    for (const ScoredItem& item : runs[i].scored) {
      if (!seen.insert(item.item_id).second) {
        throw EvaluationError("duplicate item in run " + runs[i].name + ": " + item.item_id);
      }
      const auto it = reference.find(item.item_id);
      if (it == reference.end()) {
        extra.insert(item.item_id);
      } else if (it->second != item.label) {
        label_diff.insert(item.item_id);
      }
    }
    std::set<std::string> missing;
    for (const auto& [id, label] : reference) {
      if (!seen.count(id)) missing.insert(id);
    }
    if (!missing.empty() || !extra.empty() || !label_diff.empty()) {
      std::string msg = "runs " + runs.front().name + " and " + runs[i].name +
                        " cover different items:";
      if (!missing.empty()) msg += " missing [" + list_ids(missing) + "]";
      if (!extra.empty()) msg += " extra [" + list_ids(extra) + "]";
      if (!label_diff.empty()) msg += " label mismatch [" + list_ids(label_diff) + "]";
      throw EvaluationError(msg);
    }
  }

  ComparisonReport report;
  report.threshold = threshold;
  for (const RunScores& run : runs) {
    RunMetrics m;
    m.name = run.name;
    m.n = run.scored.size();
    m.curve = pr_curve(run.scored);
    m.confusion = confusion_at(run.scored, threshold);
    report.runs.push_back(std::move(m));
  }
  const RunMetrics& ref = report.runs.front();
  for (std::size_t i = 1; i < report.runs.size(); ++i) {
    const RunMetrics& m = report.runs[i];
    report.deltas.push_back({m.name, m.curve.auc - ref.curve.auc,
                             m.confusion.fp_portion - ref.confusion.fp_portion,
                             m.confusion.fn_portion - ref.confusion.fn_portion});
  }
  return report;
}

namespace {

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string opt_fmt(const std::optional<double>& v, int decimals) {
  return v ? fmt(*v, decimals) : std::string("-");
}

}  // namespace

std::string render_metrics_table(const std::vector<MetricsRow>& rows) {
  const std::vector<std::string> headers = {"category", "n",       "auc",     "fp",
                                            "fn",       "base_auc", "base_fp", "base_fn"};
  std::vector<std::vector<std::string>> cells;
  for (const MetricsRow& row : rows) {
    cells.push_back({row.category, std::to_string(row.n), opt_fmt(row.auc, 2),
                     opt_fmt(row.fp, 2), opt_fmt(row.fn, 2), opt_fmt(row.base_auc, 2),
                     opt_fmt(row.base_fp, 2), opt_fmt(row.base_fn, 2)});
  }
  std::vector<std::size_t> widths;
  for (std::size_t c = 0; c < headers.size(); ++c) {
    std::size_t w = headers[c].size();
    for (const auto& row : cells) w = std::max(w, row[c].size());
    widths.push_back(w);
  }
  std::string out;
  auto emit_row = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += "  ";
      // Category stays left-aligned; numbers line up on the right.
      out += c == 0 ? pad_right(row[c], widths[c]) : pad_left(row[c], widths[c]);
    }
    out += "\n";
  };
  emit_row(headers);
  for (const auto& row : cells) emit_row(row);
  return out;
}

std::string render_comparison(const ComparisonReport& report) {
  std::string out = "threshold: " + fmt_g(report.threshold) + "\n";

  std::size_t name_w = 3;  // "run"
  for (const RunMetrics& m : report.runs) name_w = std::max(name_w, m.name.size());
  out += pad_right("run", name_w) + "  " + pad_left("n", 6) + "  " + pad_left("auc", 8) + "  " +
         pad_left("fp", 8) + "  " + pad_left("fn", 8) + "\n";
  for (const RunMetrics& m : report.runs) {
    out += pad_right(m.name, name_w) + "  " + pad_left(std::to_string(m.n), 6) + "  " +
           pad_left(fmt(m.curve.auc, 4), 8) + "  " + pad_left(fmt(m.confusion.fp_portion, 4), 8) +
           "  " + pad_left(fmt(m.confusion.fn_portion, 4), 8) + "\n";
  }
  if (!report.deltas.empty()) {
    out += "deltas vs " + report.runs.front().name + ":\n";
    out += pad_right("run", name_w) + "  " + pad_left("d_auc", 8) + "  " +
           pad_left("d_fp", 8) + "  " + pad_left("d_fn", 8) + "\n";
    auto signed_fmt = [](double v) {
      std::string s = fmt(std::abs(v), 4);
      return (v < 0 ? "-" : "+") + s;
    };
    for (const MetricsDelta& d : report.deltas) {
      out += pad_right(d.name, name_w) + "  " + pad_left(signed_fmt(d.auc_delta), 8) + "  " +
             pad_left(signed_fmt(d.fp_delta), 8) + "  " + pad_left(signed_fmt(d.fn_delta), 8) +
             "\n";
    }
  }
  return out;
}

std::string pr_curve_csv(const PRCurve& curve) {
  std::string out = "threshold,precision,recall\n";
  for (const PRPoint& p : curve.points) {
    out += fmt_g(p.threshold) + "," + fmt_g(p.precision) + "," + fmt_g(p.recall) + "\n";
  }
  return out;
}

std::string histogram_csv(const ScoreHistogram& hist) {
  std::string out = "bin_start,bin_end,pos_freq,neg_freq\n";
  for (std::size_t i = 0; i + 1 < hist.bin_edges.size(); ++i) {
    out += fmt_g(hist.bin_edges[i]) + "," + fmt_g(hist.bin_edges[i + 1]) + "," +
           fmt_g(hist.pos_counts[i]) + "," + fmt_g(hist.neg_counts[i]) + "\n";
  }
  return out;
}

ordered_json comparison_to_json(const ComparisonReport& report) {
  ordered_json j;
  j["threshold"] = report.threshold;
  j["runs"] = ordered_json::array();
  for (const RunMetrics& m : report.runs) {
    j["runs"].push_back({{"name", m.name},
                         {"n", m.n},
                         {"auc", m.curve.auc},
                         {"fp_portion", m.confusion.fp_portion},
                         {"fn_portion", m.confusion.fn_portion},
                         {"correct_portion", m.confusion.correct_portion}});
  }
  j["deltas"] = ordered_json::array();
  for (const MetricsDelta& d : report.deltas) {
    j["deltas"].push_back({{"name", d.name},
                           {"auc_delta", d.auc_delta},
                           {"fp_delta", d.fp_delta},
                           {"fn_delta", d.fn_delta}});
  }
  return j;
}

namespace {

// Plot geometry shared by both SVG emitters.
constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 616.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 424.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string esc_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double x_px(double unit) { return kLeft + unit * (kRight - kLeft); }
double y_px(double unit) { return kBottom - unit * (kBottom - kTop); }

std::string svg_open(const std::string& title) {
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_g(kWidth) + "\" height=\"" +
         fmt_g(kHeight) + "\" viewBox=\"0 0 " + fmt_g(kWidth) + " " + fmt_g(kHeight) + "\">\n";
  out += "<rect width=\"" + fmt_g(kWidth) + "\" height=\"" + fmt_g(kHeight) +
         "\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt_g(kWidth / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
         esc_xml(title) + "</text>\n";
  return out;
}

std::string svg_frame() {
  std::string out;
  out += "<rect x=\"" + fmt_g(kLeft) + "\" y=\"" + fmt_g(kTop) + "\" width=\"" +
         fmt_g(kRight - kLeft) + "\" height=\"" + fmt_g(kBottom - kTop) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  return out;
}

std::string svg_text(double x, double y, const std::string& anchor, const std::string& text,
                     int size = 12) {
  return "<text x=\"" + fmt_g(x) + "\" y=\"" + fmt_g(y) + "\" text-anchor=\"" + anchor +
         "\" font-family=\"sans-serif\" font-size=\"" + std::to_string(size) + "\">" +
         esc_xml(text) + "</text>\n";
}

}  // namespace

std::string svg_pr_curves(const std::vector<std::pair<std::string, PRCurve>>& curves,
                          const std::string& title) {
  std::string out = svg_open(title);

  // Unit gridlines and tick labels every 0.2 on both axes.
  for (int i = 0; i <= 5; ++i) {
    const double u = i / 5.0;
    out += "<line x1=\"" + fmt_g(x_px(u)) + "\" y1=\"" + fmt_g(kTop) + "\" x2=\"" +
           fmt_g(x_px(u)) + "\" y2=\"" + fmt_g(kBottom) + "\" stroke=\"#dddddd\"/>\n";
    out += "<line x1=\"" + fmt_g(kLeft) + "\" y1=\"" + fmt_g(y_px(u)) + "\" x2=\"" +
           fmt_g(kRight) + "\" y2=\"" + fmt_g(y_px(u)) + "\" stroke=\"#dddddd\"/>\n";
    out += svg_text(x_px(u), kBottom + 18, "middle", fmt(u, 1));
    out += svg_text(kLeft - 8, y_px(u) + 4, "end", fmt(u, 1));
  }
  out += svg_frame();
  out += svg_text((kLeft + kRight) / 2, kHeight - 12, "middle", "recall");
  out += "<text x=\"18\" y=\"" + fmt_g((kTop + kBottom) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 18 " +
         fmt_g((kTop + kBottom) / 2) + ")\">precision</text>\n";

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kPalette[c % kPaletteSize];
    // Draw recall-ascending; the sentinel anchors the curve at (0, 1).
    std::string points;
    for (const PRPoint& p : curves[c].second.points) {
      if (!points.empty()) points += " ";
      points += fmt_g(x_px(p.recall)) + "," + fmt_g(y_px(p.precision));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
    const double ly = kBottom - 16.0 - 18.0 * static_cast<double>(curves.size() - 1 - c);
    out += "<line x1=\"" + fmt_g(kLeft + 10) + "\" y1=\"" + fmt_g(ly - 4) + "\" x2=\"" +
           fmt_g(kLeft + 34) + "\" y2=\"" + fmt_g(ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    out += svg_text(kLeft + 40, ly, "start",
                    curves[c].first + " (AUC " + fmt(curves[c].second.auc, 4) + ")");
  }
  out += "</svg>\n";
  return out;
}

std::string svg_histogram(const ScoreHistogram& hist, const std::string& title) {
  // Log-y frequencies floored at 1e-4 per decade tick.
  constexpr double kFloorExp = -4.0;
  auto y_freq = [&](double f) {
    const double e = std::clamp(std::log10(std::max(f, 1e-300)), kFloorExp, 0.0);
    return y_px((e - kFloorExp) / -kFloorExp);
  };

  std::string out = svg_open(title);
  for (int e = 0; e >= static_cast<int>(kFloorExp); --e) {
    const double y = y_freq(std::pow(10.0, e));
    out += "<line x1=\"" + fmt_g(kLeft) + "\" y1=\"" + fmt_g(y) + "\" x2=\"" + fmt_g(kRight) +
           "\" y2=\"" + fmt_g(y) + "\" stroke=\"#dddddd\"/>\n";
    char label[16];
    std::snprintf(label, sizeof(label), "1e%d", e);
    out += svg_text(kLeft - 8, y + 4, "end", label);
  }
  for (int i = 0; i <= 5; ++i) {
    const double u = i / 5.0;
    out += svg_text(x_px(u), kBottom + 18, "middle", fmt(u, 1));
  }

  const std::size_t bins = hist.pos_counts.size();
  for (std::size_t i = 0; i < bins; ++i) {
    const double x0 = x_px(hist.bin_edges[i]);
    const double x1 = x_px(hist.bin_edges[i + 1]);
    const double half = (x1 - x0) / 2.0;
    if (hist.pos_counts[i] > 0.0) {
      const double y = y_freq(hist.pos_counts[i]);
      out += "<rect x=\"" + fmt_g(x0 + 1) + "\" y=\"" + fmt_g(y) + "\" width=\"" +
             fmt_g(std::max(half - 1, 1.0)) + "\" height=\"" + fmt_g(kBottom - y) +
             "\" fill=\"" + kPalette[1] + "\" fill-opacity=\"0.8\"/>\n";
    }
    if (hist.neg_counts[i] > 0.0) {
      const double y = y_freq(hist.neg_counts[i]);
      out += "<rect x=\"" + fmt_g(x0 + half) + "\" y=\"" + fmt_g(y) + "\" width=\"" +
             fmt_g(std::max(half - 1, 1.0)) + "\" height=\"" + fmt_g(kBottom - y) +
             "\" fill=\"" + kPalette[0] + "\" fill-opacity=\"0.8\"/>\n";
    }
  }

  const double tx = x_px(hist.threshold_marker);
  out += "<line x1=\"" + fmt_g(tx) + "\" y1=\"" + fmt_g(kTop) + "\" x2=\"" + fmt_g(tx) +
         "\" y2=\"" + fmt_g(kBottom) + "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
  out += svg_frame();
  out += svg_text((kLeft + kRight) / 2, kHeight - 12, "middle", "normalized score");
  out += "<text x=\"18\" y=\"" + fmt_g((kTop + kBottom) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 18 " +
         fmt_g((kTop + kBottom) / 2) + ")\">frequency</text>\n";
  out += "<rect x=\"" + fmt_g(kRight - 150) + "\" y=\"" + fmt_g(kTop + 10) +
         "\" width=\"12\" height=\"12\" fill=\"" + kPalette[1] + "\" fill-opacity=\"0.8\"/>\n";
  out += svg_text(kRight - 132, kTop + 20, "start", "positive");
  out += "<rect x=\"" + fmt_g(kRight - 150) + "\" y=\"" + fmt_g(kTop + 28) +
         "\" width=\"12\" height=\"12\" fill=\"" + kPalette[0] + "\" fill-opacity=\"0.8\"/>\n";
  out += svg_text(kRight - 132, kTop + 38, "start", "negative");
  out += "</svg>\n";
  return out;
}

}  // namespace fqc
