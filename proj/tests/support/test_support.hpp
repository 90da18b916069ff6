#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "fqc/corpus.hpp"
#include "fqc/evaluation.hpp"
#include "fqc/llm_gateway.hpp"

namespace fqc::test {

/// Self-deleting scratch directory under the system temp root.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Balanced synthetic dataset: ids v0000..., labels alternating 0/1, no
/// frame refs. Baseline scores, when requested, separate the classes.
Dataset make_dataset(std::size_t n, bool with_baseline = false, std::uint64_t seed = 17);

/// Answers from a per-tag script (each entry consumed once, front first),
/// falling back to the default response. The two kThrow markers raise the
/// matching gateway error instead of answering.
class ScriptedProvider : public ChatProvider {
 public:
  static constexpr const char* kThrowTransport = "\x01transport";
  static constexpr const char* kThrowRequest = "\x01request";

  explicit ScriptedProvider(std::string default_response);

  void script(const std::string& tag, std::vector<std::string> responses);
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "mock:scripted"; }

  int calls() const;
  std::vector<ChatRequest> requests() const;  // every request seen, in order

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<std::string>> scripts_;
  std::string default_response_;
  std::vector<ChatRequest> seen_;
};

/// Decorates another provider with a call counter and a concurrency
/// high-water mark; hold_ms keeps each call open long enough for overlap
/// to be observable.
class CountingProvider : public ChatProvider {
 public:
  explicit CountingProvider(std::shared_ptr<ChatProvider> inner, int hold_ms = 0);

  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override;

  int calls() const;
  int high_water() const;

 private:
  std::shared_ptr<ChatProvider> inner_;
  int hold_ms_;
  mutable std::mutex mu_;
  int calls_ = 0;
  int in_flight_ = 0;
  int high_water_ = 0;
};

/// Brute-force PR-AUC over an even threshold grid spanning [min, max] score.
/// Independent of pr_curve: recomputes the confusion per threshold.
double auc_fine_grid(const std::vector<ScoredItem>& scored, int grid_points = 1001);

/// Plain-gradient-descent least squares with intercept, an independent
/// check on the normal-equation solver. Returns {weights, intercept}.
std::pair<std::vector<double>, double> ols_gradient_descent(
    const std::vector<std::vector<double>>& features, const std::vector<double>& targets,
    int iters = 20000, double learning_rate = 0.3);

/// Minimal well-formedness check for the SVG emitters: balanced tags,
/// quoted attributes, no stray '<' or unescaped '&'.
bool xml_well_formed(const std::string& text, std::string* error = nullptr);

}  // namespace fqc::test
