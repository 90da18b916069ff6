#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fqc/corpus.hpp"
#include "fqc/frame_sampler.hpp"
#include "fqc/llm_gateway.hpp"
#include "fqc/prompt_engine.hpp"

namespace fqc {

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-item outcome. Either scores/reasonings are populated (one entry in
/// single mode, one per subcategory in decomposed mode) or failure is set
/// and both lists are empty — never both.
struct ClassificationRecord {
  std::string item_id;
  std::string mode;  // "single" | "decomposed"
  std::vector<int> scores;
  std::vector<std::string> reasonings;
  std::optional<FailureRecord> failure;
  std::string policy_variant;
  int label = 0;

  bool excluded() const { return failure.has_value(); }
};

struct RunHeader {
  std::string run_id;
  std::string category_name;
  std::string policy_variant;
  std::string mode;
  std::vector<std::string> subcategory_order;  // empty in single mode
  DecodingParams params;
  SamplingPolicy sampling;
  std::uint64_t seed = 0;
  std::string provider;
  std::string dataset_path;
  std::size_t dataset_size = 0;
  std::string started_at;   // ISO 8601 UTC
  std::string finished_at;  // empty while the run is in progress
};

struct RunLedger {
  RunHeader header;
  std::vector<ClassificationRecord> records;     // successes, sorted by item_id
  std::vector<ClassificationRecord> exclusions;  // failures, sorted by item_id

  std::size_t excluded_count() const { return exclusions.size(); }
};

struct RunOptions {
  DecodingParams params;
  SamplingPolicy sampling;
  std::uint64_t seed = 0;
  std::filesystem::path out_path;    // ledger file
  std::filesystem::path frames_dir;  // root for frame_refs; unused when refs empty
  std::string dataset_path;          // recorded in the header for resume
};

/// Deterministic: category slug + variant + mode + seed.
std::string make_run_id(const CategoryPolicy& policy, const std::string& mode,
                        std::uint64_t seed);

nlohmann::ordered_json header_to_json(const RunHeader& header);
RunHeader header_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json record_to_json(const ClassificationRecord& record);
ClassificationRecord record_from_json(const nlohmann::ordered_json& j);

/// Canonical on-disk form: header line, then one line per item (successes
/// and exclusions interleaved) sorted by item_id.
void save_ledger(const RunLedger& ledger, const std::filesystem::path& path);

/// allow_partial tolerates a torn final line (interrupted append); any other
/// malformed content is an error.
RunLedger load_ledger(const std::filesystem::path& path, bool allow_partial = false);

/// One request per item with the full category policy.
RunLedger run_single(const Dataset& ds, const CategoryPolicy& policy,
                     const PromptTemplates& templates, LlmGateway& gateway,
                     const RunOptions& opts);

/// One independent request per subcategory per item; scores stored in
/// registry order. Any sub-request failure excludes the whole item.
RunLedger run_decomposed(const Dataset& ds, const CategoryPolicy& policy,
                         const PromptTemplates& templates, LlmGateway& gateway,
                         const RunOptions& opts);

/// Continues an interrupted run: items already recorded (success or
/// exclusion) are skipped. The on-disk header must match the supplied
/// policy/params/seed, else PipelineError.
RunLedger resume(const std::filesystem::path& ledger_path, const Dataset& ds,
                 const CategoryPolicy& policy, const PromptTemplates& templates,
                 LlmGateway& gateway, const RunOptions& opts);

}  // namespace fqc
