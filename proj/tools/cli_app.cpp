#include "cli_app.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "fqc/aggregation.hpp"
#include "fqc/corpus.hpp"
#include "fqc/evaluation.hpp"
#include "fqc/llm_gateway.hpp"
#include "fqc/pipeline.hpp"
#include "fqc/prompt_engine.hpp"
#include "fqc/util.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace fqc {
namespace {

// ---------------------------------------------------------------------------
// Shared option bundles

struct GatewayArgs {
  std::string provider;  // http | mock:planted | mock:uniform
  std::string endpoint;
  std::string api_key_env = "FQC_API_KEY";
  int max_in_flight = 4;
  double timeout_s = 120.0;
  int max_retries = 3;
  double backoff_s = 0.5;
  int parse_retries = 2;
  double flip_pos = 0.0;  // planted mock error rates
  double flip_neg = 0.0;
  int jitter = 0;
};

struct ClassifyArgs {
  std::string dataset;
  std::string policies_dir = "assets/policies";
  std::string templates_dir = "assets/templates";
  std::string category;
  std::string variant;
  std::string mode = "single";
  GatewayArgs gw;
  DecodingParams params;    // defaults follow the reference setup
  SamplingPolicy sampling;  // 0.5 fps, max 30, endpoints on
  std::uint64_t seed = 0;
  std::string out;
  std::string out_dir = ".";
  std::string frames_dir;
  long min_size = 500;
  std::string config_file;
};

struct EvaluateArgs {
  std::vector<std::string> ledgers;
  std::string agg;  // comma list: mean,max,linear[:model-path]
  bool fit_linear = false;
  double threshold = 50.0;
  int bins = 20;
  std::string out_dir = ".";
  std::string dataset;  // baseline source override
  bool no_baseline = false;
  bool write_deltas = false;
  std::string config_file;
};

struct ResumeArgs {
  std::string ledger;
  std::string policies_dir = "assets/policies";
  std::string templates_dir = "assets/templates";
  std::string dataset;  // override of the recorded path
  std::string frames_dir;
  GatewayArgs gw;
  std::string config_file;
};

struct PolicyArgs {
  std::string policies_dir = "assets/policies";
  std::string templates_dir = "assets/templates";
  std::string goldens_dir = "assets/goldens";
};

// ---------------------------------------------------------------------------
// Config file support: flags > config file > built-in defaults. The file is
// a flat JSON object; keys a command does not know are ignored so one file
// can serve classify, resume, and evaluate together.

ordered_json load_config_file(const std::string& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw std::invalid_argument("bad config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config file must hold a JSON object");
  return j;
}

// Applies j[key] unless the flag was given explicitly on the command line.
template <class T>
void overlay(const ordered_json& j, const CLI::App* cmd, const char* key, const char* flag,
             T& target) {
  if (!j.contains(key)) return;
  if (cmd->count(flag) > 0) return;
  try {
    target = j.at(key).get<T>();
  } catch (const ordered_json::exception&) {
    throw std::invalid_argument(std::string("config key '") + key + "' has the wrong type");
  }
}

void overlay_gateway(const ordered_json& j, const CLI::App* cmd, GatewayArgs& gw) {
  overlay(j, cmd, "provider", "--provider", gw.provider);
  overlay(j, cmd, "endpoint", "--endpoint", gw.endpoint);
  overlay(j, cmd, "api_key_env", "--api-key-env", gw.api_key_env);
  overlay(j, cmd, "max_in_flight", "--max-in-flight", gw.max_in_flight);
  overlay(j, cmd, "timeout_s", "--timeout", gw.timeout_s);
  overlay(j, cmd, "max_retries", "--retries", gw.max_retries);
  overlay(j, cmd, "backoff_s", "--backoff", gw.backoff_s);
  overlay(j, cmd, "parse_retries", "--parse-retries", gw.parse_retries);
  overlay(j, cmd, "flip_pos", "--flip-pos", gw.flip_pos);
  overlay(j, cmd, "flip_neg", "--flip-neg", gw.flip_neg);
  overlay(j, cmd, "jitter", "--jitter", gw.jitter);
}

void overlay_classify(const CLI::App* cmd, ClassifyArgs& a) {
  if (a.config_file.empty()) return;
  const ordered_json j = load_config_file(a.config_file);
  overlay_gateway(j, cmd, a.gw);
  overlay(j, cmd, "model", "--model", a.params.model_id);
  overlay(j, cmd, "temperature", "--temperature", a.params.temperature);
  overlay(j, cmd, "top_p", "--top-p", a.params.top_p);
  overlay(j, cmd, "frequency_penalty", "--frequency-penalty", a.params.frequency_penalty);
  overlay(j, cmd, "presence_penalty", "--presence-penalty", a.params.presence_penalty);
  if (j.contains("stop")) a.params.stop_words = j.at("stop").get<std::vector<std::string>>();
  overlay(j, cmd, "fps", "--fps", a.sampling.fps);
  overlay(j, cmd, "max_frames", "--max-frames", a.sampling.max_frames);
  overlay(j, cmd, "seed", "--seed", a.seed);
  overlay(j, cmd, "min_size", "--min-size", a.min_size);
  overlay(j, cmd, "policies", "--policies", a.policies_dir);
  overlay(j, cmd, "templates", "--templates", a.templates_dir);
}

void overlay_evaluate(const CLI::App* cmd, EvaluateArgs& a) {
  if (a.config_file.empty()) return;
  const ordered_json j = load_config_file(a.config_file);
  overlay(j, cmd, "threshold", "--threshold", a.threshold);
  overlay(j, cmd, "bins", "--bins", a.bins);
  overlay(j, cmd, "agg", "--agg", a.agg);
}

void overlay_resume(const CLI::App* cmd, ResumeArgs& a) {
  if (a.config_file.empty()) return;
  const ordered_json j = load_config_file(a.config_file);
  overlay_gateway(j, cmd, a.gw);
  overlay(j, cmd, "policies", "--policies", a.policies_dir);
  overlay(j, cmd, "templates", "--templates", a.templates_dir);
}

// ---------------------------------------------------------------------------
// Gateway assembly

GatewayConfig gateway_config(const GatewayArgs& gw) {
  GatewayConfig cfg;
  cfg.endpoint_url = gw.endpoint;
  cfg.api_key_env = gw.api_key_env;
  cfg.max_in_flight = gw.max_in_flight;
  cfg.request_timeout_s = gw.timeout_s;
  cfg.max_retries = gw.max_retries;
  cfg.backoff_base_s = gw.backoff_s;
  cfg.parse_retries = gw.parse_retries;
  return cfg;
}

std::shared_ptr<ChatProvider> make_provider(const GatewayArgs& gw, const GatewayConfig& cfg,
                                            const Dataset& ds, std::uint64_t seed) {
  if (gw.provider == "http") {
    if (gw.endpoint.empty()) {
      throw std::invalid_argument("--endpoint is required with --provider http");
    }
    return std::make_shared<HttpProvider>(cfg);
  }
  if (gw.provider == "mock:planted") {
    std::map<std::string, int> labels;
    for (const VideoPost& post : ds.items) labels[post.item_id] = post.label;
    PlantedMockConfig mock{seed, gw.flip_pos, gw.flip_neg, gw.jitter};
    return std::make_shared<PlantedMockProvider>(mock, std::move(labels));
  }
  if (gw.provider == "mock:uniform") {
    return std::make_shared<UniformMockProvider>(seed);
  }
  throw std::invalid_argument("unknown provider '" + gw.provider +
                              "' (expected http, mock:planted, or mock:uniform)");
}

// ---------------------------------------------------------------------------
// Run reporting and exit codes

void print_run_summary(std::ostream& out, const RunLedger& ledger, const fs::path& path) {
  out << "run_id: " << ledger.header.run_id << "\n";
  out << "ledger: " << path.string() << "\n";
  std::size_t parse = 0;
  std::size_t transport = 0;
  std::size_t frames = 0;
  for (const ClassificationRecord& rec : ledger.exclusions) {
    switch (rec.failure->kind) {
      case FailureRecord::Kind::parse: ++parse; break;
      case FailureRecord::Kind::transport: ++transport; break;
      case FailureRecord::Kind::frames: ++frames; break;
    }
  }
  out << "records: " << ledger.records.size() << "  excluded: " << ledger.excluded_count();
  if (!ledger.exclusions.empty()) {
    out << " (parse " << parse << ", transport " << transport << ", frames " << frames << ")";
  }
  out << "\n";
}

// 0 when the run is usable; with a majority of items excluded, 3 when parse
// failures dominate the exclusions (ties included), else 2. CI treats 3 as
// "model output format regressed" and 2 as "endpoint trouble".
int run_exit_code(const RunLedger& ledger) {
  const std::size_t n = ledger.records.size() + ledger.excluded_count();
  if (n == 0 || ledger.excluded_count() * 2 <= n) return 0;
  std::size_t parse = 0;
  for (const ClassificationRecord& rec : ledger.exclusions) {
    if (rec.failure->kind == FailureRecord::Kind::parse) ++parse;
  }
  return parse * 2 >= ledger.excluded_count() ? 3 : 2;
}

// ---------------------------------------------------------------------------
// classify

int cmd_classify(const ClassifyArgs& a, std::ostream& out, std::ostream&) {
  Dataset ds = balance(load_dataset(a.dataset), a.seed);
  if (static_cast<long>(ds.items.size()) < a.min_size) {
    throw std::invalid_argument("balanced dataset has " + std::to_string(ds.items.size()) +
                                " items; minimum is " + std::to_string(a.min_size) +
                                " (--min-size)");
  }
  PolicyRegistry registry = PolicyRegistry::load(a.policies_dir);
  const CategoryPolicy& policy = registry.find(a.category, a.variant);
  if (a.mode == "decomposed" && !policy.has_subpolicies()) {
    throw std::invalid_argument("category has no decomposition: " + policy.category_name);
  }
  PromptTemplates templates = load_templates(a.templates_dir);

  GatewayConfig cfg = gateway_config(a.gw);
  LlmGateway gateway(make_provider(a.gw, cfg, ds, a.seed), cfg);

  RunOptions opts;
  opts.params = a.params;
  opts.sampling = a.sampling;
  opts.seed = a.seed;
  opts.dataset_path = a.dataset;
  opts.frames_dir = a.frames_dir.empty() ? fs::path(a.dataset).parent_path() : fs::path(a.frames_dir);
  opts.out_path = a.out.empty()
                      ? fs::path(a.out_dir) / (make_run_id(policy, a.mode, a.seed) + ".jsonl")
                      : fs::path(a.out);

  RunLedger ledger = a.mode == "decomposed"
                         ? run_decomposed(ds, policy, templates, gateway, opts)
                         : run_single(ds, policy, templates, gateway, opts);
  print_run_summary(out, ledger, opts.out_path);
  return run_exit_code(ledger);
}

// ---------------------------------------------------------------------------
// evaluate

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string token;
  for (char c : csv) {
    if (c == ',') {
      if (!token.empty()) out.push_back(token);
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) out.push_back(token);
  return out;
}

std::vector<ScoredItem> scored_from_single(const RunLedger& ledger) {
  std::vector<ScoredItem> scored;
  scored.reserve(ledger.records.size());
  for (const ClassificationRecord& rec : ledger.records) {
    scored.push_back({rec.item_id, static_cast<double>(rec.scores.at(0)), rec.label});
  }
  return scored;
}

std::vector<ScoredItem> scored_from_fused(const std::vector<FusedScore>& fused) {
  std::vector<ScoredItem> scored;
  scored.reserve(fused.size());
  for (const FusedScore& f : fused) scored.push_back({f.item_id, f.score, f.label});
  return scored;
}

AggregationModel resolve_model(const std::string& token, const RunLedger& ledger,
                               const EvaluateArgs& a, std::ostream& out) {
  const std::size_t colon = token.find(':');
  const std::string kind_name = token.substr(0, colon);
  const AggregationKind kind = aggregation_kind_from_string(kind_name);

  if (kind != AggregationKind::linear) {
    if (colon != std::string::npos) {
      throw std::invalid_argument("aggregation '" + kind_name + "' takes no model path");
    }
    AggregationModel model;
    model.kind = kind;
    model.subcategory_order = ledger.header.subcategory_order;
    return model;
  }
  if (colon != std::string::npos) {
    return load_model(token.substr(colon + 1));
  }
  if (!a.fit_linear) {
    throw std::invalid_argument(
        "linear aggregation needs a fitted model: pass --fit-linear or linear:<model-path>");
  }
  std::vector<TrainingRow> rows;
  rows.reserve(ledger.records.size());
  for (const ClassificationRecord& rec : ledger.records) {
    rows.push_back({rec.item_id, rec.scores, rec.label});
  }
  AggregationModel model =
      fit_linear(rows, ledger.header.seed, ledger.header.subcategory_order);
  const fs::path path = fs::path(a.out_dir) / (ledger.header.run_id + ".linear_model.json");
  save_model(model, path);
  out << "fitted linear model: " << path.string() << " (" << model.train_item_ids.size()
      << " training items withheld)\n";
  return model;
}

void append_baseline(std::vector<RunScores>& runs, const std::string& dataset_path,
                     bool explicit_path, std::ostream& err) {
  if (runs.empty() || dataset_path.empty()) return;
  if (!fs::exists(dataset_path)) {
    if (explicit_path) throw std::invalid_argument("dataset not found: " + dataset_path);
    err << "note: baseline skipped, dataset not found: " << dataset_path << "\n";
    return;
  }
  Dataset ds = load_dataset(dataset_path);
  std::map<std::string, const VideoPost*> by_id;
  for (const VideoPost& post : ds.items) by_id[post.item_id] = &post;

  std::vector<ScoredItem> scored;
  std::size_t with_baseline = 0;
  for (const ScoredItem& item : runs.front().scored) {
    const auto it = by_id.find(item.item_id);
    if (it == by_id.end() || !it->second->baseline_score) continue;
    ++with_baseline;
    // Production scores are normalized [0,1]; rescale onto the verdict axis
    // so one threshold applies to every column.
    scored.push_back({item.item_id, *it->second->baseline_score * 100.0, it->second->label});
  }
  if (with_baseline == 0) return;  // column absent: nothing to compare against
  if (with_baseline != runs.front().scored.size()) {
    throw std::invalid_argument(
        "baseline_score present for only " + std::to_string(with_baseline) + " of " +
        std::to_string(runs.front().scored.size()) + " evaluated items");
  }
  runs.push_back({"baseline", std::move(scored)});
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.ledgers.empty()) throw std::invalid_argument("no ledger paths given");
  fs::create_directories(a.out_dir);

  std::vector<RunScores> runs;
  std::set<std::string> withheld;  // union of linear train splits
  std::string first_dataset_path;
  ordered_json ledger_summaries = ordered_json::array();

  for (const std::string& path : a.ledgers) {
    RunLedger ledger = load_ledger(path);
    if (first_dataset_path.empty()) first_dataset_path = ledger.header.dataset_path;
    ledger_summaries.push_back({{"path", path},
                                {"run_id", ledger.header.run_id},
                                {"records", ledger.records.size()},
                                {"excluded", ledger.excluded_count()}});
    if (ledger.header.mode == "single") {
      runs.push_back({ledger.header.run_id, scored_from_single(ledger)});
      continue;
    }
    if (a.agg.empty()) {
      throw std::invalid_argument("decomposed ledger " + path +
                                  " needs --agg {mean|max|linear[:model-path]}");
    }
    for (const std::string& token : split_list(a.agg)) {
      AggregationModel model = resolve_model(token, ledger, a, out);
      runs.push_back({ledger.header.run_id + "." + to_string(model.kind),
                      scored_from_fused(apply_to_ledger(ledger, model))});
      withheld.insert(model.train_item_ids.begin(), model.train_item_ids.end());
    }
  }

  // A linear fusion is scored on held-out items only; restrict every run to
  // that set so the comparison stays apples-to-apples.
  if (!withheld.empty()) {
    for (RunScores& run : runs) {
      std::erase_if(run.scored,
                    [&](const ScoredItem& item) { return withheld.count(item.item_id) > 0; });
    }
  }

  if (!a.no_baseline) {
    append_baseline(runs, a.dataset.empty() ? first_dataset_path : a.dataset,
                    !a.dataset.empty(), err);
  }

  ComparisonReport report = compare_runs(runs, a.threshold);

  std::vector<std::pair<std::string, PRCurve>> curves;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string& name = report.runs[i].name;
    write_file(fs::path(a.out_dir) / (name + ".pr.csv"), pr_curve_csv(report.runs[i].curve));
    const ScoreHistogram hist = histogram(runs[i].scored, a.bins, a.threshold);
    write_file(fs::path(a.out_dir) / (name + ".hist.csv"), histogram_csv(hist));
    write_file(fs::path(a.out_dir) / (name + ".hist.svg"), svg_histogram(hist, name));
    curves.emplace_back(name, report.runs[i].curve);
  }
  write_file(fs::path(a.out_dir) / "pr_curves.svg", svg_pr_curves(curves, "precision-recall"));

  ordered_json summary = comparison_to_json(report);
  summary["ledgers"] = std::move(ledger_summaries);
  write_file(fs::path(a.out_dir) / "summary.json", summary.dump(2) + "\n");

  if (a.write_deltas) {
    std::string csv = "name,auc_delta,fp_delta,fn_delta\n";
    for (const MetricsDelta& d : report.deltas) {
      csv += d.name + "," + std::to_string(d.auc_delta) + "," + std::to_string(d.fp_delta) +
             "," + std::to_string(d.fn_delta) + "\n";
    }
    write_file(fs::path(a.out_dir) / "deltas.csv", csv);
  }

  out << render_comparison(report);
  return 0;
}

// ---------------------------------------------------------------------------
// policy

int cmd_policy_list(const PolicyArgs& a, std::ostream& out) {
  PolicyRegistry registry = PolicyRegistry::load(a.policies_dir);
  for (const std::string& category : registry.category_names()) {
    for (const CategoryPolicy* variant : registry.variants_of(category)) {
      out << category << "  [" << variant->variant_id << "]  "
          << word_count(variant->policy_text) << " words";
      if (variant->has_subpolicies()) {
        out << "  (" << variant->subpolicies.size() << " subpolicies)";
      }
      out << "\n";
    }
  }
  out << registry.category_names().size() << " categories, " << registry.all().size()
      << " variants\n";
  return 0;
}

std::size_t first_diff_offset(const std::string& a, const std::string& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) return i;
  }
  return n;
}

int cmd_policy_validate(const PolicyArgs& a, std::ostream& out, std::ostream& err) {
  PolicyRegistry registry = PolicyRegistry::load(a.policies_dir);
  PromptTemplates templates = load_templates(a.templates_dir);

  int mismatches = 0;
  int checked = 0;
  auto check = [&](const fs::path& golden_path, const std::string& actual) {
    ++checked;
    const std::string expected = read_file(golden_path);
    if (expected != actual) {
      ++mismatches;
      err << "golden mismatch: " << golden_path.string() << " differs at byte "
          << first_diff_offset(expected, actual) << " (expected " << expected.size()
          << " bytes, rendered " << actual.size() << ")\n";
    }
  };

  for (const CategoryPolicy& policy : registry.all()) {
    const std::string name =
        slugify(policy.category_name) + "." + policy.variant_id + ".system.txt";
    check(fs::path(a.goldens_dir) / name, render_system_prompt(templates, policy));
  }

  // The user-prompt golden renders a pinned sample post shipped next to it.
  Dataset sample = load_dataset(fs::path(a.goldens_dir) / "sample_post.jsonl");
  check(fs::path(a.goldens_dir) / "user.sample.txt",
        render_user_prompt(templates, sample.items.at(0), {}).user_text);

  if (mismatches > 0) {
    err << mismatches << " of " << checked << " goldens differ\n";
    return 1;
  }
  out << "validated " << checked << " goldens\n";
  return 0;
}

// ---------------------------------------------------------------------------
// resume

int cmd_resume(const ResumeArgs& a, std::ostream& out, std::ostream&) {
  RunLedger partial = load_ledger(a.ledger, /*allow_partial=*/true);
  const RunHeader& header = partial.header;

  const std::string dataset_path = a.dataset.empty() ? header.dataset_path : a.dataset;
  // Re-derive the exact balanced subset the original run used.
  Dataset ds = balance(load_dataset(dataset_path), header.seed);

  PolicyRegistry registry = PolicyRegistry::load(a.policies_dir);
  const CategoryPolicy& policy = registry.find(header.category_name, header.policy_variant);
  PromptTemplates templates = load_templates(a.templates_dir);

  GatewayConfig cfg = gateway_config(a.gw);
  LlmGateway gateway(make_provider(a.gw, cfg, ds, header.seed), cfg);

  RunOptions opts;
  opts.params = header.params;
  opts.sampling = header.sampling;
  opts.seed = header.seed;
  opts.dataset_path = header.dataset_path;
  opts.frames_dir =
      a.frames_dir.empty() ? fs::path(dataset_path).parent_path() : fs::path(a.frames_dir);
  opts.out_path = a.ledger;

  RunLedger ledger = resume(a.ledger, ds, policy, templates, gateway, opts);
  print_run_summary(out, ledger, a.ledger);
  return run_exit_code(ledger);
}

void add_gateway_options(CLI::App* cmd, GatewayArgs& gw, bool provider_required) {
  auto* provider = cmd->add_option("--provider", gw.provider,
                                   "Chat provider: http, mock:planted, or mock:uniform");
  provider->check(CLI::IsMember({"http", "mock:planted", "mock:uniform"}));
  if (provider_required) provider->required();
  cmd->add_option("--endpoint", gw.endpoint, "Chat-completions base URL (http provider)");
  cmd->add_option("--api-key-env", gw.api_key_env,
                  "Environment variable holding the bearer key");
  cmd->add_option("--max-in-flight", gw.max_in_flight, "Concurrent request cap")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--timeout", gw.timeout_s, "Request timeout in seconds");
  cmd->add_option("--retries", gw.max_retries, "Transport retries on 429/5xx");
  cmd->add_option("--backoff", gw.backoff_s, "Base backoff delay in seconds");
  cmd->add_option("--parse-retries", gw.parse_retries,
                  "Corrective re-sends after an unparseable verdict");
  cmd->add_option("--flip-pos", gw.flip_pos, "Planted mock: P(positive scored as negative)");
  cmd->add_option("--flip-neg", gw.flip_neg, "Planted mock: P(negative scored as positive)");
  cmd->add_option("--jitter", gw.jitter, "Planted mock: uniform +-jitter on scores");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-shot video classification pipeline and evaluation harness"};
  app.require_subcommand(1);

  ClassifyArgs ca;
  CLI::App* classify = app.add_subcommand("classify", "Run a classification pass over a dataset");
  classify->add_option("--dataset", ca.dataset, "Dataset JSONL path")->required();
  classify->add_option("--category", ca.category, "Category name or slug")->required();
  classify->add_option("--variant", ca.variant, "Policy variant (optional when unique)");
  classify->add_option("--mode", ca.mode, "single or decomposed")
      ->check(CLI::IsMember({"single", "decomposed"}));
  add_gateway_options(classify, ca.gw, /*provider_required=*/true);
  classify->add_option("--model", ca.params.model_id, "Model identifier sent to the endpoint");
  classify->add_option("--temperature", ca.params.temperature, "Sampling temperature");
  classify->add_option("--top-p", ca.params.top_p, "Nucleus sampling mass");
  classify->add_option("--frequency-penalty", ca.params.frequency_penalty, "Frequency penalty");
  classify->add_option("--presence-penalty", ca.params.presence_penalty, "Presence penalty");
  classify->add_option("--fps", ca.sampling.fps, "Frame sampling rate");
  classify->add_option("--max-frames", ca.sampling.max_frames, "Frame cap per item");
  classify->add_option("--seed", ca.seed, "Run seed (balancing, mocks, splits)");
  classify->add_option("--policies", ca.policies_dir, "Policy registry directory");
  classify->add_option("--templates", ca.templates_dir, "Prompt template directory");
  classify->add_option("--frames-dir", ca.frames_dir, "Frame store root (default: dataset dir)");
  classify->add_option("--out", ca.out, "Ledger path (default: <out-dir>/<run_id>.jsonl)");
  classify->add_option("--out-dir", ca.out_dir, "Output directory");
  classify->add_option("--min-size", ca.min_size, "Minimum balanced dataset size");
  classify->add_option("--config", ca.config_file, "JSON config file (flags take precedence)");

  EvaluateArgs ea;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score ledgers into PR reports");
  evaluate->add_option("ledgers", ea.ledgers, "Run ledger paths")->required()->expected(-1);
  evaluate->add_option("--agg", ea.agg,
                       "Aggregations for decomposed ledgers: mean,max,linear[:model-path]");
  evaluate->add_flag("--fit-linear", ea.fit_linear, "Fit and save a linear model first");
  evaluate->add_option("--threshold", ea.threshold, "Operating threshold on the 0-100 scale");
  evaluate->add_option("--bins", ea.bins, "Histogram bin count");
  evaluate->add_option("--out-dir", ea.out_dir, "Report output directory");
  evaluate->add_option("--dataset", ea.dataset, "Dataset for baseline scores (default: recorded path)");
  evaluate->add_flag("--no-baseline", ea.no_baseline, "Skip the baseline pseudo-run");
  evaluate->add_flag("--compare", ea.write_deltas, "Also write deltas.csv");
  evaluate->add_option("--config", ea.config_file, "JSON config file (flags take precedence)");

  PolicyArgs pa;
  CLI::App* policy = app.add_subcommand("policy", "Inspect and validate the policy registry");
  policy->require_subcommand(1);
  CLI::App* policy_list = policy->add_subcommand("list", "List categories and variants");
  CLI::App* policy_validate =
      policy->add_subcommand("validate", "Re-render prompts against the goldens");
  for (CLI::App* sub : {policy_list, policy_validate}) {
    sub->add_option("--policies", pa.policies_dir, "Policy registry directory");
    sub->add_option("--templates", pa.templates_dir, "Prompt template directory");
  }
  policy_validate->add_option("--goldens", pa.goldens_dir, "Golden prompt directory");

  ResumeArgs ra;
  CLI::App* resume_cmd = app.add_subcommand("resume", "Continue an interrupted run ledger");
  resume_cmd->add_option("--ledger", ra.ledger, "Partial ledger path")->required();
  add_gateway_options(resume_cmd, ra.gw, /*provider_required=*/true);
  resume_cmd->add_option("--policies", ra.policies_dir, "Policy registry directory");
  resume_cmd->add_option("--templates", ra.templates_dir, "Prompt template directory");
  resume_cmd->add_option("--dataset", ra.dataset, "Dataset override (default: recorded path)");
  resume_cmd->add_option("--frames-dir", ra.frames_dir, "Frame store root");
  resume_cmd->add_option("--config", ra.config_file, "JSON config file (flags take precedence)");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("fqc");
  for (const std::string& arg : args) argv.push_back(arg.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help and friends
    app.exit(e, out, err);
    return 1;  // every usage problem is a validation failure
  }

  try {
    if (classify->parsed()) {
      overlay_classify(classify, ca);
      return cmd_classify(ca, out, err);
    }
    if (evaluate->parsed()) {
      overlay_evaluate(evaluate, ea);
      return cmd_evaluate(ea, out, err);
    }
    if (policy->parsed()) {
      if (policy_list->parsed()) return cmd_policy_list(pa, out);
      return cmd_policy_validate(pa, out, err);
    }
    if (resume_cmd->parsed()) {
      overlay_resume(resume_cmd, ra);
      return cmd_resume(ra, out, err);
    }
  } catch (const TransportError& e) {
    err << "transport error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace fqc
