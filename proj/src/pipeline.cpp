#include "fqc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "fqc/util.hpp"

namespace fqc {

using nlohmann::ordered_json;

std::string make_run_id(const CategoryPolicy& policy, const std::string& mode,
                        std::uint64_t seed) {
  return slugify(policy.category_name) + "." + policy.variant_id + "." + mode + ".s" +
         std::to_string(seed);
}

ordered_json header_to_json(const RunHeader& h) {
  ordered_json j;
  j["kind"] = "header";
  j["run_id"] = h.run_id;
  j["category_name"] = h.category_name;
  j["policy_variant"] = h.policy_variant;
  j["mode"] = h.mode;
  j["subcategory_order"] = h.subcategory_order;
  j["params"] = {{"temperature", h.params.temperature},
                 {"top_p", h.params.top_p},
                 {"frequency_penalty", h.params.frequency_penalty},
                 {"presence_penalty", h.params.presence_penalty},
                 {"stop", h.params.stop_words},
                 {"model", h.params.model_id}};
  j["sampling"] = {{"fps", h.sampling.fps},
                   {"max_frames", h.sampling.max_frames},
                   {"include_endpoints", h.sampling.include_endpoints}};
  j["seed"] = h.seed;
  j["provider"] = h.provider;
  j["dataset_path"] = h.dataset_path;
  j["dataset_size"] = h.dataset_size;
  j["started_at"] = h.started_at;
  j["finished_at"] = h.finished_at;
  return j;
}

RunHeader header_from_json(const ordered_json& j) {
  if (j.value("kind", "") != "header") throw PipelineError("ledger does not start with a header");
  RunHeader h;
  try {
    h.run_id = j.at("run_id");
    h.category_name = j.at("category_name");
    h.policy_variant = j.at("policy_variant");
    h.mode = j.at("mode");
    h.subcategory_order = j.at("subcategory_order").get<std::vector<std::string>>();
    const auto& p = j.at("params");
    h.params.temperature = p.at("temperature");
    h.params.top_p = p.at("top_p");
    h.params.frequency_penalty = p.at("frequency_penalty");
    h.params.presence_penalty = p.at("presence_penalty");
    h.params.stop_words = p.at("stop").get<std::vector<std::string>>();
    h.params.model_id = p.at("model");
    const auto& s = j.at("sampling");
    h.sampling.fps = s.at("fps");
    h.sampling.max_frames = s.at("max_frames");
    h.sampling.include_endpoints = s.at("include_endpoints");
    h.seed = j.at("seed");
    h.provider = j.at("provider");
    h.dataset_path = j.at("dataset_path");
    h.dataset_size = j.at("dataset_size");
    h.started_at = j.at("started_at");
    h.finished_at = j.at("finished_at");
  } catch (const ordered_json::exception& e) {
    throw PipelineError(std::string("bad ledger header: ") + e.what());
  }
  return h;
}

ordered_json record_to_json(const ClassificationRecord& r) {
  ordered_json j;
  j["kind"] = r.failure ? "exclusion" : "record";
  j["item_id"] = r.item_id;
  j["mode"] = r.mode;
  j["policy_variant"] = r.policy_variant;
  j["label"] = r.label;
  if (r.failure) {
    j["failure"] = {{"kind", to_string(r.failure->kind)},
                    {"detail", r.failure->detail},
                    {"raw_text", r.failure->raw_text},
                    {"attempts", r.failure->attempt_count}};
  } else {
    j["scores"] = r.scores;
    j["reasonings"] = r.reasonings;
  }
  return j;
}

ClassificationRecord record_from_json(const ordered_json& j) {
  ClassificationRecord r;
  try {
    const std::string kind = j.at("kind");
    if (kind != "record" && kind != "exclusion") {
      throw PipelineError("unknown ledger line kind: " + kind);
    }
    r.item_id = j.at("item_id");
    r.mode = j.at("mode");
    r.policy_variant = j.at("policy_variant");
    r.label = j.at("label");
    if (kind == "exclusion") {
      const auto& f = j.at("failure");
      FailureRecord failure;
      failure.kind = failure_kind_from_string(f.at("kind"));
      failure.detail = f.at("detail");
      failure.raw_text = f.at("raw_text");
      failure.attempt_count = f.at("attempts");
      r.failure = std::move(failure);
    } else {
      r.scores = j.at("scores").get<std::vector<int>>();
      r.reasonings = j.at("reasonings").get<std::vector<std::string>>();
      if (r.scores.size() != r.reasonings.size()) {
        throw PipelineError("ledger record with mismatched scores/reasonings: " + r.item_id);
      }
    }
  } catch (const ordered_json::exception& e) {
    throw PipelineError(std::string("bad ledger record: ") + e.what());
  }
  return r;
}

namespace {

bool record_id_less(const ClassificationRecord& a, const ClassificationRecord& b) {
  return a.item_id < b.item_id;
}

}  // namespace

void save_ledger(const RunLedger& ledger, const std::filesystem::path& path) {
  std::vector<const ClassificationRecord*> lines;
  lines.reserve(ledger.records.size() + ledger.exclusions.size());
  for (const auto& r : ledger.records) lines.push_back(&r);
  for (const auto& r : ledger.exclusions) lines.push_back(&r);
  std::sort(lines.begin(), lines.end(),
            [](const auto* a, const auto* b) { return a->item_id < b->item_id; });

  std::string out = header_to_json(ledger.header).dump() + "\n";
  for (const auto* r : lines) out += record_to_json(*r).dump() + "\n";

  // Write-then-rename so a crash mid-rewrite cannot destroy the ledger.
  const std::filesystem::path tmp = path.string() + ".tmp";
  write_file(tmp, out);
  std::filesystem::rename(tmp, path);
}

RunLedger load_ledger(const std::filesystem::path& path, bool allow_partial) {
  std::ifstream in(path);
  if (!in) throw PipelineError("cannot open ledger: " + path.string());

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw PipelineError("empty ledger: " + path.string());

  RunLedger ledger;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    ordered_json j;
    try {
      j = ordered_json::parse(lines[i]);
    } catch (const ordered_json::exception& e) {
      if (allow_partial && i + 1 == lines.size()) break;  // torn final append
      throw PipelineError("malformed ledger line " + std::to_string(i + 1) + ": " + e.what());
    }
    if (i == 0) {
      ledger.header = header_from_json(j);
      continue;
    }
    ClassificationRecord r = record_from_json(j);
    if (!seen.insert(r.item_id).second) {
      throw PipelineError("duplicate ledger record: " + r.item_id);
    }
    (r.failure ? ledger.exclusions : ledger.records).push_back(std::move(r));
  }
  std::sort(ledger.records.begin(), ledger.records.end(), record_id_less);
  std::sort(ledger.exclusions.begin(), ledger.exclusions.end(), record_id_less);
  return ledger;
}

namespace {

// Serialized append-only writer; one ledger line per completed item, flushed
// immediately so an interrupted run loses at most the in-flight item.
class LedgerWriter {
 public:
  LedgerWriter(const std::filesystem::path& path, const RunHeader& header, bool fresh) {
    if (fresh) {
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      out_.open(path, std::ios::trunc);
      if (!out_) throw PipelineError("cannot write ledger: " + path.string());
      out_ << header_to_json(header).dump() << "\n" << std::flush;
    } else {
      out_.open(path, std::ios::app);
      if (!out_) throw PipelineError("cannot append to ledger: " + path.string());
    }
  }

  void append(const ClassificationRecord& record) {
    std::lock_guard<std::mutex> lock(mu_);
    out_ << record_to_json(record).dump() << "\n" << std::flush;
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

ClassificationRecord process_item(const VideoPost& post,
                                  const std::vector<CategoryPolicy>& units,
                                  const PromptTemplates& templates, LlmGateway& gateway,
                                  const RunOptions& opts, const RunHeader& header,
                                  bool decomposed) {
  ClassificationRecord rec;
  rec.item_id = post.item_id;
  rec.mode = header.mode;
  rec.policy_variant = header.policy_variant;
  rec.label = post.label;

  std::vector<EncodedImage> images;
  if (!post.frame_refs.empty()) {
    try {
      VideoPost sampled = post;
      sampled.frame_refs = select_frames(post, opts.sampling);
      images = resolve_frames(sampled, opts.frames_dir);
    } catch (const CorpusError& e) {
      rec.failure = FailureRecord{FailureRecord::Kind::frames, e.what(), "", 0};
      return rec;
    }
  }

  for (const CategoryPolicy& unit : units) {
    const std::string tag =
        decomposed ? post.item_id + "#" + slugify(unit.category_name) : post.item_id;
    RenderedPrompt prompt = render_prompt(templates, unit, post, images);
    ChatOutcome outcome = gateway.classify_once(prompt, opts.params, tag);
    if (auto* failure = std::get_if<FailureRecord>(&outcome)) {
      if (decomposed) failure->detail = unit.category_name + ": " + failure->detail;
      rec.scores.clear();
      rec.reasonings.clear();
      rec.failure = std::move(*failure);
      return rec;
    }
    auto& verdict = std::get<Verdict>(outcome);
    rec.scores.push_back(verdict.score);
    rec.reasonings.push_back(std::move(verdict.reasoning));
  }
  return rec;
}

RunLedger execute_run(const Dataset& ds, const CategoryPolicy& policy,
                      const PromptTemplates& templates, LlmGateway& gateway,
                      const RunOptions& opts, const std::string& mode, RunHeader header,
                      const std::set<std::string>& skip_ids, bool fresh_ledger,
                      std::vector<ClassificationRecord> carried) {
  if (ds.items.empty()) throw PipelineError("empty dataset");
  opts.params.validate();
  opts.sampling.validate();
  if (opts.out_path.empty()) throw PipelineError("ledger output path not set");

  const bool decomposed = mode == "decomposed";
  const std::vector<CategoryPolicy> units =
      decomposed ? expand_subprompts(policy) : std::vector<CategoryPolicy>{policy};

  LedgerWriter writer(opts.out_path, header, fresh_ledger);

  std::vector<const VideoPost*> todo;
  for (const VideoPost& post : ds.items) {
    if (!skip_ids.count(post.item_id)) todo.push_back(&post);
  }

  std::vector<ClassificationRecord> done(todo.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      try {
        ClassificationRecord rec =
            process_item(*todo[i], units, templates, gateway, opts, header, decomposed);
        writer.append(rec);
        done[i] = std::move(rec);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(std::max(1, gateway.config().max_in_flight), std::max<std::size_t>(todo.size(), 1));
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  RunLedger ledger;
  ledger.header = std::move(header);
  for (auto& rec : carried) {
    (rec.failure ? ledger.exclusions : ledger.records).push_back(std::move(rec));
  }
  for (auto& rec : done) {
    (rec.failure ? ledger.exclusions : ledger.records).push_back(std::move(rec));
  }
  std::sort(ledger.records.begin(), ledger.records.end(), record_id_less);
  std::sort(ledger.exclusions.begin(), ledger.exclusions.end(), record_id_less);
  ledger.header.finished_at = iso8601_utc_now();

  save_ledger(ledger, opts.out_path);  // canonical sorted rewrite
  return ledger;
}

RunHeader make_header(const Dataset& ds, const CategoryPolicy& policy,
                      LlmGateway& gateway, const RunOptions& opts, const std::string& mode) {
  RunHeader h;
  h.run_id = make_run_id(policy, mode, opts.seed);
  h.category_name = policy.category_name;
  h.policy_variant = policy.variant_id;
  h.mode = mode;
  if (mode == "decomposed") h.subcategory_order = policy.subcategory_names();
  h.params = opts.params;
  h.sampling = opts.sampling;
  h.seed = opts.seed;
  h.provider = gateway.provider().name();
  h.dataset_path = opts.dataset_path;
  h.dataset_size = ds.items.size();
  h.started_at = iso8601_utc_now();
  return h;
}

}  // namespace

RunLedger run_single(const Dataset& ds, const CategoryPolicy& policy,
                     const PromptTemplates& templates, LlmGateway& gateway,
                     const RunOptions& opts) {
  RunHeader header = make_header(ds, policy, gateway, opts, "single");
  return execute_run(ds, policy, templates, gateway, opts, "single", std::move(header), {},
                     /*fresh_ledger=*/true, {});
}

RunLedger run_decomposed(const Dataset& ds, const CategoryPolicy& policy,
                         const PromptTemplates& templates, LlmGateway& gateway,
                         const RunOptions& opts) {
  if (!policy.has_subpolicies()) {
    throw PipelineError("category has no decomposition: " + policy.category_name);
  }
  RunHeader header = make_header(ds, policy, gateway, opts, "decomposed");
  return execute_run(ds, policy, templates, gateway, opts, "decomposed", std::move(header), {},
                     /*fresh_ledger=*/true, {});
}

namespace {

void require_match(bool ok, const std::string& field) {
  if (!ok) throw PipelineError("ledger/config mismatch: " + field);
}

}  // namespace

RunLedger resume(const std::filesystem::path& ledger_path, const Dataset& ds,
                 const CategoryPolicy& policy, const PromptTemplates& templates,
                 LlmGateway& gateway, const RunOptions& opts) {
  RunLedger partial = load_ledger(ledger_path, /*allow_partial=*/true);
  const RunHeader& h = partial.header;
  const std::string mode = h.mode;

  require_match(h.category_name == policy.category_name, "category_name");
  require_match(h.policy_variant == policy.variant_id, "policy_variant");
  require_match(h.seed == opts.seed, "seed");
  require_match(h.params.temperature == opts.params.temperature &&
                    h.params.top_p == opts.params.top_p &&
                    h.params.frequency_penalty == opts.params.frequency_penalty &&
                    h.params.presence_penalty == opts.params.presence_penalty &&
                    h.params.stop_words == opts.params.stop_words &&
                    h.params.model_id == opts.params.model_id,
                "params");
  require_match(h.sampling.fps == opts.sampling.fps &&
                    h.sampling.max_frames == opts.sampling.max_frames &&
                    h.sampling.include_endpoints == opts.sampling.include_endpoints,
                "sampling");
  if (mode == "decomposed") {
    require_match(h.subcategory_order == policy.subcategory_names(), "subcategory_order");
  }
  require_match(h.dataset_size == ds.items.size(), "dataset_size");

  std::set<std::string> dataset_ids;
  for (const auto& post : ds.items) dataset_ids.insert(post.item_id);
  std::set<std::string> skip;
  std::vector<ClassificationRecord> carried;
  for (auto* bucket : {&partial.records, &partial.exclusions}) {
    for (auto& rec : *bucket) {
      if (!dataset_ids.count(rec.item_id)) {
        throw PipelineError("ledger/config mismatch: recorded item not in dataset: " +
                            rec.item_id);
      }
      skip.insert(rec.item_id);
      carried.push_back(std::move(rec));
    }
  }

  RunOptions run_opts = opts;
  run_opts.out_path = ledger_path;
  return execute_run(ds, policy, templates, gateway, run_opts, mode, h, skip,
                     /*fresh_ledger=*/false, std::move(carried));
}

}  // namespace fqc
