#include "fqc/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "fqc/util.hpp"

namespace fqc {

using nlohmann::ordered_json;

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(),
                    [label](const VideoPost& p) { return p.label == label; }));
}

namespace {

VideoPost parse_record(const ordered_json& rec, std::size_t line_no) {
  auto fail = [line_no](const std::string& what) -> CorpusError {
    return CorpusError(what + " at line " + std::to_string(line_no));
  };

  if (!rec.is_object()) throw fail("record is not an object");

  VideoPost post;
  try {
    post.item_id = rec.at("item_id").get<std::string>();
    post.asr = rec.value("asr", std::string());
    post.hashtag = rec.value("hashtag", std::string());
    post.text = rec.value("text", std::string());
    post.sticker_text = rec.value("sticker_text", std::string());
    if (rec.contains("frame_refs")) {
      post.frame_refs = rec.at("frame_refs").get<std::vector<std::string>>();
    }
    post.duration_s = rec.value("duration_s", 0.0);
  } catch (const ordered_json::exception& e) {
    throw fail(std::string("malformed record (") + e.what() + ")");
  }

  if (post.item_id.empty()) throw fail("empty item_id");
  if (post.duration_s < 0.0) throw fail("invalid duration_s for item " + post.item_id);

  const auto& label = rec.find("label");
  if (label == rec.end() || !label->is_number_integer() ||
      (label->get<int>() != 0 && label->get<int>() != 1)) {
    throw fail("invalid label for item " + post.item_id);
  }
  post.label = label->get<int>();

  if (rec.contains("baseline_score") && !rec.at("baseline_score").is_null()) {
    if (!rec.at("baseline_score").is_number()) {
      throw fail("invalid baseline_score for item " + post.item_id);
    }
    const double b = rec.at("baseline_score").get<double>();
    if (b < 0.0 || b > 1.0) {
      throw fail("baseline_score out of [0,1] for item " + post.item_id);
    }
    post.baseline_score = b;
  }
  return post;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, const std::string& schema) {
  if (schema != "v1") throw CorpusError("unknown dataset schema: " + schema);
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open dataset file: " + path.string());

  Dataset ds;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json rec;
    try {
      rec = ordered_json::parse(line);
    } catch (const ordered_json::exception&) {
      throw CorpusError("malformed line at line " + std::to_string(line_no));
    }
    VideoPost post = parse_record(rec, line_no);
    if (!seen_ids.insert(post.item_id).second) {
      throw CorpusError("duplicate item_id " + post.item_id + " at line " +
                        std::to_string(line_no));
    }
    ds.items.push_back(std::move(post));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ostringstream out;
  for (const VideoPost& p : ds.items) {
    ordered_json rec;
    rec["item_id"] = p.item_id;
    rec["asr"] = p.asr;
    rec["hashtag"] = p.hashtag;
    rec["text"] = p.text;
    rec["sticker_text"] = p.sticker_text;
    rec["frame_refs"] = p.frame_refs;
    rec["duration_s"] = p.duration_s;
    rec["label"] = p.label;
    if (p.baseline_score) rec["baseline_score"] = *p.baseline_score;
    out << rec.dump() << "\n";
  }
  write_file(path, out.str());
}

Dataset balance(const Dataset& ds, std::uint64_t seed) {
  const std::size_t pos = ds.count_label(1);
  const std::size_t neg = ds.count_label(0);
  if (pos == 0 || neg == 0) throw CorpusError("cannot balance single-class dataset");

  Dataset out;
  out.category_name = ds.category_name;
  out.seed = seed;
  if (pos == neg) {
    out.items = ds.items;
    return out;
  }

  const int majority = pos > neg ? 1 : 0;
  const std::size_t keep = std::min(pos, neg);

  std::vector<std::size_t> majority_idx;
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    if (ds.items[i].label == majority) majority_idx.push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(majority_idx);
  majority_idx.resize(keep);
  std::vector<bool> kept(ds.items.size(), false);
  for (std::size_t i : majority_idx) kept[i] = true;

  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    if (ds.items[i].label != majority || kept[i]) out.items.push_back(ds.items[i]);
  }
  return out;
}

std::vector<EncodedImage> resolve_frames(const std::vector<std::string>& frame_refs,
                                         const std::filesystem::path& store_root) {
  std::vector<std::string> missing;
  std::vector<EncodedImage> images;
  images.reserve(frame_refs.size());

  for (const std::string& ref : frame_refs) {
    const std::filesystem::path file = store_root / ref;
    const std::string ext = file_extension(file);
    std::string media_type;
    if (ext == "jpg" || ext == "jpeg") {
      media_type = "image/jpeg";
    } else if (ext == "png") {
      media_type = "image/png";
    } else {
      throw CorpusError("unsupported image type for frame ref: " + ref);
    }
    if (!std::filesystem::is_regular_file(file)) {
      missing.push_back(ref);
      continue;
    }
    const std::string bytes = read_file(file);
    images.push_back(
        {media_type, base64_encode({reinterpret_cast<const unsigned char*>(bytes.data()),
                                    bytes.size()})});
  }

  if (!missing.empty()) {
    std::string msg = "missing frame files:";
    for (const std::string& m : missing) msg += " " + m;
    throw CorpusError(msg);
  }
  return images;
}

}  // namespace fqc
