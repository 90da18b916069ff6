#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fqc {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One labeled video post. Immutable after load; safe to share across
/// pipeline workers.
struct VideoPost {
  std::string item_id;
  std::string asr;           // audio transcription, may be empty
  std::string hashtag;
  std::string text;
  std::string sticker_text;
  std::vector<std::string> frame_refs;  // temporal order
  double duration_s = 0.0;
  int label = 0;  // 1 = positive case for the category at hand
  std::optional<double> baseline_score;  // normalized [0,1] production score

  bool operator==(const VideoPost&) const = default;
};

struct Dataset {
  std::string category_name;
  std::vector<VideoPost> items;
  std::uint64_t seed = 0;  // balancing RNG seed, 0 until balanced

  std::size_t count_label(int label) const;
  bool balanced() const { return count_label(0) == count_label(1); }
};

/// Parses a line-delimited record file. Records are validated but not
/// balanced; frame_refs are not checked against the store.
Dataset load_dataset(const std::filesystem::path& path, const std::string& schema = "v1");

/// Writes one record per line in canonical key order.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

/// Downsamples the majority class without replacement using the seeded RNG.
/// Original item order is preserved; the minority class is untouched.
/// An already balanced dataset passes through unchanged, so the operation
/// is idempotent for a fixed seed.
Dataset balance(const Dataset& ds, std::uint64_t seed);

struct EncodedImage {
  std::string media_type;  // "image/jpeg" or "image/png"
  std::string base64;

  std::string data_url() const { return "data:" + media_type + ";base64," + base64; }

  bool operator==(const EncodedImage&) const = default;
};

/// Reads the given frame files under the store root and base64-encodes them,
/// preserving frame order. Throws CorpusError naming every missing ref.
std::vector<EncodedImage> resolve_frames(const std::vector<std::string>& frame_refs,
                                         const std::filesystem::path& store_root);

inline std::vector<EncodedImage> resolve_frames(const VideoPost& post,
                                                const std::filesystem::path& store_root) {
  return resolve_frames(post.frame_refs, store_root);
}

}  // namespace fqc
