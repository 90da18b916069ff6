#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fqc {

// Deterministic RNG used everywhere reproducibility matters (dataset
// balancing, train/eval splits, mock providers). splitmix64 keeps the
// stream identical across platforms and standard libraries, which the
// standard distributions do not guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n), rejection-sampled so the result is unbiased.
  std::uint64_t next_below(std::uint64_t n);

  // Uniform integer in [lo, hi], inclusive.
  int next_int(int lo, int hi);

  template <class T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

std::uint64_t fnv1a64(std::string_view s);

// Stable per-item seed: mixes a run-level seed with an item key so results
// do not depend on request order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

std::string base64_encode(std::span<const unsigned char> bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// "Shocking and Graphic Content" -> "shocking_and_graphic_content"
std::string slugify(std::string_view name);

std::string iso8601_utc_now();

// Lowercase file extension without the dot ("JPG" -> "jpg").
std::string file_extension(const std::filesystem::path& path);

}  // namespace fqc
