#include "fqc/frame_sampler.hpp"

#include <cmath>

namespace fqc {

void SamplingPolicy::validate() const {
  if (fps <= 0.0) throw SamplingError("sampling fps must be positive");
  if (max_frames < 1) throw SamplingError("max_frames must be positive");
  if (include_endpoints && max_frames < 2) {
    throw SamplingError("max_frames must be >= 2 when endpoints are included");
  }
}

namespace {

// round(k*(n-1)/(m-1)) for k = 0..m-1; hits 0 and n-1 exactly. Duplicates
// collapse, so the result has at most m entries.
std::vector<std::size_t> uniform_indices(std::size_t n, std::size_t m) {
  std::vector<std::size_t> out;
  if (n == 0 || m == 0) return out;
  if (m == 1) return {0};
  out.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double x = static_cast<double>(k) * static_cast<double>(n - 1) /
                     static_cast<double>(m - 1);
    const auto idx = static_cast<std::size_t>(std::llround(x));
    if (out.empty() || idx != out.back()) out.push_back(idx);
  }
  return out;
}

}  // namespace

std::vector<double> sample_timestamps(double duration_s, const SamplingPolicy& policy) {
  policy.validate();
  if (duration_s < 0.0) throw SamplingError("negative duration");

  // Small slack so durations landing exactly on a grid point are not lost
  // to floating-point rounding.
  const auto last_i = static_cast<long long>(std::floor(duration_s * policy.fps + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(last_i) + 2);
  for (long long i = 0; i <= last_i; ++i) {
    grid.push_back(static_cast<double>(i) / policy.fps);
  }
  if (policy.include_endpoints && duration_s > grid.back() + 1e-9) {
    grid.push_back(duration_s);
  }

  if (grid.size() <= static_cast<std::size_t>(policy.max_frames)) return grid;

  const auto idx = uniform_indices(grid.size(), static_cast<std::size_t>(policy.max_frames));
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(grid[i]);
  return out;
}

std::vector<std::string> select_frames(const VideoPost& post, const SamplingPolicy& policy) {
  policy.validate();
  const auto& refs = post.frame_refs;
  if (refs.size() <= static_cast<std::size_t>(policy.max_frames)) return refs;

  const auto idx = uniform_indices(refs.size(), static_cast<std::size_t>(policy.max_frames));
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(refs[i]);
  return out;
}

}  // namespace fqc
