#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "fqc/corpus.hpp"

namespace fqc {

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SamplingPolicy {
  double fps = 0.5;          // sampling rate over the video timeline
  int max_frames = 30;       // hard cap regardless of duration
  bool include_endpoints = true;  // always keep first and last frames

  void validate() const;
};

/// Timestamps (seconds) on the grid i/fps up to the duration, with the final
/// endpoint appended when include_endpoints is set. When the grid exceeds
/// max_frames, indices are uniformly subsampled via round(k*(n-1)/(m-1)),
/// which keeps both endpoints. Output is strictly increasing.
std::vector<double> sample_timestamps(double duration_s, const SamplingPolicy& policy);

/// Picks at most max_frames refs from a pre-extracted frame sequence using
/// the same uniform index subsampling. First and last refs are always kept
/// when the input is nonempty.
std::vector<std::string> select_frames(const VideoPost& post, const SamplingPolicy& policy);

}  // namespace fqc
