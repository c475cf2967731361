#pragma once

#include <utility>
#include <vector>

#include "quadvio/measurements.hpp"

namespace quadvio {

/// Feature disparity between the key-frame image and the current image.
struct DisparityReport {
  double mean_px = 0.0;  // f_d: mean Euclidean pixel displacement
  int pair_count = 0;    // n_f
  bool degenerate = false;  // no correspondences at all
};

struct KeyframePolicyConfig {
  double disparity_threshold_px = 40.0;
  int min_pairs = 8;
};

/// Match a feature snapshot (sorted by id) against the current observation.
std::vector<CorrespondencePair> build_correspondences(
    const std::vector<std::pair<int, Vec2>>& keyframe_snapshot,
    const FeatureObservation& current);

/// Snapshot form of an observation, sorted by id, for anchor storage.
std::vector<std::pair<int, Vec2>> snapshot_from_observation(
    const FeatureObservation& obs);

DisparityReport mean_disparity(const std::vector<CorrespondencePair>& pairs);

/// A new key-frame is created when enough pairs moved far enough, or when
/// tracking starved and the snapshot has to be re-seeded.
bool should_create_keyframe(const DisparityReport& report,
                            const KeyframePolicyConfig& cfg);

}  // namespace quadvio
