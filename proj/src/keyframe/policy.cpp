#include "quadvio/keyframe/policy.hpp"

#include <algorithm>
#include <cmath>

namespace quadvio {

std::vector<std::pair<int, Vec2>> snapshot_from_observation(
    const FeatureObservation& obs) {
  std::vector<std::pair<int, Vec2>> snap;
  snap.reserve(obs.points.size());
  for (const FeaturePoint& p : obs.points) {
    snap.emplace_back(p.id, Vec2(p.u, p.v));
  }
  std::sort(snap.begin(), snap.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return snap;
}

std::vector<CorrespondencePair> build_correspondences(
    const std::vector<std::pair<int, Vec2>>& keyframe_snapshot,
    const FeatureObservation& current) {
  std::vector<CorrespondencePair> pairs;
  if (keyframe_snapshot.empty() || current.points.empty()) {
    return pairs;
  }
  auto current_sorted = snapshot_from_observation(current);

  auto ki = keyframe_snapshot.begin();
  auto ci = current_sorted.begin();
  while (ki != keyframe_snapshot.end() && ci != current_sorted.end()) {
    if (ki->first < ci->first) {
      ++ki;
    } else if (ci->first < ki->first) {
      ++ci;
    } else {
      CorrespondencePair pair;
      pair.id = ki->first;
      pair.keyframe_px = PixelHomogeneous(ki->second.x(), ki->second.y());
      pair.current_px = PixelHomogeneous(ci->second.x(), ci->second.y());
      pairs.push_back(pair);
      ++ki;
      ++ci;
    }
  }
  return pairs;
}

DisparityReport mean_disparity(const std::vector<CorrespondencePair>& pairs) {
  DisparityReport report;
  report.pair_count = static_cast<int>(pairs.size());
  if (pairs.empty()) {
    report.degenerate = true;
    return report;
  }
  double sum = 0.0;
  for (const CorrespondencePair& p : pairs) {
    sum += std::hypot(p.current_px.u - p.keyframe_px.u,
                      p.current_px.v - p.keyframe_px.v);
  }
  report.mean_px = sum / report.pair_count;
  return report;
}

bool should_create_keyframe(const DisparityReport& report,
                            const KeyframePolicyConfig& cfg) {
  if (report.pair_count < cfg.min_pairs) {
    return true;  // tracking starved; re-seed the snapshot
  }
  return report.mean_px >= cfg.disparity_threshold_px;
}

}  // namespace quadvio
