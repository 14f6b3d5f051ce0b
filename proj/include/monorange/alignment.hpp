#pragma once

// Per-frame assignment of ground-truth boxes to detector outputs. The
// affinity is intersection area minus symmetric-difference area,
//
//   score(a, b) = I - (A + B - 2I) = 3I - A - B      (pixels^2, signed)
//
// maximized exactly by a perfect overlap, where it equals the common area.
// Assignment is greedy in descending score with deterministic tie-breaking;
// pairs must clear a floor to count as matched.

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "monorange/geometry.hpp"

namespace monorange::alignment {

struct MatchScore {
  double value = 0.0;  // pixels^2, signed
};

inline MatchScore match_score(const Box2D& pred, const Box2D& gt) {
  const double inter = intersection_area(pred, gt);
  return {3.0 * inter - pred.area() - gt.area()};
}

struct BoxRef {
  std::int64_t id = 0;
  Box2D box;
};

struct MatchPair {
  std::size_t pred_index = 0;
  std::size_t gt_index = 0;
  double score = 0.0;
};

/// Greedy one-to-one assignment. Candidates sort by score descending; ties
/// break on lower pred id, then lower gt id. Scores <= score_floor never
/// match.
inline std::vector<MatchPair> assign(std::span<const BoxRef> preds, std::span<const BoxRef> gts,
                                     double score_floor = 0.0) {
  struct Candidate {
    double score;
    std::size_t pred, gt;
    std::int64_t pred_id, gt_id;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(preds.size() * gts.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double s = match_score(preds[i].box, gts[j].box).value;
      if (s > score_floor) candidates.push_back({s, i, j, preds[i].id, gts[j].id});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.pred_id != b.pred_id) return a.pred_id < b.pred_id;
    if (a.gt_id != b.gt_id) return a.gt_id < b.gt_id;
    return a.pred < b.pred || (a.pred == b.pred && a.gt < b.gt);
  });

  std::vector<MatchPair> out;
  std::vector<bool> pred_used(preds.size(), false), gt_used(gts.size(), false);
  for (const auto& c : candidates) {
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = true;
    gt_used[c.gt] = true;
    out.push_back({c.pred, c.gt, c.score});
  }
  return out;
}

}  // namespace monorange::alignment
