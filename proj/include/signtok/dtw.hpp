#pragma once

#include <utility>
#include <vector>

#include "signtok/pose.hpp"

namespace signtok {

// Monotone warping path from (0,0) to (n-1,m-1) with steps {(1,0),(0,1),(1,1)}.
struct AlignmentPath {
  std::vector<std::pair<int, int>> pairs;
};

// Mean over joints of the Euclidean distance between matching joints.
double frame_cost(const PoseFrame& a, const PoseFrame& b);

// Classic dynamic-time-warping alignment minimizing the summed frame cost.
// Ties are broken preferring the diagonal step, then (1,0).
std::pair<AlignmentPath, double> dtw_align(const PoseSequence& a, const PoseSequence& b);

// Mean per-joint Euclidean error over the optimal path's aligned frame pairs.
double dtw_mje(const PoseSequence& a, const PoseSequence& b);

}  // namespace signtok
