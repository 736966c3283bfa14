#include "signtok/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "signtok/errors.hpp"

namespace signtok {

double frame_cost(const PoseFrame& a, const PoseFrame& b) {
  if (a.joint_count() != b.joint_count() || a.joint_count() == 0) {
    throw ContractError("frame_cost: joint count mismatch");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < a.joint_count(); ++j) {
    sum += std::hypot(a.coords[j][0] - b.coords[j][0], a.coords[j][1] - b.coords[j][1]);
  }
  return sum / static_cast<double>(a.joint_count());
}

std::pair<AlignmentPath, double> dtw_align(const PoseSequence& a, const PoseSequence& b) {
  const std::size_t n = a.frames.size();
  const std::size_t m = b.frames.size();
  if (n == 0 || m == 0) {
    throw ContractError("dtw_align: empty sequence");
  }
  if (a.joint_count() != b.joint_count()) {
    throw ContractError("dtw_align: skeleton mismatch");
  }

  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      cost[i * m + j] = frame_cost(a.frames[i], b.frames[j]);
    }
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> acc(n * m);
  // predecessor step: 0 = diagonal, 1 = (1,0) from (i-1,j), 2 = (0,1) from (i,j-1)
  std::vector<unsigned char> from(n * m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = cost[i * m + j];
      if (i == 0 && j == 0) {
        acc[0] = c;
        continue;
      }
      const double diag = (i > 0 && j > 0) ? acc[(i - 1) * m + (j - 1)] : kInf;
      const double up = i > 0 ? acc[(i - 1) * m + j] : kInf;
      const double left = j > 0 ? acc[i * m + (j - 1)] : kInf;
      double best = diag;
      unsigned char step = 0;
      if (up < best) {
        best = up;
        step = 1;
      }
      if (left < best) {
        best = left;
        step = 2;
      }
      acc[i * m + j] = best + c;
      from[i * m + j] = step;
    }
  }

  AlignmentPath path;
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  while (true) {
    path.pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    if (i == 0 && j == 0) {
      break;
    }
    switch (from[i * m + j]) {
      case 0:
        --i;
        --j;
        break;
      case 1:
        --i;
        break;
      default:
        --j;
        break;
    }
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  return {std::move(path), acc[(n - 1) * m + (m - 1)]};
}

double dtw_mje(const PoseSequence& a, const PoseSequence& b) {
  const auto [path, total] = dtw_align(a, b);
  return total / static_cast<double>(path.pairs.size());
}

}  // namespace signtok
