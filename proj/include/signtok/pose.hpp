#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace signtok {

// Joint layout shared by every sequence in a corpus. The edge list must form
// a connected acyclic graph over the joints.
struct Skeleton {
  std::vector<std::string> joint_names;
  std::vector<std::pair<int, int>> edges;  // (parent, child) indices
  // Indices consumed by normalization.
  int root = 0;
  int left_shoulder = 0;
  int right_shoulder = 0;

  std::size_t joint_count() const { return joint_names.size(); }

  // Throws ContractError when an invariant is broken.
  void validate() const;
};

// Default 9-joint upper-body layout: root, neck, shoulders, elbows, wrists,
// head. Shoulders sit one unit apart so that generated poses are already in
// normalized scale.
Skeleton default_skeleton();

struct PoseFrame {
  std::vector<std::array<double, 2>> coords;  // (x, y) per joint
  std::vector<double> confidence;             // [0, 1] per joint

  std::size_t joint_count() const { return coords.size(); }
};

struct PoseSequence {
  std::string id;
  double fps = 0.0;
  std::vector<PoseFrame> frames;

  std::size_t joint_count() const { return frames.empty() ? 0 : frames[0].joint_count(); }
};

// Root-centering plus unit shoulder-width scaling, applied per frame.
// A frame with zero shoulder distance reuses the previous frame's scale
// (1 on the first frame). Total on valid sequences; idempotent.
PoseSequence normalize_sequence(const PoseSequence& seq, const Skeleton& skeleton);

// Wire format: one JSON record per line with fields `id` (string), `fps`
// (number) and `joints` (array over frames of array over joints of
// [x, y, confidence]).
std::vector<PoseSequence> load_pose_jsonl(const std::string& path);
void save_pose_jsonl(const std::string& path, const std::vector<PoseSequence>& seqs);

// Split name -> ordered record ids.
using SplitMap = std::map<std::string, std::vector<std::string>>;

void save_manifest(const std::string& path, const SplitMap& splits,
                   const std::map<std::string, std::string>& extra);
SplitMap load_manifest(const std::string& path,
                       std::map<std::string, std::string>* extra = nullptr);

// One raster image (binary PPM) per frame, named frame_NNNN.ppm. Returns the
// number of frames written.
std::size_t render_sequence(const PoseSequence& seq, const Skeleton& skeleton,
                            const std::string& out_dir);

}  // namespace signtok
