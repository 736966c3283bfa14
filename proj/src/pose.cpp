#include "signtok/pose.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "signtok/errors.hpp"

namespace signtok {

void Skeleton::validate() const {
  const std::size_t j = joint_names.size();
  if (j < 2) {
    throw ContractError("skeleton needs at least 2 joints");
  }
  if (edges.size() + 1 != j) {
    throw ContractError("skeleton edge list must form a tree (J-1 edges)");
  }
  std::vector<int> comp(j);
  for (std::size_t i = 0; i < j; ++i) {
    comp[i] = static_cast<int>(i);
  }
  // union-find over edges; a cycle would merge an already-joined pair
  auto find = [&](int x) {
    while (comp[x] != x) {
      comp[x] = comp[comp[x]];
      x = comp[x];
    }
    return x;
  };
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= static_cast<int>(j) || b >= static_cast<int>(j)) {
      throw ContractError("skeleton edge index out of range");
    }
    const int ra = find(a);
    const int rb = find(b);
    if (ra == rb) {
      throw ContractError("skeleton edges contain a cycle");
    }
    comp[ra] = rb;
  }
  const int r0 = find(0);
  for (std::size_t i = 1; i < j; ++i) {
    if (find(static_cast<int>(i)) != r0) {
      throw ContractError("skeleton edges do not connect all joints");
    }
  }
  if (root < 0 || root >= static_cast<int>(j) || left_shoulder < 0 ||
      left_shoulder >= static_cast<int>(j) || right_shoulder < 0 ||
      right_shoulder >= static_cast<int>(j)) {
    throw ContractError("skeleton reference joints out of range");
  }
}

Skeleton default_skeleton() {
  Skeleton s;
  s.joint_names = {"root",    "neck",    "l_shoulder", "r_shoulder", "l_elbow",
                   "r_elbow", "l_wrist", "r_wrist",    "head"};
  s.edges = {{0, 1}, {1, 2}, {1, 3}, {2, 4}, {3, 5}, {4, 6}, {5, 7}, {1, 8}};
  s.root = 0;
  s.left_shoulder = 2;
  s.right_shoulder = 3;
  return s;
}

PoseSequence normalize_sequence(const PoseSequence& seq, const Skeleton& skeleton) {
  if (seq.frames.empty()) {
    throw ContractError("normalize_sequence: empty sequence");
  }
  PoseSequence out = seq;
  double prev_scale = 1.0;
  for (auto& frame : out.frames) {
    const auto root = frame.coords[static_cast<std::size_t>(skeleton.root)];
    const auto ls = frame.coords[static_cast<std::size_t>(skeleton.left_shoulder)];
    const auto rs = frame.coords[static_cast<std::size_t>(skeleton.right_shoulder)];
    const double shoulder =
        std::hypot(ls[0] - rs[0], ls[1] - rs[1]);
    const double scale = shoulder > 1e-12 ? 1.0 / shoulder : prev_scale;
    prev_scale = scale;
    for (auto& c : frame.coords) {
      c[0] = (c[0] - root[0]) * scale;
      c[1] = (c[1] - root[1]) * scale;
    }
  }
  return out;
}

namespace {

using nlohmann::json;

PoseSequence sequence_from_json(const json& rec, std::size_t line_no) {
  if (!rec.is_object() || !rec.contains("id") || !rec.contains("fps") ||
      !rec.contains("joints")) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": record must carry id, fps and joints");
  }
  PoseSequence seq;
  seq.id = rec.at("id").get<std::string>();
  seq.fps = rec.at("fps").get<double>();
  if (!(seq.fps > 0.0)) {
    throw FormatError("line " + std::to_string(line_no) + ": fps must be positive");
  }
  const json& frames = rec.at("joints");
  if (!frames.is_array() || frames.empty()) {
    throw FormatError("line " + std::to_string(line_no) +
                      ": joints must be a non-empty array");
  }
  std::size_t joint_count = 0;
  for (const json& fj : frames) {
    PoseFrame frame;
    if (!fj.is_array() || fj.empty()) {
      throw FormatError("line " + std::to_string(line_no) + ": empty frame");
    }
    for (const json& jj : fj) {
      if (!jj.is_array() || jj.size() != 3) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": joint entry must be [x, y, confidence]");
      }
      const double x = jj[0].get<double>();
      const double y = jj[1].get<double>();
      const double c = jj[2].get<double>();
      if (!std::isfinite(x) || !std::isfinite(y)) {
        throw FormatError("line " + std::to_string(line_no) + ": non-finite coordinate");
      }
      if (!(c >= 0.0 && c <= 1.0)) {
        throw FormatError("line " + std::to_string(line_no) +
                          ": confidence outside [0,1]");
      }
      frame.coords.push_back({x, y});
      frame.confidence.push_back(c);
    }
    if (joint_count == 0) {
      joint_count = frame.joint_count();
    } else if (frame.joint_count() != joint_count) {
      throw FormatError("line " + std::to_string(line_no) +
                        ": inconsistent joint count across frames");
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace

std::vector<PoseSequence> load_pose_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open pose file: " + path);
  }
  std::vector<PoseSequence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(sequence_from_json(rec, line_no));
  }
  return out;
}

void save_pose_jsonl(const std::string& path, const std::vector<PoseSequence>& seqs) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write pose file: " + path);
  }
  for (const PoseSequence& seq : seqs) {
    json frames = json::array();
    for (const PoseFrame& frame : seq.frames) {
      json fj = json::array();
      for (std::size_t j = 0; j < frame.joint_count(); ++j) {
        fj.push_back({frame.coords[j][0], frame.coords[j][1], frame.confidence[j]});
      }
      frames.push_back(std::move(fj));
    }
    json rec;
    rec["id"] = seq.id;
    rec["fps"] = seq.fps;
    rec["joints"] = std::move(frames);
    out << rec.dump() << '\n';
  }
  if (!out) {
    throw IoError("write failed: " + path);
  }
}

void save_manifest(const std::string& path, const SplitMap& splits,
                   const std::map<std::string, std::string>& extra) {
  json j;
  j["format_version"] = 1;
  j["splits"] = splits;
  for (const auto& [k, v] : extra) {
    j[k] = v;
  }
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write manifest: " + path);
  }
  out << j.dump(2) << '\n';
}

SplitMap load_manifest(const std::string& path, std::map<std::string, std::string>* extra) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open manifest: " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  SplitMap splits = j.at("splits").get<SplitMap>();
  if (extra != nullptr) {
    for (const auto& [k, v] : j.items()) {
      if (k != "splits" && k != "format_version" && v.is_string()) {
        (*extra)[k] = v.get<std::string>();
      }
    }
  }
  return splits;
}

}  // namespace signtok
