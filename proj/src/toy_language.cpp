#include "signtok/toy_language.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "signtok/errors.hpp"
#include "signtok/rng.hpp"

namespace signtok {

void AssistanceRecord::validate() const {
  if (words.size() != durations.size()) {
    throw ContractError("assistance words/durations length mismatch");
  }
  if (!durations.empty()) {
    int mn = durations[0];
    for (int d : durations) {
      if (d < 1) {
        throw ContractError("assistance duration below 1");
      }
      mn = std::min(mn, d);
    }
    if (mn != 1) {
      throw ContractError("assistance durations must have minimum 1");
    }
  }
}

std::string canonical_assistance(const AssistanceRecord& rec) {
  std::string out;
  for (std::size_t i = 0; i < rec.words.size(); ++i) {
    if (i > 0) {
      out += ' ';
    }
    out += rec.words[i];
    out += ':';
    out += std::to_string(rec.durations[i]);
  }
  return out;
}

std::vector<int> rescale_durations_to_unit(const std::vector<int>& durations) {
  if (durations.empty()) {
    return {};
  }
  const int mn = *std::min_element(durations.begin(), durations.end());
  if (mn <= 0) {
    throw ContractError("durations must be positive");
  }
  std::vector<int> out;
  out.reserve(durations.size());
  for (int d : durations) {
    const auto scaled = static_cast<int>(
        std::llround(static_cast<double>(d) / static_cast<double>(mn)));
    out.push_back(std::max(1, scaled));
  }
  return out;
}

std::size_t ToySignSpec::unit_frames() const {
  std::size_t mn = 0;
  for (const auto& [word, prim] : lexicon) {
    (void)word;
    if (mn == 0 || prim.frames.size() < mn) {
      mn = prim.frames.size();
    }
  }
  return mn;
}

void ToySignSpec::validate() const {
  skeleton.validate();
  if (lexicon.empty()) {
    throw ContractError("toy spec: empty lexicon");
  }
  bool has_unit = false;
  for (const auto& [word, prim] : lexicon) {
    if (prim.frames.empty()) {
      throw ContractError("toy spec: primitive with no frames: " + word);
    }
    if (prim.duration_units < 1) {
      throw ContractError("toy spec: duration_units below 1: " + word);
    }
    has_unit = has_unit || prim.duration_units == 1;
    if (word_category.find(word) == word_category.end()) {
      throw ContractError("toy spec: word without category: " + word);
    }
  }
  if (!has_unit) {
    throw ContractError("toy spec: no unit-duration lexicon entry");
  }
  if (!(fps > 0.0)) {
    throw ContractError("toy spec: fps must be positive");
  }
}

namespace {

// Centripetal-free Catmull-Rom through control points, clamped ends.
std::vector<std::array<double, 2>> catmull_rom(
    const std::vector<std::array<double, 2>>& ctrl, std::size_t samples) {
  std::vector<std::array<double, 2>> out;
  out.reserve(samples);
  const std::size_t segs = ctrl.size() - 1;
  for (std::size_t s = 0; s < samples; ++s) {
    const double u = samples == 1 ? 0.0
                                  : static_cast<double>(s) /
                                        static_cast<double>(samples - 1) *
                                        static_cast<double>(segs);
    std::size_t seg = std::min(static_cast<std::size_t>(u), segs - 1);
    const double t = u - static_cast<double>(seg);
    auto at = [&](std::ptrdiff_t i) {
      const std::ptrdiff_t c =
          std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(ctrl.size()) - 1);
      return ctrl[static_cast<std::size_t>(c)];
    };
    const auto p0 = at(static_cast<std::ptrdiff_t>(seg) - 1);
    const auto p1 = at(static_cast<std::ptrdiff_t>(seg));
    const auto p2 = at(static_cast<std::ptrdiff_t>(seg) + 1);
    const auto p3 = at(static_cast<std::ptrdiff_t>(seg) + 2);
    std::array<double, 2> p{};
    for (int d = 0; d < 2; ++d) {
      const double a = p1[d];
      const double b = 0.5 * (p2[d] - p0[d]);
      const double c = p0[d] - 2.5 * p1[d] + 2.0 * p2[d] - 0.5 * p3[d];
      const double e = -0.5 * p0[d] + 1.5 * p1[d] - 1.5 * p2[d] + 0.5 * p3[d];
      p[d] = a + t * (b + t * (c + t * e));
    }
    out.push_back(p);
  }
  return out;
}

// Static torso of the default skeleton, already root-centered with unit
// shoulder width.
constexpr double kNeckY = 0.9;
constexpr double kHeadY = 1.18;

MotionPrimitive make_primitive(const std::string& word, std::size_t length) {
  Rng rng(fnv1a64("primitive/" + word));
  // Per-word home regions keep each word's frames in a compact, distinctive
  // patch of pose space.
  const double lcx = rng.uniform(-1.05, 0.05);
  const double lcy = rng.uniform(0.35, 1.25);
  const double rcx = rng.uniform(-0.05, 1.05);
  const double rcy = rng.uniform(0.35, 1.25);
  const std::size_t n_ctrl = 3 + rng.below(3);
  std::vector<std::array<double, 2>> lw_ctrl, rw_ctrl;
  for (std::size_t i = 0; i < n_ctrl; ++i) {
    lw_ctrl.push_back({lcx + rng.uniform(-0.3, 0.3), lcy + rng.uniform(-0.3, 0.3)});
    rw_ctrl.push_back({rcx + rng.uniform(-0.3, 0.3), rcy + rng.uniform(-0.3, 0.3)});
  }
  const auto lw = catmull_rom(lw_ctrl, length);
  const auto rw = catmull_rom(rw_ctrl, length);

  MotionPrimitive prim;
  for (std::size_t f = 0; f < length; ++f) {
    PoseFrame frame;
    frame.coords.resize(9);
    frame.confidence.assign(9, 1.0);
    frame.coords[0] = {0.0, 0.0};          // root
    frame.coords[1] = {0.0, kNeckY};       // neck
    frame.coords[2] = {-0.5, kNeckY};      // l_shoulder
    frame.coords[3] = {0.5, kNeckY};       // r_shoulder
    frame.coords[6] = lw[f];               // l_wrist
    frame.coords[7] = rw[f];               // r_wrist
    frame.coords[8] = {0.0, kHeadY};       // head
    // Elbows trail the wrists, pushed slightly outward.
    for (int side = 0; side < 2; ++side) {
      const auto& sh = frame.coords[side == 0 ? 2 : 3];
      const auto& wr = frame.coords[side == 0 ? 6 : 7];
      const double out_sign = side == 0 ? -1.0 : 1.0;
      frame.coords[side == 0 ? 4 : 5] = {
          sh[0] + 0.55 * (wr[0] - sh[0]) + 0.12 * out_sign,
          sh[1] + 0.55 * (wr[1] - sh[1]) - 0.08};
    }
    prim.frames.push_back(std::move(frame));
  }
  return prim;
}

struct LexiconEntry {
  const char* word;
  const char* category;
  std::size_t min_len, max_len;
};

constexpr LexiconEntry kDefaultLexicon[] = {
    {"yesterday", "time", 10, 16}, {"today", "time", 10, 16},
    {"tomorrow", "time", 10, 16},  {"morning", "time", 10, 14},
    {"evening", "time", 10, 14},   {"i", "subject", 4, 4},
    {"you", "subject", 4, 6},      {"we", "subject", 4, 6},
    {"he", "subject", 4, 6},       {"she", "subject", 4, 6},
    {"they", "subject", 5, 7},     {"eat", "verb", 6, 10},
    {"drink", "verb", 6, 10},      {"see", "verb", 6, 9},
    {"want", "verb", 6, 10},       {"make", "verb", 7, 11},
    {"like", "verb", 6, 9},        {"go", "verb", 6, 8},
    {"read", "verb", 7, 10},       {"cake", "object", 8, 13},
    {"bread", "object", 8, 13},    {"water", "object", 8, 12},
    {"coffee", "object", 8, 13},   {"book", "object", 8, 12},
    {"house", "object", 9, 13},    {"dog", "object", 8, 12},
    {"fish", "object", 8, 12},
};

}  // namespace

ToySignSpec default_toy_spec() {
  ToySignSpec spec;
  spec.skeleton = default_skeleton();
  spec.fps = 12.0;
  spec.category_order = {"time", "object", "subject", "verb"};
  spec.stopwords = {"a", "the", "to", "is", "will"};
  spec.sentence_patterns = {
      {"subject", "verb", "object"},
      {"subject", "verb", "STOP?", "object"},
      {"time", "subject", "verb", "STOP?", "object"},
      {"subject", "verb", "STOP?", "object", "time"},
      {"subject", "verb", "object", "time"},
      {"time", "subject", "verb", "object"},
      {"subject", "STOP?", "verb", "object"},
      {"time", "subject", "verb"},
  };
  spec.stopword_rate = 0.6;  // rate per optional slot, not per word

  std::size_t min_len = 0;
  for (const LexiconEntry& e : kDefaultLexicon) {
    Rng rng(fnv1a64(std::string("length/") + e.word));
    const std::size_t len = e.min_len + rng.below(e.max_len - e.min_len + 1);
    MotionPrimitive prim = make_primitive(e.word, len);
    spec.lexicon.emplace(e.word, std::move(prim));
    spec.word_category[e.word] = e.category;
    if (min_len == 0 || len < min_len) {
      min_len = len;
    }
  }
  for (auto& [word, prim] : spec.lexicon) {
    (void)word;
    prim.duration_units = std::max(
        1, static_cast<int>(std::llround(static_cast<double>(prim.frames.size()) /
                                         static_cast<double>(min_len))));
  }
  spec.validate();
  return spec;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    words.push_back(w);
  }
  return words;
}

std::vector<std::string> sign_order_words(const std::string& text, const ToySignSpec& spec) {
  std::vector<std::string> content;
  for (const std::string& w : split_words(text)) {
    if (spec.stopwords.count(w) > 0) {
      continue;
    }
    if (spec.lexicon.find(w) == spec.lexicon.end()) {
      throw VocabError("word not in lexicon: " + w);
    }
    content.push_back(w);
  }
  auto priority = [&](const std::string& w) {
    const auto it = spec.word_category.find(w);
    if (it == spec.word_category.end()) {
      return spec.category_order.size();
    }
    const auto pos = std::find(spec.category_order.begin(), spec.category_order.end(),
                               it->second);
    return static_cast<std::size_t>(pos - spec.category_order.begin());
  };
  std::stable_sort(content.begin(), content.end(),
                   [&](const std::string& a, const std::string& b) {
                     return priority(a) < priority(b);
                   });
  return content;
}

AssistanceRecord toy_assistance(const std::string& text, const ToySignSpec& spec) {
  AssistanceRecord rec;
  rec.words = sign_order_words(text, spec);
  std::vector<int> units;
  units.reserve(rec.words.size());
  for (const std::string& w : rec.words) {
    units.push_back(spec.lexicon.at(w).duration_units);
  }
  rec.durations = rescale_durations_to_unit(units);
  rec.validate();
  return rec;
}

std::pair<std::vector<DatasetItem>, ToyDatasetManifest> generate_toy_dataset(
    const ToySignSpec& spec, std::size_t n_sentences, std::uint64_t seed,
    const std::string& id_prefix) {
  spec.validate();
  if (n_sentences < 1) {
    throw ContractError("generate_toy_dataset: n_sentences must be >= 1");
  }
  // words per category, in lexicon (map) order: deterministic
  std::map<std::string, std::vector<std::string>> by_category;
  for (const auto& [word, cat] : spec.word_category) {
    by_category[cat].push_back(word);
  }
  std::vector<std::string> stopwords(spec.stopwords.begin(), spec.stopwords.end());

  Rng rng(seed);
  std::vector<DatasetItem> items;
  items.reserve(n_sentences);
  ToyDatasetManifest manifest;
  manifest.seed = seed;
  manifest.spec_fingerprint = toy_spec_fingerprint(spec);

  for (std::size_t i = 0; i < n_sentences; ++i) {
    const auto& pattern = spec.sentence_patterns[static_cast<std::size_t>(
        rng.below(spec.sentence_patterns.size()))];
    std::vector<std::string> words;
    for (const std::string& slot : pattern) {
      if (slot == "STOP?") {
        if (!stopwords.empty() && rng.uniform() < spec.stopword_rate) {
          words.push_back(rng.pick(stopwords));
        }
        continue;
      }
      const auto it = by_category.find(slot);
      if (it == by_category.end() || it->second.empty()) {
        throw ContractError("sentence pattern uses unknown category: " + slot);
      }
      words.push_back(rng.pick(it->second));
    }
    std::string text;
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (w > 0) {
        text += ' ';
      }
      text += words[w];
    }

    DatasetItem item;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "%s_%05zu", id_prefix.c_str(), i);
    item.id = idbuf;
    item.text = text;
    item.assistance = toy_assistance(text, spec);
    item.pose.id = item.id;
    item.pose.fps = spec.fps;
    for (const std::string& w : sign_order_words(text, spec)) {
      const MotionPrimitive& prim = spec.lexicon.at(w);
      item.pose.frames.insert(item.pose.frames.end(), prim.frames.begin(),
                              prim.frames.end());
    }
    if (item.pose.frames.empty()) {
      // all-stopword sentences cannot happen with the default patterns, but a
      // custom spec could produce one; PoseSequence requires >= 1 frame
      throw ContractError("generated sentence has no content words: " + text);
    }
    manifest.ids.push_back(item.id);
    items.push_back(std::move(item));
  }
  return {std::move(items), std::move(manifest)};
}

namespace {

using nlohmann::json;

json skeleton_to_json(const Skeleton& s) {
  json j;
  j["joint_names"] = s.joint_names;
  j["edges"] = s.edges;
  j["root"] = s.root;
  j["left_shoulder"] = s.left_shoulder;
  j["right_shoulder"] = s.right_shoulder;
  return j;
}

Skeleton skeleton_from_json(const json& j) {
  Skeleton s;
  s.joint_names = j.at("joint_names").get<std::vector<std::string>>();
  s.edges = j.at("edges").get<std::vector<std::pair<int, int>>>();
  s.root = j.at("root").get<int>();
  s.left_shoulder = j.at("left_shoulder").get<int>();
  s.right_shoulder = j.at("right_shoulder").get<int>();
  return s;
}

json spec_to_json(const ToySignSpec& spec) {
  json j;
  j["format_version"] = 1;
  j["skeleton"] = skeleton_to_json(spec.skeleton);
  j["fps"] = spec.fps;
  j["category_order"] = spec.category_order;
  j["word_category"] = spec.word_category;
  j["stopwords"] = spec.stopwords;
  j["sentence_patterns"] = spec.sentence_patterns;
  j["stopword_rate"] = spec.stopword_rate;
  json lex;
  for (const auto& [word, prim] : spec.lexicon) {
    json frames = json::array();
    for (const PoseFrame& f : prim.frames) {
      json fj = json::array();
      for (std::size_t k = 0; k < f.joint_count(); ++k) {
        fj.push_back({f.coords[k][0], f.coords[k][1], f.confidence[k]});
      }
      frames.push_back(std::move(fj));
    }
    lex[word] = {{"duration_units", prim.duration_units}, {"frames", std::move(frames)}};
  }
  j["lexicon"] = std::move(lex);
  return j;
}

}  // namespace

void save_toy_spec(const std::string& path, const ToySignSpec& spec) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write toy spec: " + path);
  }
  out << spec_to_json(spec).dump(2) << '\n';
}

ToySignSpec load_toy_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open toy spec: " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("toy spec: ") + e.what());
  }
  ToySignSpec spec;
  spec.skeleton = skeleton_from_json(j.at("skeleton"));
  spec.fps = j.at("fps").get<double>();
  spec.category_order = j.at("category_order").get<std::vector<std::string>>();
  spec.word_category = j.at("word_category").get<std::map<std::string, std::string>>();
  spec.stopwords = j.at("stopwords").get<std::set<std::string>>();
  spec.sentence_patterns =
      j.at("sentence_patterns").get<std::vector<std::vector<std::string>>>();
  spec.stopword_rate = j.at("stopword_rate").get<double>();
  for (const auto& [word, pj] : j.at("lexicon").items()) {
    MotionPrimitive prim;
    prim.duration_units = pj.at("duration_units").get<int>();
    for (const json& fj : pj.at("frames")) {
      PoseFrame frame;
      for (const json& cj : fj) {
        frame.coords.push_back({cj[0].get<double>(), cj[1].get<double>()});
        frame.confidence.push_back(cj[2].get<double>());
      }
      prim.frames.push_back(std::move(frame));
    }
    spec.lexicon.emplace(word, std::move(prim));
  }
  spec.validate();
  return spec;
}

std::string toy_spec_fingerprint(const ToySignSpec& spec) {
  const std::string dump = spec_to_json(spec).dump();
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump)));
  return buf;
}

}  // namespace signtok
