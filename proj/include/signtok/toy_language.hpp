#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "signtok/assistance_record.hpp"
#include "signtok/pose.hpp"

namespace signtok {

// Short deterministic pose clip for one word. duration_units is the clip
// length divided by the shortest clip length in the lexicon, rounded to the
// nearest integer (>= 1); the shortest word therefore has duration 1.
struct MotionPrimitive {
  std::vector<PoseFrame> frames;
  int duration_units = 1;
};

// Synthetic sign language: a lexicon of word clips, a category-priority
// reordering grammar, a stopword set that signs drop, and sentence patterns
// for the corpus sampler.
struct ToySignSpec {
  Skeleton skeleton;
  double fps = 12.0;
  std::map<std::string, MotionPrimitive> lexicon;
  std::vector<std::string> category_order;            // sign order, highest priority first
  std::map<std::string, std::string> word_category;   // content word -> category
  std::set<std::string> stopwords;
  std::vector<std::vector<std::string>> sentence_patterns;  // category names; "STOP?" = optional stopword
  double stopword_rate = 0.15;

  // Frame length of the shortest lexicon primitive (the duration unit).
  std::size_t unit_frames() const;

  void validate() const;
};

ToySignSpec default_toy_spec();

void save_toy_spec(const std::string& path, const ToySignSpec& spec);
ToySignSpec load_toy_spec(const std::string& path);

// Stable fingerprint of the language definition, for manifests.
std::string toy_spec_fingerprint(const ToySignSpec& spec);

// Whitespace word split.
std::vector<std::string> split_words(const std::string& text);

// Content words of `text` reordered by category priority (stable within one
// category). Unknown non-stopword -> VocabError naming the word.
std::vector<std::string> sign_order_words(const std::string& text, const ToySignSpec& spec);

// Ground-truth assistance: sign-order keywords with min-rescaled durations.
AssistanceRecord toy_assistance(const std::string& text, const ToySignSpec& spec);

struct DatasetItem {
  std::string id;
  std::string text;
  PoseSequence pose;  // concatenated primitives of the sign-order words
  AssistanceRecord assistance;
};

struct ToyDatasetManifest {
  std::uint64_t seed = 0;
  std::vector<std::string> ids;
  std::string spec_fingerprint;
};

// Deterministic given (spec, n_sentences, seed); ids are `<prefix>_NNNNN`.
std::pair<std::vector<DatasetItem>, ToyDatasetManifest> generate_toy_dataset(
    const ToySignSpec& spec, std::size_t n_sentences, std::uint64_t seed,
    const std::string& id_prefix = "s");

}  // namespace signtok
