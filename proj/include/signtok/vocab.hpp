#pragma once

#include <map>
#include <string>
#include <vector>

#include "signtok/assistance_record.hpp"
#include "signtok/tokens.hpp"

namespace signtok {

// Joint text + pose-token vocabulary. Ids are dense: specials first, then
// sorted text tokens, then the contiguous pose block POSE_0..POSE_{K-1}.
struct Vocabulary {
  std::vector<std::string> id_to_token;
  std::map<std::string, int> token_to_id;
  int pad = 0, bos = 1, sep = 2, eos = 3, unk = 4;
  int pose_base = 0;
  int pose_count = 0;  // K

  int size() const { return static_cast<int>(id_to_token.size()); }
  bool is_pose(int id) const {
    return id >= pose_base && id < pose_base + pose_count;
  }
  int pose_token_id(int k) const { return pose_base + k; }
  int pose_index(int id) const { return id - pose_base; }

  // UNK fallback for unseen words.
  std::vector<int> encode_text(const std::string& text) const;
  std::string decode(const std::vector<int>& ids) const;
};

// Whitespace split with '.', ',' and ':' peeled off as single-char tokens
// ("yesterday:2" -> yesterday : 2).
std::vector<std::string> tokenize_text(const std::string& text);

// Deterministic id assignment from corpus sentences and assistance records;
// the fine-tuning template's own words are always included.
Vocabulary build_vocabulary(const std::vector<std::string>& texts,
                            const std::vector<AssistanceRecord>& assistance_records,
                            std::size_t codebook_size,
                            const std::string& language_tag = "American");

// Fine-tuning prompt template.
std::string finetune_system_prompt(const std::string& language_tag);
std::string finetune_user_prompt(const std::string& sentence,
                                 const std::string& canonical_assistance);

// Prompt ids: BOS + system template + user line + SEP.
// Target ids: pose tokens + EOS. The loss mask covers exactly the target
// span (positions predicting target_ids).
struct TrainingSample {
  std::string id;
  std::vector<int> prompt_ids;
  std::vector<int> target_ids;

  std::vector<int> full_ids() const {
    std::vector<int> ids = prompt_ids;
    ids.insert(ids.end(), target_ids.begin(), target_ids.end());
    return ids;
  }
};

// Throws SampleTooLongError when prompt+target exceed the context length.
TrainingSample encode_sample(const std::string& sentence,
                             const AssistanceRecord& assistance,
                             const TokenSequence& tokens, const Vocabulary& vocab,
                             std::size_t context_length,
                             const std::string& language_tag = "American");

}  // namespace signtok
