#include "signtok/vocab.hpp"

#include <algorithm>
#include <set>

#include "signtok/errors.hpp"

namespace signtok {

std::vector<std::string> tokenize_text(const std::string& text) {
  std::vector<std::string> out;
  std::string run;
  auto flush = [&]() {
    if (!run.empty()) {
      out.push_back(run);
      run.clear();
    }
  };
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      flush();
    } else if (c == '.' || c == ',' || c == ':') {
      flush();
      out.emplace_back(1, c);
    } else {
      run += c;
    }
  }
  flush();
  return out;
}

std::vector<int> Vocabulary::encode_text(const std::string& text) const {
  std::vector<int> ids;
  for (const std::string& tok : tokenize_text(text)) {
    const auto it = token_to_id.find(tok);
    ids.push_back(it == token_to_id.end() ? unk : it->second);
  }
  return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) {
      out += ' ';
    }
    if (id >= 0 && id < size()) {
      out += id_to_token[static_cast<std::size_t>(id)];
    } else {
      out += "<bad>";
    }
  }
  return out;
}

std::string finetune_system_prompt(const std::string& language_tag) {
  return "You are a sign language expert. Generate a sequence of number tokens to "
         "express the following sentence in " +
         language_tag +
         " sign language. The assistance indicates the important words, their "
         "supposed order and relative duration of each word in its sign video, while "
         "the duration of the shortest word is denoted as 1.";
}

std::string finetune_user_prompt(const std::string& sentence,
                                 const std::string& canonical_assistance) {
  std::string out = "sentence: " + sentence + " assistance:";
  if (!canonical_assistance.empty()) {
    out += ' ';
    out += canonical_assistance;
  }
  return out;
}

Vocabulary build_vocabulary(const std::vector<std::string>& texts,
                            const std::vector<AssistanceRecord>& assistance_records,
                            std::size_t codebook_size,
                            const std::string& language_tag) {
  std::set<std::string> words;
  auto add = [&](const std::string& text) {
    for (const std::string& tok : tokenize_text(text)) {
      words.insert(tok);
    }
  };
  for (const std::string& t : texts) {
    add(t);
  }
  for (const AssistanceRecord& rec : assistance_records) {
    add(canonical_assistance(rec));
  }
  add(finetune_system_prompt(language_tag));
  add(finetune_user_prompt("", ""));

  Vocabulary vocab;
  vocab.id_to_token = {"<pad>", "<bos>", "<sep>", "<eos>", "<unk>"};
  for (const std::string& w : words) {
    vocab.id_to_token.push_back(w);
  }
  vocab.pose_base = static_cast<int>(vocab.id_to_token.size());
  vocab.pose_count = static_cast<int>(codebook_size);
  for (std::size_t k = 0; k < codebook_size; ++k) {
    vocab.id_to_token.push_back("POSE_" + std::to_string(k));
  }
  for (std::size_t i = 0; i < vocab.id_to_token.size(); ++i) {
    vocab.token_to_id[vocab.id_to_token[i]] = static_cast<int>(i);
  }
  return vocab;
}

TrainingSample encode_sample(const std::string& sentence,
                             const AssistanceRecord& assistance,
                             const TokenSequence& tokens, const Vocabulary& vocab,
                             std::size_t context_length,
                             const std::string& language_tag) {
  TrainingSample sample;
  sample.id = tokens.id;
  sample.prompt_ids.push_back(vocab.bos);
  const std::string prompt_text =
      finetune_system_prompt(language_tag) + ' ' +
      finetune_user_prompt(sentence, canonical_assistance(assistance));
  const std::vector<int> text_ids = vocab.encode_text(prompt_text);
  sample.prompt_ids.insert(sample.prompt_ids.end(), text_ids.begin(), text_ids.end());
  sample.prompt_ids.push_back(vocab.sep);

  for (int k : tokens.indices) {
    if (k < 0 || k >= vocab.pose_count) {
      throw ContractError("encode_sample: pose index outside codebook: " +
                          std::to_string(k));
    }
    sample.target_ids.push_back(vocab.pose_token_id(k));
  }
  sample.target_ids.push_back(vocab.eos);

  if (sample.prompt_ids.size() + sample.target_ids.size() > context_length) {
    throw SampleTooLongError("sample " + sample.id + " needs " +
                             std::to_string(sample.prompt_ids.size() +
                                            sample.target_ids.size()) +
                             " tokens, context is " + std::to_string(context_length));
  }
  return sample;
}

}  // namespace signtok
