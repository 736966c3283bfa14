#pragma once

#include <optional>
#include <string>
#include <vector>

#include "signtok/assistance_record.hpp"
#include "signtok/chat_client.hpp"
#include "signtok/toy_language.hpp"

namespace signtok {

struct ChatTurn {
  std::string role;  // system | user | assistant
  std::string text;
};

// Turns alternate user/assistant after any leading system turn.
struct ChatTranscript {
  std::vector<ChatTurn> turns;
  void validate() const;
};

// The three-turn elicitation protocol with {text} and the language tag
// substituted; assistant slots are left empty for the client to fill.
ChatTranscript build_prompt_transcript(const std::string& text,
                                       const std::string& language_tag);

// Deterministic assistance from the toy grammar: content keywords in sign
// order with min-rescaled relative durations.
AssistanceRecord rule_based_assistance(const std::string& text, const ToySignSpec& spec);

// Parses the canonical `word:duration` serialization; durations whose
// minimum is not 1 are rescaled. Anything else -> ParseError carrying the
// raw reply.
AssistanceRecord parse_assistance(const std::string& raw);

// --- cache -------------------------------------------------------------------

struct AssistanceCacheEntry {
  std::string key;  // content hash of (language, text)
  std::string text;
  std::string language;
  std::string raw_reply;
  AssistanceRecord record;
  std::string provenance;  // rule_based | external
};

// Append-only JSONL file keyed by content hash. Loads existing entries on
// open; store() writes through.
class AssistanceCache {
 public:
  explicit AssistanceCache(std::string path);

  static std::string key_of(const std::string& text, const std::string& language);

  std::optional<AssistanceCacheEntry> lookup(const std::string& text,
                                             const std::string& language) const;
  void store(const AssistanceCacheEntry& entry);

  std::size_t size() const { return entries_.size(); }

 private:
  std::string path_;
  std::vector<AssistanceCacheEntry> entries_;
};

struct ExternalAssistanceOptions {
  std::string language_tag = "American";
  int max_retries = 3;
};

// Runs the three-turn transcript against the client, parses the final reply
// and caches by content hash; a cache hit bypasses the client entirely.
AssistanceRecord external_assistance(const std::string& text, ChatClient& client,
                                     AssistanceCache& cache,
                                     const ExternalAssistanceOptions& options = {});

}  // namespace signtok
