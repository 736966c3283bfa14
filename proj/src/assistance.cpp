#include "signtok/assistance.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "signtok/errors.hpp"
#include "signtok/rng.hpp"

namespace signtok {

void ChatTranscript::validate() const {
  std::size_t i = 0;
  if (i < turns.size() && turns[i].role == "system") {
    ++i;
  }
  bool expect_user = true;
  for (; i < turns.size(); ++i) {
    const std::string& role = turns[i].role;
    if (role != (expect_user ? "user" : "assistant")) {
      throw ContractError("transcript roles must alternate user/assistant");
    }
    expect_user = !expect_user;
  }
}

ChatTranscript build_prompt_transcript(const std::string& text,
                                       const std::string& language_tag) {
  if (text.empty()) {
    throw ContractError("build_prompt_transcript: empty text");
  }
  ChatTranscript t;
  t.turns.push_back(
      {"user", "Introduce " + language_tag + " Sign Language sentence structure."});
  t.turns.push_back({"assistant", ""});
  t.turns.push_back({"user",
                     "According to the structure, generate sign language sentence for "
                     "the following text: " +
                         text + "."});
  t.turns.push_back({"assistant", ""});
  t.turns.push_back({"user",
                     "Estimate the relative duration of each word's motion in a sign "
                     "video to generate a sequence, while denoting the duration of the "
                     "shortest word as 1."});
  t.turns.push_back({"assistant", ""});
  t.validate();
  return t;
}

AssistanceRecord rule_based_assistance(const std::string& text, const ToySignSpec& spec) {
  return toy_assistance(text, spec);
}

AssistanceRecord parse_assistance(const std::string& raw) {
  AssistanceRecord rec;
  std::istringstream in(raw);
  std::string pair;
  while (in >> pair) {
    const std::size_t colon = pair.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= pair.size()) {
      throw ParseError("unparseable assistance reply: " + raw);
    }
    const std::string word = pair.substr(0, colon);
    const std::string num = pair.substr(colon + 1);
    if (!std::all_of(num.begin(), num.end(),
                     [](unsigned char c) { return std::isdigit(c); })) {
      throw ParseError("unparseable assistance reply: " + raw);
    }
    const long duration = std::strtol(num.c_str(), nullptr, 10);
    if (duration < 1) {
      throw ParseError("unparseable assistance reply: " + raw);
    }
    rec.words.push_back(word);
    rec.durations.push_back(static_cast<int>(duration));
  }
  if (rec.words.empty() && !raw.empty() &&
      !std::all_of(raw.begin(), raw.end(),
                   [](unsigned char c) { return std::isspace(c); })) {
    throw ParseError("unparseable assistance reply: " + raw);
  }
  rec.durations = rescale_durations_to_unit(rec.durations);
  rec.validate();
  return rec;
}

// --- cache -------------------------------------------------------------------

namespace {

using nlohmann::json;

json entry_to_json(const AssistanceCacheEntry& e) {
  json j;
  j["key"] = e.key;
  j["text"] = e.text;
  j["language"] = e.language;
  j["raw_reply"] = e.raw_reply;
  j["words"] = e.record.words;
  j["durations"] = e.record.durations;
  j["provenance"] = e.provenance;
  return j;
}

AssistanceCacheEntry entry_from_json(const json& j) {
  AssistanceCacheEntry e;
  e.key = j.at("key").get<std::string>();
  e.text = j.at("text").get<std::string>();
  e.language = j.at("language").get<std::string>();
  e.raw_reply = j.at("raw_reply").get<std::string>();
  e.record.words = j.at("words").get<std::vector<std::string>>();
  e.record.durations = j.at("durations").get<std::vector<int>>();
  e.provenance = j.at("provenance").get<std::string>();
  e.record.validate();
  return e;
}

}  // namespace

AssistanceCache::AssistanceCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) {
    return;  // fresh cache
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      entries_.push_back(entry_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError("assistance cache line " + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
}

std::string AssistanceCache::key_of(const std::string& text, const std::string& language) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(language + '\x1f' + text)));
  return buf;
}

std::optional<AssistanceCacheEntry> AssistanceCache::lookup(
    const std::string& text, const std::string& language) const {
  const std::string key = key_of(text, language);
  // newest entry wins
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->key == key) {
      return *it;
    }
  }
  return std::nullopt;
}

void AssistanceCache::store(const AssistanceCacheEntry& entry) {
  entries_.push_back(entry);
  std::ofstream out(path_, std::ios::app);
  if (!out) {
    throw IoError("cannot append to assistance cache: " + path_);
  }
  out << entry_to_json(entry).dump() << '\n';
  if (!out) {
    throw IoError("assistance cache write failed: " + path_);
  }
}

AssistanceRecord external_assistance(const std::string& text, ChatClient& client,
                                     AssistanceCache& cache,
                                     const ExternalAssistanceOptions& options) {
  if (const auto hit = cache.lookup(text, options.language_tag)) {
    return hit->record;
  }

  const ChatTranscript transcript = build_prompt_transcript(text, options.language_tag);
  std::vector<ChatMessage> messages;
  std::string reply;
  for (const ChatTurn& turn : transcript.turns) {
    if (turn.role != "user") {
      continue;  // assistant slots are filled by the client
    }
    messages.push_back({"user", turn.text});
    int attempt = 0;
    while (true) {
      try {
        reply = client.complete(messages);
        break;
      } catch (const TransportError&) {
        if (++attempt >= options.max_retries) {
          throw;
        }
      }
    }
    messages.push_back({"assistant", reply});
  }

  AssistanceRecord record;
  try {
    record = parse_assistance(reply);
  } catch (const ParseError&) {
    throw ParseError("external assistance reply unparseable; raw reply: " + reply);
  }

  AssistanceCacheEntry entry;
  entry.key = AssistanceCache::key_of(text, options.language_tag);
  entry.text = text;
  entry.language = options.language_tag;
  entry.raw_reply = reply;
  entry.record = record;
  entry.provenance = "external";
  cache.store(entry);
  return record;
}

}  // namespace signtok
