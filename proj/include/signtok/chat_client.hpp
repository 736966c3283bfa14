#pragma once

#include <string>
#include <vector>

namespace signtok {

struct ChatMessage {
  std::string role;
  std::string content;
};

// Generic chat-completion interface: role-tagged messages in, one assistant
// reply out. Implementations may throw TransportError.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

struct HttpChatConfig {
  std::string host;           // e.g. "api.example.com" or "localhost"
  int port = 443;
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4o";
  // Name of the environment variable holding the bearer credential. The
  // credential itself never appears in configuration files.
  std::string credential_env = "SIGNTOK_CHAT_API_KEY";
  int timeout_seconds = 30;
};

// Chat-completion client over plain HTTP (JSON body with a `messages` array,
// reply text read from choices[0].message.content).
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(HttpChatConfig config);
  std::string complete(const std::vector<ChatMessage>& messages) override;

  // Throws ConfigError when the credential variable is unset or empty.
  static std::string credential_from_env(const std::string& env_name);

 private:
  HttpChatConfig config_;
  std::string credential_;
};

}  // namespace signtok
