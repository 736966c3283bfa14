#include "signtok/chat_client.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "signtok/errors.hpp"

namespace signtok {

HttpChatClient::HttpChatClient(HttpChatConfig config) : config_(std::move(config)) {
  credential_ = credential_from_env(config_.credential_env);
}

std::string HttpChatClient::credential_from_env(const std::string& env_name) {
  const char* value = std::getenv(env_name.c_str());
  if (value == nullptr || value[0] == '\0') {
    throw ConfigError("chat credential environment variable not set: " + env_name);
  }
  return value;
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
  nlohmann::json body;
  body["model"] = config_.model;
  nlohmann::json msgs = nlohmann::json::array();
  for (const ChatMessage& m : messages) {
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  }
  body["messages"] = std::move(msgs);

  httplib::Client cli(config_.host, config_.port);
  cli.set_connection_timeout(config_.timeout_seconds);
  cli.set_read_timeout(config_.timeout_seconds);
  httplib::Headers headers = {{"Authorization", "Bearer " + credential_}};

  const auto res = cli.Post(config_.path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("chat endpoint unreachable: " + config_.host + ":" +
                         std::to_string(config_.port));
  }
  if (res->status != 200) {
    throw TransportError("chat endpoint returned status " +
                         std::to_string(res->status));
  }
  try {
    const auto parsed = nlohmann::json::parse(res->body);
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("chat reply malformed: ") + e.what());
  }
}

}  // namespace signtok
