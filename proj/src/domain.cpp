#include "decode/domain.hpp"

#include <array>
#include <fstream>
#include <sstream>

namespace decode {

namespace {

const std::array<std::string, 6> kStageNames = {
    "profiler_background", "profiler_needs", "formulator",
    "strategist",          "synthesizer",    "zero_shot",
};

}  // namespace

const std::string& stage_name(Stage s) {
  return kStageNames[static_cast<size_t>(s)];
}

Stage stage_from_name(const std::string& name) {
  for (size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  throw Error("unknown stage name: " + name);
}

std::string render_conversation(const ConversationHistory& h) {
  if (h.empty()) throw EmptyConversation();
  std::ostringstream out;
  bool first = true;
  for (const auto& turn : h.turns) {
    if (!first) out << "\n\n";
    first = false;
    out << (turn.role == Role::user ? "User: " : "Assistant: ") << turn.content;
  }
  return out.str();
}

ConversationHistory conversation_from_json(const nlohmann::json& j) {
  const nlohmann::json* msgs = nullptr;
  if (j.contains("turns")) {
    msgs = &j.at("turns");
  } else if (j.contains("prompt")) {
    msgs = &j.at("prompt");
  } else {
    throw Error("conversation document has neither \"turns\" nor \"prompt\"");
  }
  ConversationHistory h;
  for (const auto& m : *msgs) {
    Turn t;
    const std::string role = m.at("role").get<std::string>();
    if (role == "user") {
      t.role = Role::user;
    } else if (role == "assistant") {
      t.role = Role::assistant;
    } else {
      throw Error("unsupported conversation role: " + role);
    }
    t.content = m.at("content").get<std::string>();
    if (t.content.empty()) throw Error("conversation turn has empty content");
    h.turns.push_back(std::move(t));
  }
  return h;
}

ConversationHistory load_conversation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open conversation file: " + path);
  nlohmann::json j;
  in >> j;
  return conversation_from_json(j);
}

}  // namespace decode
