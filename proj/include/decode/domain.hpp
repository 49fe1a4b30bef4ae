#pragma once
// Core value types shared by every pipeline stage.
// All types here are immutable after construction and safe to share
// across concurrently executing stages.

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace decode {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyConversation : public Error {
 public:
  EmptyConversation() : Error("conversation has no turns") {}
};

enum class Role { user, assistant };

struct Turn {
  Role role = Role::user;
  std::string content;
};

struct ConversationHistory {
  std::vector<Turn> turns;

  bool empty() const { return turns.empty(); }
};

// Sentinel values mirror the intake prompt's own vocabulary so parsed
// fields can be re-injected into later prompts verbatim.
inline constexpr const char* kNotSpecified = "Not specified";
inline constexpr const char* kNone = "None";
inline constexpr const char* kNotAvailable = "Not available";

struct UserBackground {
  std::string age = kNotSpecified;
  std::string career = kNotSpecified;
  std::string economic_condition = kNotSpecified;
  std::string living_place = kNotSpecified;
  std::string living_situation = kNotSpecified;
  std::string other_context = kNone;

  bool operator==(const UserBackground&) const = default;
};

struct UserNeeds {
  std::vector<std::string> needs;
  bool none_specified = false;

  bool operator==(const UserNeeds&) const = default;
};

struct ChecklistItem {
  int ordinal = 0;  // 1-based, as numbered in the raw output
  std::string text;

  bool operator==(const ChecklistItem&) const = default;
};

struct ClinicalChecklist {
  std::vector<ChecklistItem> items;

  std::vector<std::string> item_texts() const {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back(it.text);
    return out;
  }

  bool operator==(const ClinicalChecklist&) const = default;
};

struct DiscourseStrategy {
  std::vector<std::string> to_do;
  std::vector<std::string> not_to_do;

  bool operator==(const DiscourseStrategy&) const = default;
};

enum class SourceStage { synthesizer, zero_shot };

struct FinalResponse {
  std::string text;
  SourceStage source_stage = SourceStage::synthesizer;
};

struct TokenUsage {
  long input_tokens = 0;
  long output_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& o) {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    return *this;
  }
  friend TokenUsage operator+(TokenUsage a, const TokenUsage& b) { return a += b; }
  bool operator==(const TokenUsage&) const = default;
};

// Pipeline stage identifiers. Used for trace records, mock scripting
// keys and the latency model's parallel-branch rule.
enum class Stage {
  profiler_background,
  profiler_needs,
  formulator,
  strategist,
  synthesizer,
  zero_shot,
};

const std::string& stage_name(Stage s);
Stage stage_from_name(const std::string& name);

// One line per turn, "User: ..." / "Assistant: ...", turns separated by
// a blank line. Throws EmptyConversation on zero turns.
std::string render_conversation(const ConversationHistory& h);

// Accepts {"turns": [{role, content}]} as well as the benchmark
// dataset's "prompt" field carrying the same message-list layout.
ConversationHistory conversation_from_json(const nlohmann::json& j);
ConversationHistory load_conversation(const std::string& path);

}  // namespace decode
