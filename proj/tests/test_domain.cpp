#include <doctest.h>

#include <random>
#include <sstream>

#include "decode/domain.hpp"

using namespace decode;

TEST_CASE("render_conversation single turn") {
  ConversationHistory h{{{Role::user, "I have a headache"}}};
  CHECK(render_conversation(h) == "User: I have a headache");
}

TEST_CASE("render_conversation preserves order and labels") {
  ConversationHistory h{{{Role::user, "hi"}, {Role::assistant, "hello"}}};
  CHECK(render_conversation(h) == "User: hi\n\nAssistant: hello");
}

TEST_CASE("render_conversation rejects empty history") {
  CHECK_THROWS_AS(render_conversation(ConversationHistory{}), EmptyConversation);
}

namespace {

// Independent re-parser of the rendered layout, used only to check the
// round-trip property.
ConversationHistory reparse(const std::string& rendered) {
  ConversationHistory h;
  std::string block;
  size_t pos = 0;
  while (pos <= rendered.size()) {
    size_t next = rendered.find("\n\n", pos);
    if (next == std::string::npos) next = rendered.size();
    block = rendered.substr(pos, next - pos);
    Turn t;
    if (block.rfind("User: ", 0) == 0) {
      t.role = Role::user;
      t.content = block.substr(6);
    } else if (block.rfind("Assistant: ", 0) == 0) {
      t.role = Role::assistant;
      t.content = block.substr(11);
    } else {
      throw Error("unexpected block: " + block);
    }
    h.turns.push_back(t);
    pos = next + 2;
    if (next == rendered.size()) break;
  }
  return h;
}

}  // namespace

TEST_CASE("render_conversation round-trips contents without blank lines") {
  std::mt19937 rng(7);
  const std::vector<std::string> words = {"fever", "cough", "rest",  "pain",
                                          "sleep", "water", "advice"};
  std::uniform_int_distribution<int> n_turns(1, 6);
  std::uniform_int_distribution<int> n_words(1, 5);
  std::uniform_int_distribution<size_t> pick(0, words.size() - 1);
  for (int iter = 0; iter < 50; ++iter) {
    ConversationHistory h;
    const int turns = n_turns(rng);
    for (int t = 0; t < turns; ++t) {
      std::ostringstream content;
      const int n = n_words(rng);
      for (int w = 0; w < n; ++w) content << (w ? " " : "") << words[pick(rng)];
      h.turns.push_back({rng() % 2 ? Role::user : Role::assistant, content.str()});
    }
    const ConversationHistory back = reparse(render_conversation(h));
    REQUIRE(back.turns.size() == h.turns.size());
    for (size_t i = 0; i < h.turns.size(); ++i) {
      CHECK(back.turns[i].role == h.turns[i].role);
      CHECK(back.turns[i].content == h.turns[i].content);
    }
  }
}

TEST_CASE("conversation_from_json accepts turns and prompt layouts") {
  auto j1 = nlohmann::json::parse(
      R"({"turns": [{"role": "user", "content": "hi"}]})");
  CHECK(conversation_from_json(j1).turns.size() == 1);

  auto j2 = nlohmann::json::parse(
      R"({"prompt": [{"role": "user", "content": "hi"},
                     {"role": "assistant", "content": "hello"}]})");
  auto h = conversation_from_json(j2);
  REQUIRE(h.turns.size() == 2);
  CHECK(h.turns[1].role == Role::assistant);

  auto bad = nlohmann::json::parse(R"({"messages": []})");
  CHECK_THROWS_AS(conversation_from_json(bad), Error);

  auto bad_role = nlohmann::json::parse(
      R"({"turns": [{"role": "system", "content": "x"}]})");
  CHECK_THROWS_AS(conversation_from_json(bad_role), Error);

  auto empty_content = nlohmann::json::parse(
      R"({"turns": [{"role": "user", "content": ""}]})");
  CHECK_THROWS_AS(conversation_from_json(empty_content), Error);
}

TEST_CASE("stage names round-trip") {
  for (Stage s : {Stage::profiler_background, Stage::profiler_needs,
                  Stage::formulator, Stage::strategist, Stage::synthesizer,
                  Stage::zero_shot}) {
    CHECK(stage_from_name(stage_name(s)) == s);
  }
  CHECK_THROWS_AS(stage_from_name("nope"), Error);
}
