#include "decode/prompts.hpp"

#include <set>
#include <sstream>

namespace decode {

namespace {

const char* kBackgroundBody =
    R"(You are a medical intake specialist. Analyze the following conversation and extract the user's background information.

CONVERSATION:
{conversation_history}

Extract and infer the following information about the user (if available in the conversation):
- Age or age group
- Career/Occupation
- Economic condition (inferred from context)
- Living place/location
- Living situation (alone, with family, etc.)
- Any other relevant personal context

IMPORTANT: Only include information that can be reasonably inferred from the conversation. Do NOT make up information.

Respond in this EXACT format:

AGE: [age or age group, or "Not specified"]
CAREER: [occupation, or "Not specified"]
ECONOMIC_CONDITION: [economic status inferred from context, or "Not specified"]
LIVING_PLACE: [location/region, or "Not specified"]
LIVING_SITUATION: [living arrangement, or "Not specified"]
OTHER_CONTEXT: [any other relevant information, or "None"]

Be concise and factual. If information is not available, write "Not specified" or "None".)";

const char* kNeedsBody =
    R"(You are analyzing a medical conversation to understand what the user needs.

CONVERSATION:
{conversation_history}

Identify what the user explicitly asks for or clearly needs. Be conservative - only include needs that are:
1. Explicitly stated by the user
2. Clearly implied by the user's questions or concerns

DO NOT include:
- Things the user might need but didn't mention
- General medical advice that wasn't requested
- Assumptions about what the user should want

Respond in this EXACT format:

NEEDS:
1. [First explicit need]
2. [Second explicit need]
3. [Third explicit need]
...

If the user doesn't clearly state what they want, respond with:
NEEDS:
None specified

Be strict and conservative.)";

const char* kChecklistBody =
    R"(You are a clinical safety and completeness planner.

Your ONLY job is to identify the medically important content that MUST be covered
for this case to be safe, accurate, and reasonably complete. You are NOT deciding tone or style.
You are optimizing for clinical accuracy and completeness, not brevity.

CONVERSATION:
{conversation_history}

Create a numbered list of key clinical content items that the final answer should try to cover, such as:
- Important symptom details or history that should be addressed or clarified
- Key possible causes or differentials (described in a cautious, non-diagnostic way)
- Red-flag or emergency warning signs that should be mentioned if relevant
- What the user can monitor or do at home (if appropriate)
- When and how urgently they should seek in-person care
- Any important limitations or uncertainties of online advice

Rules:
- Focus on clinical content ONLY (WHAT to cover), not HOW to phrase it.
- Err on the side of including any clinically important point that might affect safety.
- Each item should be 1-2 sentences max.
- Avoid repeating the same content in multiple items.
- Do not invent new symptoms; only build on what is in the conversation.
- It is acceptable to mention reasonable possible causes or scenarios even if the user did not use those exact words, as long as they logically follow from the described symptoms.

Respond in this EXACT format:
1. [Clinical content item]
2. [Clinical content item]
3. [Clinical content item]
...)";

const char* kStrategyBody =
    R"(You are a response-strategy planner for a medical assistant.

You receive:
- The original conversation
- A brief user background profile
- A list of what the user clearly needs
- A clinical content checklist (what should be covered for safety/completeness)

Your job is to design HOW the assistant should answer for THIS user: what to prioritize, how deep to go, what style and structure to use, and what to avoid.

CONVERSATION:
{conversation_history}

USER BACKGROUND PROFILE:
{user_profile}

USER NEEDS (what the user clearly wants):
{needs_formatted}

CLINICAL CONTENT CHECKLIST (what should be covered):
{content_formatted}

Pay particular attention to:
- Whether the user's needs are clearly stated or vague/unspecified.
- Whether there is sufficient information available for a safe medical assessment.
- When needs or information are unclear, the plan should usually include a brief strategy for clarifying key gaps (e.g., 1-2 focused questions), while still guiding the assistant to give the best possible provisional answer based only on what is already known.

IMPORTANT:
- The assistant MUST still give concrete, practical, medically useful information even when information is incomplete. Use conditional language (e.g., "If X..., then Y...") rather than refusing to say anything.
- Do NOT tell the assistant to avoid discussing possible causes or next steps entirely.
- Clarification questions should be few (0-2 of the most important ones) and should not dominate the answer.

Design a plan with TWO sections:

1. WHAT TO DO/COVER (TO DO):
   - How the assistant should prioritize and present the content for THIS user.
   - What level of technical detail is appropriate for this user.
   - Whether to keep the answer short vs. more detailed.
   - Whether to explicitly ask clarification questions (0-2 key questions only), and if so, in what style and at what point (usually after giving main guidance).
   - Which content items from the checklist are highest priority to cover explicitly.
   - How to adapt the response to the user's apparent role, location, and constraints.

2. WHAT NOT TO DO/COVER (NOT TO DO):
   - Things that would likely confuse, overwhelm, or frustrate THIS user.
   - Styles to avoid (e.g., too technical, too casual, too vague, overly long).
   - Types of content to avoid (e.g., extremely long, low-yield lists of differential diagnoses; strong reassurance when red flags are possible; rigid instructions when access is limited).
   - Any ways of answering that would clearly conflict with the user's instructions.

You are NOT writing the final medical answer. You are only writing the plan.

Respond in this EXACT format:

TO DO:
1. [Response strategy / priority tailored to user]
2. [Another response strategy / priority]
3. [Continue as needed]

NOT TO DO:
1. [Specific thing to avoid for this user]
2. [Another thing to avoid]
3. [Continue as needed])";

const char* kSynthesisBody =
    R"(You are an experienced medical professional providing personalized advice.

Your highest priorities are:
1) Clinical accuracy and completeness of the information you provide.
2) Clear, practical guidance for the user.
3) Safe and appropriate communication.

ORIGINAL CONVERSATION:
{conversation_history}

PRESENTATION GUIDELINES (HOW TO ANSWER):

TO DO:
{to_do_formatted}

NOT TO DO:
{not_to_do_formatted}

CONTENT CHECKLIST (WHAT YOU MUST COVER CLINICALLY):
{content_formatted}

Your task:
1. Cover ALL items in the CONTENT CHECKLIST as clearly and concretely as possible. Aim for at least one explicit sentence or short paragraph addressing each item.
2. Follow the TO DO / NOT TO DO guidelines for how to present the information in a way that fits THIS user's background and needs.
3. Be explicit about uncertainty and information gaps, but still give the BEST POSSIBLE DIRECT ANSWER based only on the conversation.
   - Use conditional language (e.g., "If X..., then Y...") rather than refusing to answer.
4. You may ask up to 1-2 of the most important clarification questions, but they should be placed near the end and should NOT replace giving guidance.
5. Keep the response user-centered and practical, and explain what the user can do next (e.g., monitor, self-care, when/where to seek in-person care).
6. End with a brief reminder that this information does not replace an in-person medical evaluation and that the user should seek care if they are worried or if concerning symptoms arise.

Provide your response:)";

std::vector<PromptTemplate> build_templates() {
  return {
      {TemplateId::background, "background", kBackgroundBody, {"conversation_history"}},
      {TemplateId::needs, "needs", kNeedsBody, {"conversation_history"}},
      {TemplateId::checklist, "checklist", kChecklistBody, {"conversation_history"}},
      {TemplateId::strategy,
       "strategy",
       kStrategyBody,
       {"conversation_history", "user_profile", "needs_formatted", "content_formatted"}},
      {TemplateId::synthesis,
       "synthesis",
       kSynthesisBody,
       {"conversation_history", "to_do_formatted", "not_to_do_formatted",
        "content_formatted"}},
  };
}

std::string replace_all(std::string body, const std::string& from,
                        const std::string& to) {
  size_t pos = 0;
  while ((pos = body.find(from, pos)) != std::string::npos) {
    body.replace(pos, from.size(), to);
    pos += to.size();
  }
  return body;
}

}  // namespace

const std::vector<PromptTemplate>& all_prompt_templates() {
  static const std::vector<PromptTemplate> templates = build_templates();
  return templates;
}

const PromptTemplate& prompt_template(TemplateId id) {
  for (const auto& t : all_prompt_templates()) {
    if (t.id == id) return t;
  }
  throw Error("unknown template id");
}

std::string render_template(TemplateId id,
                            const std::map<std::string, std::string>& bindings) {
  const PromptTemplate& tpl = prompt_template(id);
  const std::set<std::string> declared(tpl.placeholders.begin(),
                                       tpl.placeholders.end());
  for (const auto& [key, value] : bindings) {
    if (!declared.count(key)) throw UnknownPlaceholder(key);
  }
  for (const auto& name : tpl.placeholders) {
    if (!bindings.count(name)) throw MissingPlaceholder(name);
  }
  std::string out = tpl.body;
  for (const auto& [key, value] : bindings) {
    out = replace_all(std::move(out), "{" + key + "}", value);
  }
  return out;
}

std::string format_numbered_list(const std::vector<std::string>& items) {
  if (items.empty()) return "None specified";
  std::ostringstream out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out << '\n';
    out << (i + 1) << ". " << items[i];
  }
  return out.str();
}

std::string format_profile(const UserBackground& b) {
  std::ostringstream out;
  out << "AGE: " << b.age << '\n'
      << "CAREER: " << b.career << '\n'
      << "ECONOMIC_CONDITION: " << b.economic_condition << '\n'
      << "LIVING_PLACE: " << b.living_place << '\n'
      << "LIVING_SITUATION: " << b.living_situation << '\n'
      << "OTHER_CONTEXT: " << b.other_context;
  return out.str();
}

}  // namespace decode
