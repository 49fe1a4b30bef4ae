#pragma once
// Template registry for the five stage prompts and formatting of
// structured values into their placeholders.

#include <map>
#include <string>
#include <vector>

#include "decode/domain.hpp"

namespace decode {

enum class TemplateId { background, needs, checklist, strategy, synthesis };

struct PromptTemplate {
  TemplateId id;
  std::string name;                       // "background", "needs", ...
  std::string body;                       // full text with {placeholder}s
  std::vector<std::string> placeholders;  // declared placeholder set
};

class MissingPlaceholder : public Error {
 public:
  explicit MissingPlaceholder(const std::string& name)
      : Error("missing binding for placeholder {" + name + "}"), name(name) {}
  std::string name;
};

class UnknownPlaceholder : public Error {
 public:
  explicit UnknownPlaceholder(const std::string& name)
      : Error("binding for unknown placeholder {" + name + "}"), name(name) {}
  std::string name;
};

const PromptTemplate& prompt_template(TemplateId id);
const std::vector<PromptTemplate>& all_prompt_templates();

// Substitutes every placeholder; bindings must cover the template's
// placeholder set exactly.
std::string render_template(TemplateId id,
                            const std::map<std::string, std::string>& bindings);

// "1. a\n2. b"; an empty list renders the "None specified" sentinel line.
std::string format_numbered_list(const std::vector<std::string>& items);

// Six "KEY: value" lines in the intake prompt's field order.
std::string format_profile(const UserBackground& b);

}  // namespace decode
