#pragma once
// Strict parsers for the stage output grammars. Leniency is limited to
// case-insensitive keys, markdown emphasis stripping, "1." vs "1)"
// ordinals and surrounding whitespace; anything beyond fails fast.

#include <string>
#include <vector>

#include "decode/backend.hpp"
#include "decode/domain.hpp"

namespace decode {

class MalformedOutput : public Error {
 public:
  MalformedOutput(const std::string& what, std::vector<std::string> missing)
      : Error(what), missing(std::move(missing)) {}
  // Missing keys or section headers, e.g. {"LIVING_PLACE"} or {"NOT TO DO"}.
  std::vector<std::string> missing;
};

UserBackground parse_background(const std::string& raw);
UserNeeds parse_needs(const std::string& raw);
ClinicalChecklist parse_checklist(const std::string& raw);
DiscourseStrategy parse_strategy(const std::string& raw);

// Numbered items ("1." or "1)") from a block of text, ordinals stripped.
std::vector<std::string> parse_numbered(const std::string& raw);

// Strips leading list markers and surrounding markdown emphasis from a
// line, plus outer whitespace.
std::string strip_decoration(const std::string& line);

// Exactly one follow-up call after a failed parse: the original
// exchange plus a format reminder quoting the malformed reply. A second
// parse failure on the returned text must propagate MalformedOutput.
ChatResponse repair_once(Backend& backend, const ChatRequest& original,
                         const std::string& raw, const std::string& reason);

}  // namespace decode
