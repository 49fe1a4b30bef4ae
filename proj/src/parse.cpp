#include "decode/parse.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <sstream>

namespace decode {

namespace {

std::vector<std::string> split_lines(const std::string& raw) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(raw);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string strip_trailing_emphasis(std::string s) {
  while (!s.empty() && (s.back() == '*' || s.back() == '_')) s.pop_back();
  return trim(s);
}

// Emphasis wrapping on either side of a value: "**stable**" -> "stable".
std::string strip_emphasis(std::string s) {
  s = strip_trailing_emphasis(trim(std::move(s)));
  size_t b = 0;
  while (b < s.size() && (s[b] == '*' || s[b] == '_')) ++b;
  return trim(s.substr(b));
}

// Full-line header match, tolerant of emphasis decoration: "**TO DO:**".
bool is_header(const std::string& line, const std::string& header) {
  const std::string stripped = strip_decoration(line);
  if (stripped.size() < header.size()) return false;
  for (size_t i = 0; i < header.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(stripped[i])) != header[i]) {
      return false;
    }
  }
  std::string rest = trim(stripped.substr(header.size()));
  return rest.empty() || rest == ":";
}

struct NumberedItem {
  int ordinal;
  std::string text;
};

const std::regex kNumberedRe(R"(^\s*[*_]*\s*(\d+)\s*[.)]\s*(.*)$)");

std::optional<NumberedItem> match_numbered(const std::string& line) {
  std::smatch m;
  if (!std::regex_match(line, m, kNumberedRe)) return std::nullopt;
  std::string text = strip_emphasis(m[2].str());
  if (text.empty()) return std::nullopt;
  return NumberedItem{std::stoi(m[1].str()), text};
}

std::vector<NumberedItem> numbered_items(const std::vector<std::string>& lines,
                                         size_t begin, size_t end) {
  std::vector<NumberedItem> items;
  for (size_t i = begin; i < end; ++i) {
    if (auto item = match_numbered(lines[i])) items.push_back(std::move(*item));
  }
  return items;
}

}  // namespace

std::string strip_decoration(const std::string& line) {
  static const std::regex lead(R"(^\s*(?:[-*+>#]+\s+)?[*_]*\s*)");
  std::smatch m;
  std::string s = line;
  if (std::regex_search(s, m, lead) && m.position(0) == 0) {
    s = s.substr(m.length(0));
  }
  return strip_trailing_emphasis(trim(s));
}

UserBackground parse_background(const std::string& raw) {
  static const std::vector<std::string> keys = {
      "AGE",          "CAREER",           "ECONOMIC_CONDITION",
      "LIVING_PLACE", "LIVING_SITUATION", "OTHER_CONTEXT",
  };
  const auto lines = split_lines(raw);

  std::vector<std::string> values(keys.size());
  std::vector<bool> found(keys.size(), false);
  for (const auto& line : lines) {
    for (size_t k = 0; k < keys.size(); ++k) {
      if (found[k]) continue;
      const std::regex re("^[\\s*_#>-]*" + keys[k] + "[\\s*_]*:\\s*(.*)$",
                          std::regex::icase);
      std::smatch m;
      if (std::regex_match(line, m, re)) {
        values[k] = strip_emphasis(m[1].str());
        found[k] = true;
        break;
      }
    }
  }

  std::vector<std::string> missing;
  for (size_t k = 0; k < keys.size(); ++k) {
    if (!found[k]) missing.push_back(keys[k]);
  }
  if (!missing.empty()) {
    std::string what = "background output missing keys:";
    for (const auto& k : missing) what += " " + k;
    throw MalformedOutput(what, missing);
  }

  UserBackground b;
  b.age = values[0].empty() ? kNotSpecified : values[0];
  b.career = values[1].empty() ? kNotSpecified : values[1];
  b.economic_condition = values[2].empty() ? kNotSpecified : values[2];
  b.living_place = values[3].empty() ? kNotSpecified : values[3];
  b.living_situation = values[4].empty() ? kNotSpecified : values[4];
  b.other_context = values[5].empty() ? kNone : values[5];
  return b;
}

UserNeeds parse_needs(const std::string& raw) {
  const auto lines = split_lines(raw);
  size_t header = lines.size();
  for (size_t i = 0; i < lines.size(); ++i) {
    if (is_header(lines[i], "NEEDS")) {
      header = i;
      break;
    }
  }
  if (header == lines.size()) {
    throw MalformedOutput("needs output missing NEEDS header", {"NEEDS"});
  }

  UserNeeds n;
  for (const auto& item : numbered_items(lines, header + 1, lines.size())) {
    n.needs.push_back(item.text);
  }
  if (n.needs.empty()) n.none_specified = true;
  return n;
}

ClinicalChecklist parse_checklist(const std::string& raw) {
  const auto lines = split_lines(raw);
  ClinicalChecklist c;
  for (const auto& item : numbered_items(lines, 0, lines.size())) {
    c.items.push_back({item.ordinal, item.text});
  }
  if (c.items.empty()) {
    throw MalformedOutput("checklist output has no numbered items", {"items"});
  }
  return c;
}

DiscourseStrategy parse_strategy(const std::string& raw) {
  const auto lines = split_lines(raw);
  size_t to_do_at = lines.size();
  size_t not_to_do_at = lines.size();
  for (size_t i = 0; i < lines.size(); ++i) {
    if (to_do_at == lines.size() && is_header(lines[i], "TO DO")) to_do_at = i;
    if (not_to_do_at == lines.size() && is_header(lines[i], "NOT TO DO")) {
      not_to_do_at = i;
    }
  }

  std::vector<std::string> missing;
  if (to_do_at == lines.size()) missing.push_back("TO DO");
  if (not_to_do_at == lines.size()) missing.push_back("NOT TO DO");
  if (!missing.empty()) {
    throw MalformedOutput("strategy output missing section header(s)", missing);
  }

  DiscourseStrategy s;
  const size_t lo = std::min(to_do_at, not_to_do_at);
  const size_t hi = std::max(to_do_at, not_to_do_at);
  auto collect = [&](size_t at) {
    const size_t end = (at == lo) ? hi : lines.size();
    std::vector<std::string> out;
    for (const auto& item : numbered_items(lines, at + 1, end)) {
      out.push_back(item.text);
    }
    return out;
  };
  s.to_do = collect(to_do_at);
  s.not_to_do = collect(not_to_do_at);

  if (s.to_do.empty()) missing.push_back("TO DO");
  if (s.not_to_do.empty()) missing.push_back("NOT TO DO");
  if (!missing.empty()) {
    throw MalformedOutput("strategy section(s) have no items", missing);
  }
  return s;
}

ChatResponse repair_once(Backend& backend, const ChatRequest& original,
                         const std::string& raw, const std::string& reason) {
  ChatRequest followup = original;
  followup.messages.push_back({MessageRole::assistant, raw});
  followup.messages.push_back(
      {MessageRole::user,
       "Your previous reply did not follow the required format (" + reason +
           "). Rewrite your reply in the EXACT format requested above. "
           "Your previous reply was:\n\n" +
           raw});
  return backend.complete(followup);
}

std::vector<std::string> parse_numbered(const std::string& raw) {
  std::vector<std::string> out;
  const auto lines = split_lines(raw);
  for (const auto& item : numbered_items(lines, 0, lines.size())) {
    out.push_back(item.text);
  }
  return out;
}

}  // namespace decode
