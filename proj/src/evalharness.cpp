#include "decode/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "decode/parse.hpp"

namespace decode::eval {

namespace {

constexpr const char* kThemePrefix = "theme:";
constexpr const char* kAxisPrefix = "axis:";

const std::vector<std::pair<std::string, std::string>> kThemeOrder = {
    {"emergency_referrals", "Emergency Referrals"},
    {"context_seeking", "Context Seeking"},
    {"global_health", "Global Health"},
    {"health_data_tasks", "Health Data Tasks"},
    {"communication", "Communications"},
    {"hedging", "Hedging"},
    {"complex_responses", "Complex Responses"},
};

const std::vector<std::pair<std::string, std::string>> kAxisOrder = {
    {"accuracy", "Accuracy"},
    {"completeness", "Completeness"},
    {"communication_quality", "Communication Quality"},
    {"context_awareness", "Context Awareness"},
    {"instruction_following", "Instruction Following"},
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::optional<std::string> tagged_value(const std::vector<std::string>& tags,
                                        const std::string& prefix) {
  for (const auto& t : tags) {
    if (t.rfind(prefix, 0) == 0) return t.substr(prefix.size());
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> RubricCriterion::axis() const {
  return tagged_value(tags, kAxisPrefix);
}

std::optional<std::string> BenchExample::theme() const {
  return tagged_value(example_tags, kThemePrefix);
}

BenchExample example_from_json(const nlohmann::json& j, size_t line) {
  BenchExample ex;
  if (j.contains("prompt_id")) {
    ex.id = j.at("prompt_id").get<std::string>();
  } else if (j.contains("id")) {
    ex.id = j.at("id").get<std::string>();
  } else {
    ex.id = "line-" + std::to_string(line);
  }

  try {
    ex.prompt = conversation_from_json(j);
  } catch (const Error& e) {
    throw DatasetError(line, e.what());
  }
  if (ex.prompt.empty()) throw DatasetError(line, "empty conversation");

  if (!j.contains("rubrics")) throw DatasetError(line, "missing field: rubrics");
  for (const auto& r : j.at("rubrics")) {
    RubricCriterion c;
    if (!r.contains("criterion")) {
      throw DatasetError(line, "missing field: rubrics[].criterion");
    }
    c.criterion = r.at("criterion").get<std::string>();
    if (!r.contains("points")) {
      throw DatasetError(line, "missing field: rubrics[].points");
    }
    c.points = r.at("points").get<double>();
    if (c.points == 0) throw DatasetError(line, "rubric criterion has zero points");
    if (r.contains("tags")) c.tags = r.at("tags").get<std::vector<std::string>>();
    ex.rubrics.push_back(std::move(c));
  }
  if (ex.rubrics.empty()) throw DatasetError(line, "empty rubrics list");

  if (j.contains("example_tags")) {
    ex.example_tags = j.at("example_tags").get<std::vector<std::string>>();
  }
  return ex;
}

std::vector<BenchExample> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset: " + path);
  std::vector<BenchExample> examples;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(lineno, std::string("invalid JSON: ") + e.what());
    }
    examples.push_back(example_from_json(j, lineno));
  }
  return examples;
}

CriterionVerdict KeywordJudge::grade(const ConversationHistory&,
                                     const FinalResponse& response,
                                     const RubricCriterion& criterion) {
  CriterionVerdict v;
  v.met = lower(response.text).find(lower(criterion.criterion)) != std::string::npos;
  v.justification = v.met ? "criterion text found in response"
                          : "criterion text not found in response";
  return v;
}

namespace {

const char* kJudgeTemplate =
    R"(You are grading a medical assistant's response against a single rubric criterion.

CONVERSATION:
{conversation}

RESPONSE:
{response}

CRITERION:
{criterion}

Decide whether the response meets the criterion.

Respond in this EXACT format:

VERDICT: [met or not met]
JUSTIFICATION: [one or two sentences])";

std::string fill(std::string body, const std::string& key, const std::string& value) {
  const std::string token = "{" + key + "}";
  const size_t pos = body.find(token);
  body.replace(pos, token.size(), value);
  return body;
}

CriterionVerdict parse_verdict(const std::string& raw) {
  std::istringstream in(raw);
  std::string line;
  std::optional<bool> met;
  std::string justification;
  while (std::getline(in, line)) {
    const std::string stripped = strip_decoration(line);
    const std::string low = lower(stripped);
    if (low.rfind("verdict", 0) == 0) {
      const size_t colon = stripped.find(':');
      if (colon == std::string::npos) continue;
      const std::string value = lower(strip_decoration(stripped.substr(colon + 1)));
      if (value == "met") met = true;
      if (value == "not met") met = false;
    } else if (low.rfind("justification", 0) == 0) {
      const size_t colon = stripped.find(':');
      if (colon != std::string::npos) {
        justification = strip_decoration(stripped.substr(colon + 1));
      }
    }
  }
  if (!met || justification.empty()) {
    throw MalformedOutput("judge output missing VERDICT or JUSTIFICATION",
                          {met ? "JUSTIFICATION" : "VERDICT"});
  }
  return {*met, justification};
}

}  // namespace

CriterionVerdict LlmJudge::grade(const ConversationHistory& conversation,
                                 const FinalResponse& response,
                                 const RubricCriterion& criterion) {
  std::string prompt = kJudgeTemplate;
  prompt = fill(std::move(prompt), "conversation", render_conversation(conversation));
  prompt = fill(std::move(prompt), "response", response.text);
  prompt = fill(std::move(prompt), "criterion", criterion.criterion);

  ChatRequest req;
  req.model_id = model_id_;
  req.messages = {{MessageRole::user, prompt}};
  req.stage = "judge";
  ChatResponse resp = with_retries(backend_, req, retry_);
  try {
    return parse_verdict(resp.content);
  } catch (const MalformedOutput& first) {
    ChatResponse repaired = repair_once(backend_, req, resp.content, first.what());
    try {
      return parse_verdict(repaired.content);
    } catch (const MalformedOutput& second) {
      throw JudgeFormatError(std::string("judge verdict unparseable after repair: ") +
                             second.what());
    }
  }
}

std::vector<CriterionVerdict> grade_example(const FinalResponse& response,
                                            const BenchExample& ex, Judge& judge) {
  std::vector<CriterionVerdict> verdicts;
  verdicts.reserve(ex.rubrics.size());
  for (const auto& criterion : ex.rubrics) {
    verdicts.push_back(judge.grade(ex.prompt, response, criterion));
  }
  return verdicts;
}

double score_example(const std::vector<CriterionVerdict>& verdicts,
                     const std::vector<RubricCriterion>& rubrics) {
  if (verdicts.size() != rubrics.size()) {
    throw Error("verdicts and rubrics are not aligned");
  }
  double positive = 0;
  double met = 0;
  for (size_t i = 0; i < rubrics.size(); ++i) {
    if (rubrics[i].points > 0) positive += rubrics[i].points;
    if (verdicts[i].met) met += rubrics[i].points;
  }
  if (positive <= 0) throw NoPositivePoints();
  return std::clamp(met / positive, 0.0, 1.0);
}

ScoreReport aggregate_scores(const std::vector<ExampleResult>& results) {
  if (results.empty()) throw EmptyAggregate();

  ScoreReport report;
  report.n_examples = results.size();

  std::map<std::string, std::pair<double, size_t>> themes;  // sum, count
  std::map<std::string, std::pair<double, size_t>> axes;

  for (const auto& r : results) {
    report.overall += r.score;
    if (r.failed) ++report.n_failed;
    if (auto theme = r.example->theme()) {
      themes[*theme].first += r.score;
      themes[*theme].second += 1;
    }
    if (r.failed) continue;

    // Axis score: this example's score restricted to criteria carrying
    // the axis tag; examples with no such criteria stay out of the
    // axis denominator.
    std::map<std::string, std::pair<std::vector<CriterionVerdict>,
                                    std::vector<RubricCriterion>>>
        per_axis;
    for (size_t i = 0; i < r.example->rubrics.size(); ++i) {
      if (auto axis = r.example->rubrics[i].axis()) {
        per_axis[*axis].first.push_back(r.verdicts[i]);
        per_axis[*axis].second.push_back(r.example->rubrics[i]);
      }
    }
    for (const auto& [axis, lists] : per_axis) {
      try {
        axes[axis].first += score_example(lists.first, lists.second);
        axes[axis].second += 1;
      } catch (const NoPositivePoints&) {
        // all-negative axis subset: no denominator to score against
      }
    }
  }

  report.overall /= static_cast<double>(results.size());
  for (const auto& [theme, acc] : themes) {
    report.by_theme[theme] = acc.first / static_cast<double>(acc.second);
  }
  for (const auto& [axis, acc] : axes) {
    report.by_axis[axis] = acc.first / static_cast<double>(acc.second);
  }
  return report;
}

namespace {

std::string display_name(const std::vector<std::pair<std::string, std::string>>& order,
                         const std::string& key) {
  for (const auto& [k, name] : order) {
    if (k == key) return name;
  }
  return key;
}

std::vector<std::string> ordered_keys(
    const std::vector<std::pair<std::string, std::string>>& order,
    const std::map<std::string, double>& values) {
  std::vector<std::string> keys;
  for (const auto& [k, name] : order) {
    if (values.count(k)) keys.push_back(k);
  }
  for (const auto& [k, v] : values) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  return keys;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
  return buf;
}

}  // namespace

std::string format_report(const ScoreReport& report, ReportFormat format) {
  if (format == ReportFormat::machine) {
    nlohmann::json j;
    j["overall"] = report.overall;
    j["by_theme"] = report.by_theme;
    j["by_axis"] = report.by_axis;
    j["n_examples"] = report.n_examples;
    j["n_failed"] = report.n_failed;
    return j.dump(2) + "\n";
  }

  std::ostringstream out;
  out << "Overall Score: " << percent(report.overall) << "\n";
  out << "Examples: " << report.n_examples << "\n";
  if (report.n_failed > 0) out << "Failed: " << report.n_failed << "\n";
  if (!report.by_theme.empty()) {
    out << "\nThemes\n";
    for (const auto& key : ordered_keys(kThemeOrder, report.by_theme)) {
      out << "  " << display_name(kThemeOrder, key) << ": "
          << percent(report.by_theme.at(key)) << "\n";
    }
  }
  if (!report.by_axis.empty()) {
    out << "\nAxes\n";
    for (const auto& key : ordered_keys(kAxisOrder, report.by_axis)) {
      out << "  " << display_name(kAxisOrder, key) << ": "
          << percent(report.by_axis.at(key)) << "\n";
    }
  }
  return out.str();
}

void emit_report(const ScoreReport& report, ReportFormat format,
                 const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write report file: " + tmp);
    out << format_report(report, format);
  }
  std::filesystem::rename(tmp, path);
}

ScoreReport report_from_json(const nlohmann::json& j) {
  ScoreReport r;
  r.overall = j.at("overall").get<double>();
  r.by_theme = j.at("by_theme").get<std::map<std::string, double>>();
  r.by_axis = j.at("by_axis").get<std::map<std::string, double>>();
  r.n_examples = j.at("n_examples").get<size_t>();
  r.n_failed = j.at("n_failed").get<size_t>();
  return r;
}

EvalOutcome run_eval(Backend& backend, const std::vector<BenchExample>& examples,
                     const PipelineConfig& cfg, Judge& judge, bool zero_shot,
                     size_t concurrency) {
  if (examples.empty()) throw EmptyAggregate();
  concurrency = std::max<size_t>(1, std::min(concurrency, examples.size()));

  std::vector<ExampleResult> results(examples.size());
  std::vector<PipelineTrace> traces(examples.size());
  std::atomic<size_t> next{0};

  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < examples.size(); i = next.fetch_add(1)) {
      const BenchExample& ex = examples[i];
      ExampleResult& r = results[i];
      r.example = &ex;
      FinalResponse response;
      try {
        PipelineTrace trace = zero_shot ? run_zero_shot(backend, ex.prompt, cfg)
                                        : run_pipeline(backend, ex.prompt, cfg);
        response = trace.final;
        traces[i] = std::move(trace);
      } catch (const PipelineError& e) {
        traces[i] = e.partial;
        r.failed = true;
        r.score = 0;
        continue;
      }
      try {
        r.verdicts = grade_example(response, ex, judge);
        r.score = score_example(r.verdicts, ex.rubrics);
      } catch (const Error&) {
        r.failed = true;
        r.score = 0;
      }
    }
  };

  std::vector<std::thread> threads;
  for (size_t t = 0; t < concurrency; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  EvalOutcome outcome;
  outcome.report = aggregate_scores(results);
  std::vector<TraceTotals> totals;
  totals.reserve(traces.size());
  for (const auto& t : traces) {
    totals.push_back({UsageStat(t.totals), t.critical_path_latency_s});
  }
  outcome.usage = aggregate(totals, cfg.pricing);
  outcome.traces = std::move(traces);
  return outcome;
}

}  // namespace decode::eval
