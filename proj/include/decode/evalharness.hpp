#pragma once
// Dataset ingestion, rubric grading via a judge, normalized scoring and
// theme/axis aggregation.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "decode/backend.hpp"
#include "decode/domain.hpp"
#include "decode/metering.hpp"
#include "decode/pipeline.hpp"

namespace decode::eval {

struct RubricCriterion {
  std::string criterion;
  double points = 0;  // may be negative, never zero
  std::vector<std::string> tags;  // axis tags carry an "axis:" prefix

  std::optional<std::string> axis() const;
};

struct BenchExample {
  std::string id;
  ConversationHistory prompt;
  std::vector<RubricCriterion> rubrics;
  std::vector<std::string> example_tags;  // theme tags carry a "theme:" prefix

  std::optional<std::string> theme() const;
};

struct CriterionVerdict {
  bool met = false;
  std::string justification;
};

struct ScoreReport {
  double overall = 0;  // fraction in [0, 1]
  std::map<std::string, double> by_theme;
  std::map<std::string, double> by_axis;
  size_t n_examples = 0;
  size_t n_failed = 0;
};

class DatasetError : public Error {
 public:
  DatasetError(size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  size_t line;
};

class NoPositivePoints : public Error {
 public:
  NoPositivePoints() : Error("rubric has no positive points") {}
};

class JudgeFormatError : public Error {
 public:
  using Error::Error;
};

// Line-delimited JSON; malformed lines are reported with their number.
std::vector<BenchExample> load_dataset(const std::string& path);
BenchExample example_from_json(const nlohmann::json& j, size_t line = 0);

class Judge {
 public:
  virtual ~Judge() = default;
  virtual CriterionVerdict grade(const ConversationHistory& conversation,
                                 const FinalResponse& response,
                                 const RubricCriterion& criterion) = 0;
};

// Deterministic judge for desk-scale runs: a criterion is met iff its
// text occurs in the response, case-insensitively.
class KeywordJudge : public Judge {
 public:
  CriterionVerdict grade(const ConversationHistory& conversation,
                         const FinalResponse& response,
                         const RubricCriterion& criterion) override;
};

// LLM-backed judge grading one criterion per call.
class LlmJudge : public Judge {
 public:
  LlmJudge(Backend& backend, std::string model_id, RetryPolicy retry = {})
      : backend_(backend), model_id_(std::move(model_id)), retry_(retry) {}
  CriterionVerdict grade(const ConversationHistory& conversation,
                         const FinalResponse& response,
                         const RubricCriterion& criterion) override;

 private:
  Backend& backend_;
  std::string model_id_;
  RetryPolicy retry_;
};

std::vector<CriterionVerdict> grade_example(const FinalResponse& response,
                                            const BenchExample& ex, Judge& judge);

// clip(sum of met points / sum of positive points, 0, 1)
double score_example(const std::vector<CriterionVerdict>& verdicts,
                     const std::vector<RubricCriterion>& rubrics);

struct ExampleResult {
  const BenchExample* example = nullptr;
  double score = 0;
  std::vector<CriterionVerdict> verdicts;
  bool failed = false;  // pipeline failure; scored 0 by convention
};

ScoreReport aggregate_scores(const std::vector<ExampleResult>& results);

enum class ReportFormat { table, machine };

std::string format_report(const ScoreReport& report, ReportFormat format);
// Write-then-rename so a failure never leaves a partial report file.
void emit_report(const ScoreReport& report, ReportFormat format,
                 const std::string& path);
ScoreReport report_from_json(const nlohmann::json& j);

// Runs the pipeline (or zero-shot baseline) and grades every example
// with at most `concurrency` examples in flight.
struct EvalOutcome {
  ScoreReport report;
  UsageSummary usage;
  std::vector<PipelineTrace> traces;
};

EvalOutcome run_eval(Backend& backend, const std::vector<BenchExample>& examples,
                     const PipelineConfig& cfg, Judge& judge, bool zero_shot,
                     size_t concurrency = 1);

}  // namespace decode::eval
