#pragma once
// Pipeline executor: Extraction (profiler ∥ formulator) -> Strategy ->
// Synthesis, plus the zero-shot baseline and ablation switches.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "decode/backend.hpp"
#include "decode/domain.hpp"
#include "decode/metering.hpp"

namespace decode {

enum class Ablation { profiler, formulator, strategist };

const std::string& ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& name);

struct PipelineConfig {
  std::string model_id = "mock";
  std::set<Ablation> ablations;  // synthesizer is never removable
  double throughput_tokens_per_s = kDefaultThroughputTokensPerS;
  PricingModel pricing;
  RetryPolicy retry;
  std::optional<int> max_output_tokens;
  std::optional<double> temperature;
};

struct StageRecord {
  Stage stage = Stage::zero_shot;
  std::string prompt;
  std::string raw_output;
  TokenUsage usage;  // sums both calls when the stage was repaired
  double modeled_latency_s = 0;
  bool repaired = false;
};

struct PipelineTrace {
  std::vector<StageRecord> stages;
  FinalResponse final;
  double critical_path_latency_s = 0;
  TokenUsage totals;
};

// A failed run still carries every completed or attempted stage.
class PipelineError : public Error {
 public:
  PipelineError(const std::string& what, PipelineTrace partial)
      : Error(what), partial(std::move(partial)) {}
  PipelineTrace partial;
};

PipelineTrace run_pipeline(Backend& backend, const ConversationHistory& h,
                           const PipelineConfig& cfg);
PipelineTrace run_zero_shot(Backend& backend, const ConversationHistory& h,
                            const PipelineConfig& cfg);

std::vector<StageUsage> stage_usages(const PipelineTrace& trace);

nlohmann::json trace_to_json(const PipelineTrace& trace);
PipelineTrace trace_from_json(const nlohmann::json& j);
void save_trace(const PipelineTrace& trace, const std::string& path);
PipelineTrace load_trace(const std::string& path);

}  // namespace decode
