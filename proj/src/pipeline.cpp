#include "decode/pipeline.hpp"

#include <array>
#include <fstream>
#include <functional>
#include <future>

#include "decode/parse.hpp"
#include "decode/prompts.hpp"

namespace decode {

namespace {

const std::array<std::string, 3> kAblationNames = {"profiler", "formulator",
                                                   "strategist"};

// Carries the attempted stage record out of a failed parse so the
// pipeline can preserve it in the partial trace.
class StageFailure : public Error {
 public:
  StageFailure(const std::string& what, StageRecord record)
      : Error(what), record(std::move(record)) {}
  StageRecord record;
};

ChatRequest stage_request(const PipelineConfig& cfg, Stage stage,
                          const std::string& prompt) {
  ChatRequest req;
  req.model_id = cfg.model_id;
  req.messages = {{MessageRole::user, prompt}};
  req.max_output_tokens = cfg.max_output_tokens;
  req.temperature = cfg.temperature;
  req.stage = stage_name(stage);
  return req;
}

double modeled_latency(const TokenUsage& usage, const PipelineConfig& cfg) {
  return stage_latency(UsageStat(usage), cfg.throughput_tokens_per_s);
}

// One backend call plus at most one repair round-trip; throws
// StageFailure carrying the attempted record when parsing still fails.
template <typename T>
std::pair<StageRecord, T> run_parsed_stage(
    Backend& backend, const PipelineConfig& cfg, Stage stage,
    const std::string& prompt, const std::function<T(const std::string&)>& parse) {
  const ChatRequest req = stage_request(cfg, stage, prompt);
  ChatResponse resp = with_retries(backend, req, cfg.retry);

  StageRecord record;
  record.stage = stage;
  record.prompt = prompt;
  record.raw_output = resp.content;
  record.usage = resp.usage;
  record.modeled_latency_s = modeled_latency(record.usage, cfg);

  try {
    return {record, parse(resp.content)};
  } catch (const MalformedOutput& first) {
    ChatResponse repaired = repair_once(backend, req, resp.content, first.what());
    record.raw_output = repaired.content;
    record.usage += repaired.usage;
    record.modeled_latency_s = modeled_latency(record.usage, cfg);
    record.repaired = true;
    try {
      return {record, parse(repaired.content)};
    } catch (const MalformedOutput& second) {
      throw StageFailure(std::string("stage ") + stage_name(stage) +
                             " failed after repair: " + second.what(),
                         std::move(record));
    }
  }
}

PipelineTrace finalize(PipelineTrace trace, const PipelineConfig& cfg) {
  trace.totals = {};
  for (const auto& s : trace.stages) trace.totals += s.usage;
  trace.critical_path_latency_s =
      pipeline_latency(stage_usages(trace), cfg.throughput_tokens_per_s);
  return trace;
}

}  // namespace

const std::string& ablation_name(Ablation a) {
  return kAblationNames[static_cast<size_t>(a)];
}

Ablation ablation_from_name(const std::string& name) {
  for (size_t i = 0; i < kAblationNames.size(); ++i) {
    if (kAblationNames[i] == name) return static_cast<Ablation>(i);
  }
  throw Error("unknown ablation: " + name);
}

PipelineTrace run_pipeline(Backend& backend, const ConversationHistory& h,
                           const PipelineConfig& cfg) {
  const std::string conv = render_conversation(h);
  const bool no_profiler = cfg.ablations.count(Ablation::profiler) > 0;
  const bool no_formulator = cfg.ablations.count(Ablation::formulator) > 0;
  const bool no_strategist = cfg.ablations.count(Ablation::strategist) > 0;

  PipelineTrace trace;

  // Extraction fan-out: the three calls run concurrently and all must
  // complete before the strategist is issued.
  using BackgroundOut = std::pair<StageRecord, UserBackground>;
  using NeedsOut = std::pair<StageRecord, UserNeeds>;
  using ChecklistOut = std::pair<StageRecord, ClinicalChecklist>;

  std::future<BackgroundOut> f_background;
  std::future<NeedsOut> f_needs;
  std::future<ChecklistOut> f_checklist;

  if (!no_profiler) {
    f_background = std::async(std::launch::async, [&] {
      return run_parsed_stage<UserBackground>(
          backend, cfg, Stage::profiler_background,
          render_template(TemplateId::background, {{"conversation_history", conv}}),
          parse_background);
    });
    f_needs = std::async(std::launch::async, [&] {
      return run_parsed_stage<UserNeeds>(
          backend, cfg, Stage::profiler_needs,
          render_template(TemplateId::needs, {{"conversation_history", conv}}),
          parse_needs);
    });
  }
  if (!no_formulator) {
    f_checklist = std::async(std::launch::async, [&] {
      return run_parsed_stage<ClinicalChecklist>(
          backend, cfg, Stage::formulator,
          render_template(TemplateId::checklist, {{"conversation_history", conv}}),
          parse_checklist);
    });
  }

  UserBackground background;
  UserNeeds needs;
  ClinicalChecklist checklist;
  std::string failure;
  std::optional<StageRecord> failed_record;

  auto join = [&](auto& future, auto& value) {
    if (!future.valid()) return;
    try {
      auto [record, parsed] = future.get();
      trace.stages.push_back(std::move(record));
      value = std::move(parsed);
    } catch (const StageFailure& e) {
      if (failure.empty()) failure = e.what();
      if (!failed_record) failed_record = e.record;
    } catch (const Error& e) {
      if (failure.empty()) failure = e.what();
    }
  };
  join(f_background, background);
  join(f_needs, needs);
  join(f_checklist, checklist);

  if (!failure.empty()) {
    if (failed_record) trace.stages.push_back(std::move(*failed_record));
    throw PipelineError(failure, finalize(std::move(trace), cfg));
  }

  const std::string profile_text =
      no_profiler ? kNotAvailable : format_profile(background);
  const std::string needs_text =
      no_profiler ? kNotAvailable : format_numbered_list(needs.needs);
  const std::string content_text =
      no_formulator ? kNotAvailable : format_numbered_list(checklist.item_texts());

  std::string to_do_text = kNotAvailable;
  std::string not_to_do_text = kNotAvailable;
  if (!no_strategist) {
    const std::string prompt =
        render_template(TemplateId::strategy, {{"conversation_history", conv},
                                               {"user_profile", profile_text},
                                               {"needs_formatted", needs_text},
                                               {"content_formatted", content_text}});
    try {
      auto [record, strategy] = run_parsed_stage<DiscourseStrategy>(
          backend, cfg, Stage::strategist, prompt, parse_strategy);
      trace.stages.push_back(std::move(record));
      to_do_text = format_numbered_list(strategy.to_do);
      not_to_do_text = format_numbered_list(strategy.not_to_do);
    } catch (const StageFailure& e) {
      trace.stages.push_back(e.record);
      throw PipelineError(e.what(), finalize(std::move(trace), cfg));
    } catch (const Error& e) {
      throw PipelineError(e.what(), finalize(std::move(trace), cfg));
    }
  }

  const std::string prompt = render_template(
      TemplateId::synthesis, {{"conversation_history", conv},
                              {"to_do_formatted", to_do_text},
                              {"not_to_do_formatted", not_to_do_text},
                              {"content_formatted", content_text}});
  try {
    const ChatRequest req = stage_request(cfg, Stage::synthesizer, prompt);
    ChatResponse resp = with_retries(backend, req, cfg.retry);
    if (resp.content.empty()) {
      throw Error("synthesizer returned an empty response");
    }
    StageRecord record;
    record.stage = Stage::synthesizer;
    record.prompt = prompt;
    record.raw_output = resp.content;
    record.usage = resp.usage;
    record.modeled_latency_s = modeled_latency(record.usage, cfg);
    trace.stages.push_back(std::move(record));
    trace.final = {resp.content, SourceStage::synthesizer};
  } catch (const Error& e) {
    throw PipelineError(e.what(), finalize(std::move(trace), cfg));
  }

  return finalize(std::move(trace), cfg);
}

PipelineTrace run_zero_shot(Backend& backend, const ConversationHistory& h,
                            const PipelineConfig& cfg) {
  const std::string conv = render_conversation(h);
  PipelineTrace trace;
  try {
    const ChatRequest req = stage_request(cfg, Stage::zero_shot, conv);
    ChatResponse resp = with_retries(backend, req, cfg.retry);
    if (resp.content.empty()) throw Error("backend returned an empty response");
    StageRecord record;
    record.stage = Stage::zero_shot;
    record.prompt = conv;
    record.raw_output = resp.content;
    record.usage = resp.usage;
    record.modeled_latency_s = modeled_latency(record.usage, cfg);
    trace.stages.push_back(std::move(record));
    trace.final = {resp.content, SourceStage::zero_shot};
  } catch (const Error& e) {
    throw PipelineError(e.what(), finalize(std::move(trace), cfg));
  }
  return finalize(std::move(trace), cfg);
}

std::vector<StageUsage> stage_usages(const PipelineTrace& trace) {
  std::vector<StageUsage> out;
  out.reserve(trace.stages.size());
  for (const auto& s : trace.stages) out.push_back({s.stage, UsageStat(s.usage)});
  return out;
}

nlohmann::json trace_to_json(const PipelineTrace& trace) {
  nlohmann::json j;
  j["stages"] = nlohmann::json::array();
  for (const auto& s : trace.stages) {
    j["stages"].push_back({
        {"stage", stage_name(s.stage)},
        {"prompt", s.prompt},
        {"raw_output", s.raw_output},
        {"input_tokens", s.usage.input_tokens},
        {"output_tokens", s.usage.output_tokens},
        {"modeled_latency_s", s.modeled_latency_s},
        {"repaired", s.repaired},
    });
  }
  j["final"] = {
      {"text", trace.final.text},
      {"source_stage",
       trace.final.source_stage == SourceStage::synthesizer ? "synthesizer"
                                                            : "zero_shot"},
  };
  j["critical_path_latency_s"] = trace.critical_path_latency_s;
  j["totals"] = {{"input_tokens", trace.totals.input_tokens},
                 {"output_tokens", trace.totals.output_tokens}};
  return j;
}

PipelineTrace trace_from_json(const nlohmann::json& j) {
  PipelineTrace trace;
  for (const auto& s : j.at("stages")) {
    StageRecord r;
    r.stage = stage_from_name(s.at("stage").get<std::string>());
    r.prompt = s.at("prompt").get<std::string>();
    r.raw_output = s.at("raw_output").get<std::string>();
    r.usage.input_tokens = s.at("input_tokens").get<long>();
    r.usage.output_tokens = s.at("output_tokens").get<long>();
    r.modeled_latency_s = s.at("modeled_latency_s").get<double>();
    r.repaired = s.at("repaired").get<bool>();
    trace.stages.push_back(std::move(r));
  }
  trace.final.text = j.at("final").at("text").get<std::string>();
  trace.final.source_stage =
      j.at("final").at("source_stage").get<std::string>() == "zero_shot"
          ? SourceStage::zero_shot
          : SourceStage::synthesizer;
  trace.critical_path_latency_s = j.at("critical_path_latency_s").get<double>();
  trace.totals.input_tokens = j.at("totals").at("input_tokens").get<long>();
  trace.totals.output_tokens = j.at("totals").at("output_tokens").get<long>();
  return trace;
}

void save_trace(const PipelineTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file: " + path);
  out << trace_to_json(trace).dump(2) << '\n';
}

PipelineTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file: " + path);
  nlohmann::json j;
  in >> j;
  return trace_from_json(j);
}

}  // namespace decode
