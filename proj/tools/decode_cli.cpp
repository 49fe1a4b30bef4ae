// Operator CLI: run one conversation through the pipeline, evaluate a
// dataset, print metering reports, export the prompt templates.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <vector>

#include <CLI11.hpp>

#include "decode/backend.hpp"
#include "decode/domain.hpp"
#include "decode/evalharness.hpp"
#include "decode/metering.hpp"
#include "decode/pipeline.hpp"
#include "decode/prompts.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;

struct BackendArgs {
  std::string mock_script;
  std::string model = "mock";
  std::string key_env = "DECODE_API_KEY";
};

std::unique_ptr<decode::Backend> make_backend(const BackendArgs& args) {
  if (!args.mock_script.empty()) {
    return std::make_unique<decode::MockBackend>(
        decode::MockScript::load(args.mock_script));
  }
  auto opts = decode::HttpBackendOptions::from_env(args.key_env);
  return std::make_unique<decode::HttpBackend>(std::move(opts));
}

const std::map<decode::Stage, std::string> kStageLabels = {
    {decode::Stage::profiler_background, "Background (Profiler)"},
    {decode::Stage::profiler_needs, "User Needs (Profiler)"},
    {decode::Stage::formulator, "Clinical Indicators (Formulator)"},
    {decode::Stage::strategist, "Discourse Strategy (Strategist)"},
    {decode::Stage::synthesizer, "Response (Synthesizer)"},
    {decode::Stage::zero_shot, "Zero-shot"},
};

int cmd_run(const std::string& input, const BackendArgs& backend_args,
            const std::vector<std::string>& ablate, bool zero_shot,
            const std::string& trace_path, double throughput, double price_in,
            double price_out) {
  if (!std::filesystem::exists(input)) {
    std::cerr << "input file not found: " << input << "\n";
    return kExitUsage;
  }

  decode::PipelineConfig cfg;
  cfg.model_id = backend_args.model;
  cfg.throughput_tokens_per_s = throughput;
  cfg.pricing = {price_in, price_out};
  for (const auto& name : ablate) {
    cfg.ablations.insert(decode::ablation_from_name(name));
  }

  auto backend = make_backend(backend_args);
  const auto h = decode::load_conversation(input);

  decode::PipelineTrace trace;
  try {
    trace = zero_shot ? decode::run_zero_shot(*backend, h, cfg)
                      : decode::run_pipeline(*backend, h, cfg);
  } catch (const decode::PipelineError& e) {
    std::cerr << "pipeline failed: " << e.what() << "\n";
    if (!trace_path.empty()) decode::save_trace(e.partial, trace_path);
    return kExitPipeline;
  }

  std::cout << trace.final.text << "\n";
  if (!trace_path.empty()) decode::save_trace(trace, trace_path);
  return kExitOk;
}

int cmd_eval(const std::string& dataset, const BackendArgs& backend_args,
             const std::string& judge_kind, bool zero_shot, size_t limit,
             size_t concurrency, const std::string& out_dir, double throughput,
             double price_in, double price_out) {
  if (!std::filesystem::exists(dataset)) {
    std::cerr << "dataset not found: " << dataset << "\n";
    return kExitUsage;
  }

  auto examples = decode::eval::load_dataset(dataset);
  if (limit > 0 && examples.size() > limit) examples.resize(limit);
  if (examples.empty()) {
    std::cerr << "dataset has no examples\n";
    return kExitUsage;
  }

  decode::PipelineConfig cfg;
  cfg.model_id = backend_args.model;
  cfg.throughput_tokens_per_s = throughput;
  cfg.pricing = {price_in, price_out};

  auto backend = make_backend(backend_args);
  std::unique_ptr<decode::eval::Judge> judge;
  if (judge_kind == "keyword-mock") {
    judge = std::make_unique<decode::eval::KeywordJudge>();
  } else if (judge_kind == "live") {
    judge = std::make_unique<decode::eval::LlmJudge>(*backend, backend_args.model);
  } else {
    std::cerr << "unknown judge: " << judge_kind << "\n";
    return kExitUsage;
  }

  auto outcome =
      decode::eval::run_eval(*backend, examples, cfg, *judge, zero_shot, concurrency);

  std::cout << decode::eval::format_report(outcome.report,
                                           decode::eval::ReportFormat::table);
  std::printf(
      "\nUsage: mean input %.2f tok, mean output %.2f tok, "
      "mean cost $%.3f, mean latency %.2f s\n",
      outcome.usage.mean_input_tokens, outcome.usage.mean_output_tokens,
      outcome.usage.mean_cost, outcome.usage.mean_latency_s);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    decode::eval::emit_report(outcome.report, decode::eval::ReportFormat::table,
                              out_dir + "/score_report.txt");
    decode::eval::emit_report(outcome.report, decode::eval::ReportFormat::machine,
                              out_dir + "/score_report.json");
    nlohmann::json usage = {
        {"mean_input_tokens", outcome.usage.mean_input_tokens},
        {"mean_output_tokens", outcome.usage.mean_output_tokens},
        {"mean_cost", decode::round3(outcome.usage.mean_cost)},
        {"mean_latency_s", outcome.usage.mean_latency_s},
        {"n", outcome.usage.n},
    };
    const std::string tmp = out_dir + "/usage_summary.json.tmp";
    std::ofstream(tmp) << usage.dump(2) << "\n";
    std::filesystem::rename(tmp, out_dir + "/usage_summary.json");
  }
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& inputs, double throughput,
               double price_in, double price_out) {
  std::vector<std::string> files;
  for (const auto& in : inputs) {
    if (std::filesystem::is_directory(in)) {
      for (const auto& entry : std::filesystem::directory_iterator(in)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
      }
    } else if (std::filesystem::exists(in)) {
      files.push_back(in);
    } else {
      std::cerr << "trace file not found: " << in << "\n";
      return kExitUsage;
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "no trace files given\n";
    return kExitUsage;
  }

  std::vector<decode::PipelineTrace> traces;
  for (const auto& f : files) traces.push_back(decode::load_trace(f));

  // Per-stage means across traces, Table-style layout.
  std::map<decode::Stage, std::pair<decode::UsageStat, size_t>> per_stage;
  for (const auto& t : traces) {
    for (const auto& s : t.stages) {
      per_stage[s.stage].first += decode::UsageStat(s.usage);
      per_stage[s.stage].second += 1;
    }
  }

  std::printf("%-34s %16s %17s %17s\n", "Component", "Avg. Input Tok.",
              "Avg. Output Tok.", "Avg. Latency (s)");
  std::vector<decode::StageUsage> mean_rows;
  for (const auto& [stage, acc] : per_stage) {
    decode::UsageStat mean(acc.first.input_tokens / acc.second,
                           acc.first.output_tokens / acc.second);
    mean_rows.push_back({stage, mean});
    std::printf("%-34s %16.2f %17.2f %17.2f\n", kStageLabels.at(stage).c_str(),
                mean.input_tokens, mean.output_tokens,
                decode::stage_latency(mean, throughput));
  }

  const decode::UsageStat totals = decode::total_usage(mean_rows);
  std::printf("%-34s %16.2f %17.2f %17.2f\n", "Total (parallelized)",
              totals.input_tokens, totals.output_tokens,
              decode::pipeline_latency(mean_rows, throughput));
  std::printf("Avg. Cost ($): %.3f\n",
              decode::round3(decode::cost(totals, {price_in, price_out})));
  return kExitOk;
}

int cmd_prompts(const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& tpl : decode::all_prompt_templates()) {
    const std::string path = out_dir + "/" + tpl.name + ".txt";
    std::ofstream out(path);
    if (!out) {
      std::cerr << "cannot write " << path << "\n";
      return kExitPipeline;
    }
    out << tpl.body << "\n";
  }
  std::cout << "wrote " << decode::all_prompt_templates().size()
            << " templates to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DeCode: context-aware medical QA pipeline"};
  app.require_subcommand(1);

  BackendArgs backend_args;
  double throughput = decode::kDefaultThroughputTokensPerS;
  double price_in = 2.0;
  double price_out = 8.0;

  // run
  auto* run = app.add_subcommand("run", "Run one conversation through the pipeline");
  std::string input, trace_path;
  std::vector<std::string> ablate;
  bool zero_shot = false;
  run->add_option("--input", input, "Conversation JSON file")->required();
  run->add_option("--model", backend_args.model, "Model id for the backend");
  run->add_option("--mock", backend_args.mock_script, "Mock script JSON file");
  run->add_option("--ablate", ablate, "Module to remove (repeatable)")
      ->check(CLI::IsMember({"profiler", "formulator", "strategist"}));
  run->add_flag("--zero-shot", zero_shot, "Zero-shot baseline instead of the pipeline");
  run->add_option("--trace", trace_path, "Write the run trace to this file");
  run->add_option("--throughput", throughput, "Modeled output tokens per second");
  run->add_option("--price-in", price_in, "Input price per 1M tokens");
  run->add_option("--price-out", price_out, "Output price per 1M tokens");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a dataset with rubric grading");
  std::string dataset, judge = "keyword-mock", out_dir;
  size_t limit = 0, concurrency = 1;
  eval->add_option("--dataset", dataset, "JSONL dataset file")->required();
  eval->add_option("--judge", judge, "Judge: live or keyword-mock")
      ->check(CLI::IsMember({"live", "keyword-mock"}));
  eval->add_option("--model", backend_args.model, "Model id for the backend");
  eval->add_option("--mock", backend_args.mock_script, "Mock script JSON file");
  eval->add_flag("--zero-shot", zero_shot, "Zero-shot baseline instead of the pipeline");
  eval->add_option("--limit", limit, "Evaluate at most N examples");
  eval->add_option("--concurrency", concurrency, "Examples in flight")
      ->default_val(1);
  eval->add_option("--out", out_dir, "Directory for report files");
  eval->add_option("--throughput", throughput, "Modeled output tokens per second");
  eval->add_option("--price-in", price_in, "Input price per 1M tokens");
  eval->add_option("--price-out", price_out, "Output price per 1M tokens");

  // report
  auto* report = app.add_subcommand("report", "Print a metering table from traces");
  std::vector<std::string> trace_inputs;
  report->add_option("traces", trace_inputs, "Trace files or directories")
      ->required();
  report->add_option("--throughput", throughput, "Modeled output tokens per second");
  report->add_option("--price-in", price_in, "Input price per 1M tokens");
  report->add_option("--price-out", price_out, "Output price per 1M tokens");

  // prompts
  auto* prompts = app.add_subcommand("prompts", "Export prompt templates for audit");
  std::string prompts_out;
  prompts->add_option("--out", prompts_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) {
      return cmd_run(input, backend_args, ablate, zero_shot, trace_path, throughput,
                     price_in, price_out);
    }
    if (*eval) {
      return cmd_eval(dataset, backend_args, judge, zero_shot, limit, concurrency,
                      out_dir, throughput, price_in, price_out);
    }
    if (*report) {
      return cmd_report(trace_inputs, throughput, price_in, price_out);
    }
    if (*prompts) {
      return cmd_prompts(prompts_out);
    }
  } catch (const decode::PipelineError& e) {
    std::cerr << "pipeline failed: " << e.what() << "\n";
    return kExitPipeline;
  } catch (const decode::AuthError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const decode::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPipeline;
  }
  return kExitUsage;
}
