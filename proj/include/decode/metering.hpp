#pragma once
// Token, cost and latency accounting. Latency is modeled as output
// tokens over a fixed generation throughput; wall-clock timings are
// never mixed into these figures.

#include <vector>

#include "decode/domain.hpp"

namespace decode {

inline constexpr double kDefaultThroughputTokensPerS = 70.0;

struct PricingModel {
  // Defaults are back-derived per-1M-token prices that reproduce the
  // published cost figures; configurable since providers vary.
  double input_per_1m = 2.0;
  double output_per_1m = 8.0;
};

class NonPositiveThroughput : public Error {
 public:
  NonPositiveThroughput() : Error("throughput must be > 0 tokens/s") {}
};

class EmptyAggregate : public Error {
 public:
  EmptyAggregate() : Error("nothing to aggregate") {}
};

// Fractional token counts so per-sample averages (and published
// averaged rows) flow through the same arithmetic as exact counts.
struct UsageStat {
  double input_tokens = 0;
  double output_tokens = 0;

  UsageStat() = default;
  UsageStat(double in, double out) : input_tokens(in), output_tokens(out) {}
  UsageStat(const TokenUsage& u)
      : input_tokens(static_cast<double>(u.input_tokens)),
        output_tokens(static_cast<double>(u.output_tokens)) {}

  UsageStat& operator+=(const UsageStat& o) {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    return *this;
  }
};

struct StageUsage {
  Stage stage = Stage::zero_shot;
  UsageStat usage;
};

double stage_latency(const UsageStat& usage, double throughput);

UsageStat total_usage(const std::vector<StageUsage>& stages);

// Critical-path latency: the three extraction stages run in parallel,
// so only the slowest of them counts; every other stage is sequential.
double pipeline_latency(const std::vector<StageUsage>& stages, double throughput);

double cost(const UsageStat& usage, const PricingModel& p);

// Reporting precision for cost figures.
double round3(double v);

struct UsageSummary {
  double mean_input_tokens = 0;
  double mean_output_tokens = 0;
  double mean_cost = 0;
  double mean_latency_s = 0;
  size_t n = 0;
};

struct TraceTotals {
  UsageStat usage;
  double latency_s = 0;
};

UsageSummary aggregate(const std::vector<TraceTotals>& traces, const PricingModel& p);

}  // namespace decode
