#include "decode/metering.hpp"

#include <algorithm>
#include <cmath>

namespace decode {

double stage_latency(const UsageStat& usage, double throughput) {
  if (throughput <= 0) throw NonPositiveThroughput();
  return usage.output_tokens / throughput;
}

UsageStat total_usage(const std::vector<StageUsage>& stages) {
  UsageStat total;
  for (const auto& s : stages) total += s.usage;
  return total;
}

double pipeline_latency(const std::vector<StageUsage>& stages, double throughput) {
  double extraction_max = 0;
  double sequential = 0;
  for (const auto& s : stages) {
    const double lat = stage_latency(s.usage, throughput);
    switch (s.stage) {
      case Stage::profiler_background:
      case Stage::profiler_needs:
      case Stage::formulator:
        extraction_max = std::max(extraction_max, lat);
        break;
      default:
        sequential += lat;
        break;
    }
  }
  return extraction_max + sequential;
}

double cost(const UsageStat& usage, const PricingModel& p) {
  return usage.input_tokens * p.input_per_1m / 1e6 +
         usage.output_tokens * p.output_per_1m / 1e6;
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

UsageSummary aggregate(const std::vector<TraceTotals>& traces, const PricingModel& p) {
  if (traces.empty()) throw EmptyAggregate();
  UsageSummary s;
  for (const auto& t : traces) {
    s.mean_input_tokens += t.usage.input_tokens;
    s.mean_output_tokens += t.usage.output_tokens;
    s.mean_cost += cost(t.usage, p);
    s.mean_latency_s += t.latency_s;
  }
  const double n = static_cast<double>(traces.size());
  s.mean_input_tokens /= n;
  s.mean_output_tokens /= n;
  s.mean_cost /= n;
  s.mean_latency_s /= n;
  s.n = traces.size();
  return s;
}

}  // namespace decode
