#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = DECODE_CLI_PATH;
const std::string kFixtures = FIXTURE_DIR;

struct RunResult {
  int exit_code;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args) {
  const auto out_path = fs::temp_directory_path() / "decode_cli_stdout.txt";
  const std::string cmd = kCli + " " + args + " > " + out_path.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out_path);
  std::stringstream buf;
  buf << in.rdbuf();
  return {WEXITSTATUS(status), buf.str()};
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("run with mock script writes a five-stage trace") {
  const auto trace = temp_path("decode_cli_trace.json");
  auto r = run_cli("run --input " + kFixtures + "/conversation.json --mock " +
                   kFixtures + "/script.json --trace " + trace.string());
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("headache") != std::string::npos);

  std::ifstream in(trace);
  nlohmann::json j;
  in >> j;
  CHECK(j.at("stages").size() == 5);
  fs::remove(trace);
}

TEST_CASE("run --zero-shot writes a single-stage trace") {
  const auto trace = temp_path("decode_cli_zs_trace.json");
  auto r = run_cli("run --zero-shot --input " + kFixtures +
                   "/conversation.json --mock " + kFixtures + "/script.json --trace " +
                   trace.string());
  CHECK(r.exit_code == 0);
  std::ifstream in(trace);
  nlohmann::json j;
  in >> j;
  CHECK(j.at("stages").size() == 1);
  CHECK(j.at("final").at("source_stage") == "zero_shot");
  fs::remove(trace);
}

TEST_CASE("run --ablate profiler records three backend calls") {
  const auto trace = temp_path("decode_cli_ablate_trace.json");
  auto r = run_cli("run --ablate profiler --input " + kFixtures +
                   "/conversation.json --mock " + kFixtures + "/script.json --trace " +
                   trace.string());
  CHECK(r.exit_code == 0);
  std::ifstream in(trace);
  nlohmann::json j;
  in >> j;
  CHECK(j.at("stages").size() == 3);
  fs::remove(trace);
}

TEST_CASE("run with missing input exits 2") {
  auto r = run_cli("run --input /nonexistent.json --mock " + kFixtures +
                   "/script.json");
  CHECK(r.exit_code == 2);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("run").exit_code == 2);  // --input is required
  CHECK(run_cli("eval --dataset /nonexistent.jsonl --mock " + kFixtures +
                "/script.json")
            .exit_code == 2);
}

TEST_CASE("eval with mock backend and keyword judge writes reports") {
  const auto out_dir = temp_path("decode_cli_eval_out");
  fs::remove_all(out_dir);
  auto r = run_cli("eval --dataset " + kFixtures + "/dataset.jsonl --judge "
                   "keyword-mock --mock " + kFixtures + "/script.json --out " +
                   out_dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("Overall Score") != std::string::npos);
  CHECK(fs::exists(out_dir / "score_report.txt"));
  CHECK(fs::exists(out_dir / "score_report.json"));
  CHECK(fs::exists(out_dir / "usage_summary.json"));
  fs::remove_all(out_dir);
}

TEST_CASE("eval --limit caps the number of examples") {
  auto r = run_cli("eval --dataset " + kFixtures + "/dataset.jsonl --judge "
                   "keyword-mock --mock " + kFixtures + "/script.json --limit 2");
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("Examples: 2") != std::string::npos);
}

TEST_CASE("report prints the per-stage table from a trace") {
  const auto trace = temp_path("decode_cli_report_trace.json");
  run_cli("run --input " + kFixtures + "/conversation.json --mock " + kFixtures +
          "/script.json --trace " + trace.string());
  auto r = run_cli("report " + trace.string());
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("Clinical Indicators (Formulator)") != std::string::npos);
  CHECK(r.stdout_text.find("Total (parallelized)") != std::string::npos);
  CHECK(r.stdout_text.find("Avg. Cost ($):") != std::string::npos);
  fs::remove(trace);
}

TEST_CASE("report on an empty directory exits 2") {
  const auto dir = temp_path("decode_cli_empty_traces");
  fs::create_directories(dir);
  auto r = run_cli("report " + dir.string());
  CHECK(r.exit_code == 2);
  fs::remove_all(dir);
}

TEST_CASE("prompts export writes the five templates") {
  const auto dir = temp_path("decode_cli_prompts");
  fs::remove_all(dir);
  auto r = run_cli("prompts --out " + dir.string());
  CHECK(r.exit_code == 0);
  for (const char* name :
       {"background", "needs", "checklist", "strategy", "synthesis"}) {
    CHECK(fs::exists(dir / (std::string(name) + ".txt")));
  }
  fs::remove_all(dir);
}
