#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vis_presence/error.hpp"
#include "vis_presence/presence_vectors.hpp"
#include "vis_presence/sim.hpp"

namespace {

using namespace vis_presence;

constexpr int kExitChecksFailed = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidScenario, "cannot read " + path);
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
  if (!out) throw Error(ErrorCode::InvalidScenario, "cannot write " + path);
}

int report(const sim::Trace& trace, const std::vector<std::string>& properties) {
  if (properties.empty()) return 0;
  const sim::Report r = sim::check(trace, properties);
  for (const auto& result : r.results) {
    std::cout << result.name << ": " << (result.passed ? "PASS" : "FAIL");
    if (result.first_violation_tick) std::cout << " at tick " << *result.first_violation_tick;
    if (!result.detail.empty()) std::cout << " (" << result.detail << ")";
    std::cout << "\n";
  }
  return r.all_passed() ? 0 : kExitChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic multi-client presence simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> checks;
  std::string trace_path;
  auto* run = app.add_subcommand("run", "run a scenario and optionally check properties");
  run->add_option("scenario", scenario_path, "scenario JSON")->required();
  run->add_option("--seed", seed, "overrides the scenario's seed");
  run->add_option("--check", checks, "properties to check, or 'all'")->delimiter(',');
  run->add_option("--trace", trace_path, "write the JSON-lines trace here");

  std::string check_trace;
  auto* check = app.add_subcommand("check", "check properties of a recorded trace");
  check->add_option("trace", check_trace, "JSON-lines trace")->required();
  check->add_option("--check", checks, "properties to check, or 'all'")->delimiter(',')->required();

  std::string vectors_path;
  std::uint64_t vectors_seed = 7;
  auto* vectors = app.add_subcommand("export-vectors", "write presence transition-table test vectors");
  vectors->add_option("--out", vectors_path, "output JSON path")->required();
  vectors->add_option("--seed", vectors_seed, "seed for the random walks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      sim::Scenario scenario = sim::Scenario::parse(read_file(scenario_path));
      if (seed) scenario.seed = *seed;
      const sim::Trace trace = sim::run(scenario);
      if (!trace_path.empty()) write_file(trace_path, trace.to_jsonl());
      return report(trace, checks);
    }
    if (*check) return report(sim::Trace::from_jsonl(read_file(check_trace)), checks);
    write_file(vectors_path, presence::transition_vectors(vectors_seed).dump(2) + "\n");
  } catch (const Error& e) {
    std::cerr << "vis-presence-sim: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
