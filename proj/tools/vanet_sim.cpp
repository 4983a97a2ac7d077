#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vanet/config.hpp"
#include "vanet/errors.hpp"
#include "vanet/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void print_table(const std::vector<vanet::ExperimentResult>& results, std::size_t warmup) {
  std::vector<vanet::AlgorithmSummary> rows;
  for (const auto& r : results) rows.push_back({r.algorithm, r.summary});
  vanet::write_comparison(std::cout, rows, warmup);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VANET topology control simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string algorithm;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run one algorithm on a scenario");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--algorithm", algorithm, "hierarchical | greedy | shortest_path | motif");
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_dir, "Output directory (default: experiment.output_dir)");

  auto* compare = app.add_subcommand("compare", "Run all four algorithms and tabulate medians");
  compare->add_option("--config", config_path, "Experiment config file")->required();
  compare->add_option("--out", out_dir, "Output directory")->required();
  compare->add_option("--seed", seed, "Override the scenario seed");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate-config", "Check a config file");
  validate->add_option("config", validate_path, "Config file")->required();

  std::string trace_in;
  std::string trace_out;
  std::string trace_format;
  auto* convert = app.add_subcommand("convert-trace", "Convert an FCD trace to the CSV trace format");
  convert->add_option("--in", trace_in, "Input trace")->required();
  convert->add_option("--out", trace_out, "Output CSV")->required();
  convert->add_option("--format", trace_format, "fcd_xml | csv (default: from the file extension)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*validate) {
      const auto c = vanet::load_config(validate_path);
      std::cout << "ok: " << validate_path << " (" << vanet::to_string(c.algorithm) << ", " << c.steps
                << " steps, seed " << c.seed << ")\n";
      return 0;
    }
    if (*convert) {
      vanet::TraceFormat fmt = vanet::TraceFormat::fcd_xml;
      if (trace_format == "csv" || (trace_format.empty() && std::filesystem::path(trace_in).extension() == ".csv")) {
        fmt = vanet::TraceFormat::csv;
      } else if (!trace_format.empty() && trace_format != "fcd_xml") {
        throw vanet::ConfigError("unknown trace format '" + trace_format + "'");
      }
      std::ifstream in(trace_in);
      if (!in) throw vanet::ConfigError("cannot open " + trace_in);
      const auto snaps = vanet::parse_fcd_trace(in, fmt);
      std::ofstream out(trace_out, std::ios::trunc);
      if (!out) throw vanet::Error("cannot write " + trace_out);
      vanet::write_csv_trace(out, snaps);
      std::cout << "wrote " << snaps.size() << " snapshots to " << trace_out << "\n";
      return 0;
    }

    auto config = vanet::load_config(config_path);
    if (seed) config.seed = *seed;
    if (*run) {
      if (!algorithm.empty()) config.algorithm = vanet::parse_algorithm(algorithm);
      const std::filesystem::path dir = out_dir.empty() ? config.output_dir : std::filesystem::path(out_dir);
      const auto snaps = vanet::build_scenario(config);
      const auto result = vanet::run_to_directory(config, snaps, dir);
      print_table({result}, static_cast<std::size_t>(config.warmup_steps));
      return 0;
    }
    const unsigned threads = vanet::thread_limit_from_env();
    const auto results = vanet::compare_to_directory(config, out_dir, threads);
    print_table(results, static_cast<std::size_t>(config.warmup_steps));
    return 0;
  } catch (const vanet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const vanet::PlacementError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
