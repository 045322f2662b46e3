#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "drst/errors.hpp"
#include "drst/harness.hpp"

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw drst::harness::ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace drst::harness;

  CLI::App app{"Doubly-robust self-training experiments"};
  std::string experiment;
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  std::optional<std::uint64_t> seed_override;
  unsigned threads = 1;

  app.add_option("experiment", experiment,
                 "estimate | mse-sweep | gradient-scaling | mismatch-check | variance-check | curriculum-train | "
                 "gradient-check")
      ->required();
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_path, "report path (default: the config's output, else stdout)");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed-override", seed_override, "replace the config's seed");
  app.add_option("--threads", threads, "worker threads for Monte Carlo trials (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const std::filesystem::path cfg_file(config_path);
    const ExperimentConfig config =
        parse_config_text(read_file(cfg_file), experiment, seed_override, cfg_file.parent_path());
    const auto rows = run_experiment(config, RunOptions{threads});
    const ReportFormat fmt = report_format_from_string(format);

    std::string target = out_path;
    if (target.empty() && config.output) target = *config.output;
    if (target.empty()) {
      emit_report(rows, fmt, std::cout);
      return 0;
    }
    emit_report(rows, fmt, std::filesystem::path(target));
    std::ofstream echo(target + ".config.json", std::ios::binary | std::ios::trunc);
    echo << config.canonical.dump() << '\n';
    if (!echo) throw std::runtime_error("failed to write config echo");
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const drst::DataError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const drst::NumericalError& e) {
    std::cerr << "numerical failure";
    if (e.trial()) std::cerr << " in trial " << *e.trial();
    std::cerr << ": " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
