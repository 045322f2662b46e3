#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "drst/data_model.hpp"
#include "drst/losses.hpp"
#include "drst/optim.hpp"
#include "drst/synth.hpp"

namespace drst::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment {
  estimate,
  mse_sweep,
  gradient_scaling,
  mismatch_check,
  variance_check,
  curriculum_train,
  gradient_check,
};

std::string_view to_string(Experiment e);
Experiment experiment_from_string(std::string_view name);

// Datasets given directly (inline arrays or CSV files).
struct FixedData {
  UnlabeledSet unlabeled;
  LabeledSet labeled;
};

using GeneratorConfig = std::variant<std::monostate, LinearGaussianSpec, DiscreteMismatchSpec, FixedData>;

struct Grid {
  std::vector<std::size_t> m;
  std::vector<double> m_over_n;  // alternative to m: m = round(ratio * n)
  std::vector<std::size_t> n;
  std::vector<std::size_t> trials;
  std::vector<double> teacher_bias;
  std::vector<double> teacher_noise;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::estimate;
  std::uint64_t seed = 0;
  std::optional<std::string> output;
  GeneratorConfig generator;
  TeacherSpec teacher;
  std::optional<TeacherSpec> calibrated_teacher;
  LossModel model = LossModel::squared_error(1);
  std::vector<LossKind> losses;
  Grid grid;
  CurriculumSchedule schedule = CurriculumSchedule::linear(20);
  OptimSettings optimizer;
  std::optional<std::vector<double>> theta;
  double weight = 1.0;  // constant pi where no exact density ratio is known
  double alpha = 0.5;   // CURR loss in estimate / gradient-check

  nlohmann::json canonical;  // the document the hash is computed from
  std::string hash;
};

// Parses and validates a config document. Unknown keys, missing required
// keys, empty grids and invalid specs raise ConfigError. `experiment_override`
// fills or must match the "experiment" key; `seed_override` replaces "seed".
ExperimentConfig parse_config(const nlohmann::json& doc, std::optional<std::string_view> experiment_override = {},
                              std::optional<std::uint64_t> seed_override = {},
                              const std::filesystem::path& base_dir = {});
ExperimentConfig parse_config_text(std::string_view text, std::optional<std::string_view> experiment_override = {},
                                   std::optional<std::uint64_t> seed_override = {},
                                   const std::filesystem::path& base_dir = {});

// 16 hex digits of FNV-1a/64 over the compact sorted-key dump.
std::string config_hash(const nlohmann::json& canonical);

struct ResultRow {
  std::string experiment;
  std::string config_hash;
  std::size_t m = 0;
  std::size_t n = 0;
  std::string kind;
  std::string statistic;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;

  bool operator==(const ResultRow&) const = default;
};

struct RunOptions {
  unsigned threads = 1;
};

// Deterministic for a given config; the thread count never changes the rows.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

enum class ReportFormat { csv, json };

ReportFormat report_format_from_string(std::string_view name);

void emit_report(const std::vector<ResultRow>& rows, ReportFormat format, std::ostream& out);
void emit_report(const std::vector<ResultRow>& rows, ReportFormat format, const std::filesystem::path& path);
std::string render_report(const std::vector<ResultRow>& rows, ReportFormat format);

std::vector<ResultRow> parse_rows_json(std::string_view text);

}  // namespace drst::harness
