#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "interlace/lattice.hpp"

namespace interlace {

/// Version string compiled into the library.
const char* version();

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> names = {"vacancy-law", "capacity-scaling", "correlation",
                                                 "qn-sweep",    "eta-curve",        "ustar-bracket",
                                                 "cascade-dump", "induction-report"};
  return names;
}

struct ExperimentConfig {
  std::string command;
  int dim = 3;
  std::vector<double> u_grid;            // --u / --u-grid; empty: command default
  std::vector<std::int64_t> L_grid;      // --L / --L-grid; empty: command default
  std::string window;                    // window spec list; empty: command default
  std::uint64_t reps = 10000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  double c1 = 1.0, c2 = 1.0;
  int levels = 3;                        // cascade levels for cascade-dump / induction-report
  std::string out;                       // empty: stdout

  /// Throws ConfigError on the first invalid field.
  void validate() const;
  /// One-line JSON echo of every field.
  std::string to_json() const;
  /// Overlays the keys present in a JSON object onto this config.
  void merge_json(const std::string& text);
};

/// Window specs: "point", "pair:R" ({0, R e_1}), "ball:R" (B(0, R)),
/// "plane:M" ([-M, M]^2 x {0}), "rect:x0,x1,y0,y1". Lists are separated
/// by ';'.
Window parse_window(const std::string& spec, int dim);
std::vector<std::string> split_window_list(const std::string& list);

struct ResultRecord {
  ExperimentConfig config;
  std::vector<std::string> method_tags;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> summary;
  double wall_seconds = 0;
  /// Non-CSV payload (cascade-dump JSON, induction text table).
  std::string text;

  const std::string& summary_value(const std::string& key) const;
  /// Commented header block, column line, rows, commented summary.
  std::string csv() const;
};

ResultRecord cmd_vacancy_law(const ExperimentConfig& config);
ResultRecord cmd_capacity_scaling(const ExperimentConfig& config);
ResultRecord cmd_correlation(const ExperimentConfig& config);
ResultRecord cmd_qn_sweep(const ExperimentConfig& config);
ResultRecord cmd_eta_curve(const ExperimentConfig& config);
ResultRecord cmd_ustar_bracket(const ExperimentConfig& config);
ResultRecord cmd_cascade_dump(const ExperimentConfig& config);
ResultRecord cmd_induction_report(const ExperimentConfig& config);

/// Validates the config and dispatches on config.command.
ResultRecord run_experiment(const ExperimentConfig& config);

/// Writes the record to config.out (or stdout when empty): the CSV, or the
/// JSON for cascade-dump. induction-report also writes its text table to
/// <out>.txt, or after the CSV on stdout.
void write_record(const ResultRecord& record);

}  // namespace interlace
