#pragma once

// Experiment drivers behind the command-line tool. Each subcommand produces
// one or more CSV tables; writing them (and optional SVG charts) is separate
// so the tables can be inspected in memory.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "coarsen/csv.hpp"
#include "coarsen/lattice.hpp"

namespace coarsen {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OutputFormat { csv, csv_svg };

struct RunConfig {
    std::string subcommand;
    std::vector<double> lambdas;
    std::vector<Index> ms;
    Index p = 1;
    Index q = 1;
    int max_iter = 200;
    /// Steepest descent: relative error change; linearized: relative change per step.
    double tol = 1e-10;
    std::filesystem::path out_dir = ".";
    OutputFormat format = OutputFormat::csv;
    unsigned jobs = 1;
    /// lambda-sweep only: also solve at 8 - lambda and write the symmetry table.
    bool mirror = true;
};

/// Names accepted by default_config and run_experiment.
const std::vector<std::string>& subcommand_names();

/// Defaults for a subcommand; ConfigError for an unknown name.
RunConfig default_config(const std::string& subcommand);

/// Applies one key=value setting. Keys: lambda, m, p, q, max_iter, tol, out,
/// format, jobs, mirror ('-' and '_' are interchangeable). Lists are comma
/// separated; m also accepts an inclusive range "a..b".
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Reads key=value lines ('#' starts a comment) and applies them in order.
void load_config_file(RunConfig& config, const std::filesystem::path& file);

/// ConfigError describing the first invalid field.
void validate(const RunConfig& config);

std::vector<double> parse_double_list(const std::string& text);
std::vector<Index> parse_index_list(const std::string& text);

struct ExperimentResult {
    std::vector<CsvTable> tables;
    /// 0 on success, 3 after a numerical failure or a failed check.
    int exit_code = 0;
    std::string message;
};

/// Runs a validated config. Numerical failures are reported through the
/// result; tables then hold whatever was computed before the failure.
ExperimentResult run_experiment(const RunConfig& config);

/// Writes <name>.csv for every table (and <name>.svg for csv+svg). A nonzero
/// exit code additionally leaves <subcommand>.incomplete holding the message.
void write_outputs(const RunConfig& config, const ExperimentResult& result);

/// validate + run + write. Returns the process exit code (0, 2 or 3) and
/// reports problems on `err`.
int execute(const RunConfig& config, std::ostream& err);

}  // namespace coarsen
