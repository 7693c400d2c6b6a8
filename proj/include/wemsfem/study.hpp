#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wemsfem/hierarchical.hpp"
#include "wemsfem/metrics.hpp"

namespace wemsfem {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class StudyMode { table, pe_sweep, level_sweep };

/// Flat `key = value` configuration. Lists are comma or whitespace separated;
/// `#` starts a comment.
struct StudyConfig {
    StudyMode mode = StudyMode::table;
    std::vector<std::string> examples{"2"};
    std::vector<int> nc{8, 16, 32, 64};
    std::vector<int> levels{0, 1, 2};
    int nf = 1024;
    std::vector<std::string> methods{"wemsfem", "fem", "supg"};
    std::vector<double> epsilons;  ///< pe-sweep only
    int workers = 0;
    int quad_order = 4;
    /// Coarse baseline cells span whole periods of the oscillatory velocities; order 4 misintegrates them.
    int baseline_quad_order = 12;
    EdgeBasisKind basis = EdgeBasisKind::hierarchical;
    SolverRouting routing;
    bool timings = true;  ///< false writes seconds = 0 so output is byte-reproducible
    std::string out;      ///< CSV path; empty means the caller's stream

    static StudyConfig parse(std::istream& in);
    static StudyConfig load(const std::string& path);
};

const char* csv_header();
/// One CSV line (with trailing newline) in the fixed column order of csv_header().
std::string csv_row(const ErrorReport& r);

/// Runs the configured sweep. Each finished row is written to `csv` (if given)
/// before the next run starts; failures become rows with an `error: ...` status.
std::vector<ErrorReport> run_study(const StudyConfig& cfg, std::ostream* csv = nullptr);

struct RunRequest {
    std::string example = "2";
    int nc = 16;
    int level = 0;
    int nf = 1024;
    std::string method = "wemsfem";
    int quad_order = 4;
    int baseline_quad_order = 12;
    int workers = 0;
    EdgeBasisKind basis = EdgeBasisKind::hierarchical;
    SolverRouting routing;
    std::optional<double> epsilon;
};

/// A single run together with the fine-grid field it produced.
struct RunResult {
    ErrorReport report;
    std::vector<double> field;      ///< method solution on the nf grid
    std::vector<double> reference;  ///< u_ref on the nf grid
};

/// Runs one method against a fresh reference solve. Errors propagate.
RunResult run_single(const RunRequest& req);

/// Structured-grid text dump: one `x y value` line per fine node, x fastest.
void write_field(std::ostream& os, const StructuredGrid& grid, const std::vector<double>& values);

}  // namespace wemsfem
