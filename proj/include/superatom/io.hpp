#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "superatom/analytics.hpp"
#include "superatom/coupling.hpp"
#include "superatom/fitting.hpp"
#include "superatom/fock_oracle.hpp"

namespace superatom {

inline constexpr const char* kToolVersion = "0.1.0";

// Inclusive uniform time grid.
struct GridSpec {
    double t_start = 0.0;
    double t_end = 0.0;
    int n_points = 0;

    void validate() const;  // finite, t_end > t_start, n_points >= 2
    std::vector<double> times() const;
};

struct CorrelateConfig {
    int n_grid = 64;
    double floor = 1e-12;
};

struct CouplingConfig {
    CloudGeometry cloud;
    BeamAndLasers beam;
};

struct FitConfig {
    std::vector<std::string> trace_files;  // relative to the config file
    std::array<std::optional<ParamBounds>, 3> free;  // indexed by FitParam
    std::array<std::optional<double>, 3> fixed;
    int starts = 5;
    int max_evaluations = 4000;
    double photon_scale = 1.0;
    double population_scale = 1.0;
};

struct OracleSection {
    FockOracleConfig config;  // kappa_per_us is filled from params at run time
    FewPhotonInput input;
};

struct OutputConfig {
    std::string directory = ".";
    std::string format = "csv";  // tabular outputs: csv | json
};

// Strict-schema run configuration.  Sections exist only when the document
// provides them; each subcommand demands the sections it consumes.
struct RunConfig {
    std::optional<SuperatomParams> params;
    std::optional<PulseSpec> pulse;
    std::optional<GridSpec> grid;
    std::optional<CorrelateConfig> correlate;
    std::optional<CouplingConfig> coupling;
    std::optional<FitConfig> fit;
    std::optional<OracleSection> oracle;
    std::optional<PhaseDiagramSpec> phase_diagram;
    OutputConfig output;
};

// Unknown or ill-typed keys are rejected with the offending key path;
// `origin` labels messages (usually the file path).
RunConfig parse_config(const std::string& text, const std::string& origin);
RunConfig load_config(const std::string& path);

// Pulse serialization shared by the config schema and trace-file metadata.
std::string pulse_to_json(const PulseSpec& pulse);
PulseSpec pulse_from_json(const std::string& text, const std::string& origin);

// Trace files carry '# kind=...' and '# pulse=...' metadata comments, a
// 'time_us,value,sem' header, then one row per point with floats at 17
// significant digits, so write(read(f)) reproduces f byte for byte.
TraceData read_trace_csv(const std::string& path);
void write_trace_csv(const std::string& path, const TraceData& trace);

// Numeric table with leading comment lines, written as CSV ('# ' comments,
// header row, data rows) or as a JSON document with the same three fields.
struct Table {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};
void write_table(const std::string& path, const Table& table,
                 const std::string& format);

// Every writer lands on a temp-file-plus-rename so a crash never leaves a
// truncated file under the final name.
void write_text_atomic(const std::string& path, const std::string& content);

std::string format_double(double v);  // %.17g, parses back to the same bits

// Manifest document for one run: tool version, subcommand, seed, thread
// count, the resolved configuration, and the produced files.  Feeding the
// embedded config back through the same subcommand reproduces the outputs.
std::string manifest_json(const std::string& subcommand, const RunConfig& cfg,
                          std::uint64_t seed, int threads,
                          const std::vector<std::string>& outputs);

}  // namespace superatom
