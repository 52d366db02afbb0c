#pragma once

#include "slsim/analysis.hpp"
#include "slsim/config.hpp"
#include "slsim/dynamics.hpp"
#include "slsim/imaging.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace slsim {

namespace fs = std::filesystem;

// Output file names written by a run.
inline constexpr const char* kRunFiles[] = {"detectors.csv", "spinwave.csv", "fields_plus.csv",
                                            "fields_minus.csv", "summary.txt", "config.echo"};

// Runs the configured simulation and writes every output file into `out`.
// On failure the files already written are removed and the error rethrown.
Summary execute_run(const RunConfig& cfg, const fs::path& out);

void write_detectors_csv(const fs::path& path, const SimulationRecord& rec);
// First row "xi,<grid>", then one row per sample: t_us followed by re,im pairs.
void write_history_csv(const fs::path& path, const std::vector<double>& xi, const std::vector<double>& times,
                       const std::vector<std::vector<cplx>>& history);

struct HistoryTable {
    std::vector<double> xi;
    std::vector<double> times;
    std::vector<std::vector<cplx>> rows;
};
HistoryTable read_history_csv(const fs::path& path);

struct DetectorTable {
    std::vector<double> times;
    std::vector<cplx> fwd;
    std::vector<cplx> bwd;
};
DetectorTable read_detectors_csv(const fs::path& path);

// Recomputes the summary from the CSV files and config.echo in `dir`.
Summary reanalyze(const fs::path& dir);

struct SweepRun {
    std::string value;
    fs::path dir;
    int status = 0; // exit code of the run
    std::string error;
    Summary summary;
};

// Runs one simulation per value of section.key, concurrently, into
// numbered subdirectories of `out`, then writes sweep_summary.csv in the
// declared value order.
std::vector<SweepRun> run_sweep(const ConfigDocument& base, const std::string& section, const std::string& key,
                                const std::vector<std::string>& values, const fs::path& out,
                                unsigned threads = 0);

// Averages the I0 and I frame lists, reduces them to an |S| map and writes
// spinwave_map.csv, spinwave_map.pgm and image_summary.txt into `out`.
SpinwaveMap reduce_images(const std::vector<fs::path>& i0_frames, const std::vector<fs::path>& i_frames,
                          const fs::path& out, double floor = 1e-12);

// Synthesises I0/I from a map (a deterministic test map when map_csv is
// empty), reduces them again and returns the largest deviation from sqrt(k) s.
double image_roundtrip(const fs::path& map_csv, double k, double i0_level, const fs::path& out);

// Exit codes: 0 success, 1 validation error, 2 numeric/runtime error.
int exit_code(const std::exception& e);

// Entry point of the command-line tool.
int cli_main(int argc, char** argv);

} // namespace slsim
