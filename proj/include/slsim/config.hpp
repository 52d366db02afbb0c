#pragma once

#include "slsim/analysis.hpp"
#include "slsim/dynamics.hpp"
#include "slsim/scenario.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace slsim {

// Sectioned key=value text as written by the user, with source lines kept
// for error messages. [stage] may repeat; every other section appears once.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

struct ConfigSection {
    std::string name;
    int line = 0;
    std::vector<ConfigEntry> entries;
};

struct ConfigDocument {
    std::vector<ConfigSection> sections;
};

ConfigDocument parse_document(const std::string& text);

// Sets section.key (section must not be "stage"), appending the section or
// key when absent.
void set_value(ConfigDocument& doc, const std::string& section, const std::string& key, const std::string& value);

// Parses a number, also accepting multiples and fractions of pi:
// "pi", "-pi", "pi/2", "0.5*pi", "3*pi/4".
double parse_number(const std::string& text);

struct SpinwaveSpec {
    std::string shape = "zero"; // zero | uniform | dual_gaussian
    double center1 = 0.3;
    double center2 = 0.7;
    double width = 0.05;
    double phase = 0.0;
    double amplitude = 1.0;

    bool operator==(const SpinwaveSpec&) const = default;
};

struct PulseSpec {
    double amplitude = 1.0;
    double tau_us = 1.0;
    double center_us = 0.0;
    double sideband_plus_mhz = 0.0;
    double sideband_minus_mhz = 0.0;
    double phase = 0.0;

    bool operator==(const PulseSpec&) const = default;
};

struct StageSpec {
    std::string label;
    double duration_us = 0.0;
    double rabi_plus_mhz = 0.0;
    double rabi_minus_mhz = 0.0;
    std::optional<double> rabi_plus_end_mhz;
    std::optional<double> rabi_minus_end_mhz;
    int gradient = 0;
    double detuning_offset_mhz = 0.0;
    bool cancel_light_shift = false;
    bool pulse = false;
    std::string input_face = "forward";

    bool operator==(const StageSpec&) const = default;
};

struct RunConfig {
    // [run]
    Tier tier = Tier::adiabatic;
    ModelOptions model;
    std::string output_dir = "out";

    // [params], laboratory units as given
    std::map<std::string, double> lab;

    // [grid]
    GridSpec grid;

    // [scenario]
    std::string preset = "explicit"; // paper_experiment | stationary_light | explicit
    double rabi_mhz = 0.0;
    std::optional<double> write_rabi_mhz;
    std::optional<double> rabi_plus_mhz;  // stationary_light overrides
    std::optional<double> rabi_minus_mhz;
    double duration_us = 0.0;             // stationary_light
    double t_write_us = 0.0;
    std::optional<double> t_rephase_us;
    double t_sl_us = 0.0;
    double t_recall_us = 0.0;
    bool backward_control = true;
    bool compensate_light_shift = true;

    SpinwaveSpec spinwave;
    std::optional<PulseSpec> pulse;
    std::vector<StageSpec> stages;

    // [analysis]
    std::optional<double> bright_fit_end_us;
    std::optional<double> dark_fit_start_us;

    bool operator==(const RunConfig&) const = default;
};

// Parses and validates a configuration. Unknown sections or keys, malformed
// values and inconsistent settings throw ValidationError naming the line.
RunConfig parse_config(const std::string& text);
RunConfig resolve_config(const ConfigDocument& doc);

// Canonical text with every default written out; parse_config(echo) == cfg.
std::string echo_config(const RunConfig& cfg);

PhysicalParams physical_params(const RunConfig& cfg);
Timeline build_timeline(const RunConfig& cfg);
EnsembleState build_initial_state(const RunConfig& cfg);
AnalysisOptions analysis_options(const RunConfig& cfg);
std::optional<ProbePulse> probe_pulse(const RunConfig& cfg);

// Every section.key accepted by the parser that holds a number.
bool is_numeric_key(const std::string& section, const std::string& key);

} // namespace slsim
