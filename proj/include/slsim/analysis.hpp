#pragma once

#include "slsim/dynamics.hpp"
#include "slsim/field_solver.hpp"
#include "slsim/scenario.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace slsim {

struct BrightDark {
    cplx bright{};
    SpinwaveProfile dark;
};

// bright = trapezoid mean of S, dark = S - bright.
BrightDark bright_dark_decompose(const SpinwaveProfile& s);

cplx integrated_amplitude(std::span<const cplx> s);
inline cplx integrated_amplitude(const SpinwaveProfile& s) { return integrated_amplitude(s.values()); }

// Integral of exp(-i a xi) S(xi): the integrated amplitude in the frame
// where the dispersive phase a xi shared by both probes is removed.
cplx integrated_amplitude(std::span<const cplx> s, double gauge);

// Shared dispersive wavenumber a = (Re alpha+ - Re alpha-) / 2 of a record
// whose spinwave carries it (full dispersion or three-level tier), else 0.
double gauge_wavenumber(const SimulationRecord& rec);

struct FitWindow {
    double t_start = 0.0;
    double t_end = 0.0;
};

struct DecayFit {
    double rate = 0.0;       // -slope of ln(values), same time unit as the input
    double amplitude = 0.0;  // fitted value at t = 0
    double stderr_rate = 0.0;
    FitWindow window;
    double residual_rms = 0.0; // of ln(values)
    std::size_t samples = 0;
};

// Least-squares line through ln(values) for t in [t_start, t_end].
// Throws ValidationError for fewer than 8 samples or non-positive values.
DecayFit fit_decay_rate(std::span<const double> times, std::span<const double> values, FitWindow window);

// L2 distance between the unit-normalised magnitudes of two profiles,
// in [0, 2]. Throws ValidationError when either profile has zero norm.
double stationarity_metric(std::span<const cplx> a, std::span<const cplx> b);

// Same, between the recorded samples at t1 and t2. The times must be sample
// times of the record to within half a time step.
double stationarity_metric(const SimulationRecord& rec, double t1, double t2);

// Index of the recorded sample at time t (within half a time step).
std::size_t sample_index(const SimulationRecord& rec, double t);

struct GemOracle {
    SpinwaveProfile profile;
    bool outside_window = false; // a sideband lies outside |w| < |eta|/2
};

// Stored spinwave predicted by the gradient-echo Fourier relation
//   S(xi) = sqrt(eta Gamma / 2 pi) * integral exp(i ((xi - 1/2) eta + offset)(t - tc)) E(t) dt
// evaluated by composite Simpson over tc +- 12 tau.
GemOracle gem_fourier_oracle(const ProbePulse& pulse, double eta, double gamma, std::size_t n_points = 512,
                             double detuning_offset = 0.0);

enum class MemoryHalf { lower, upper, full };

struct AreaCheck {
    double ratio = 1.0;      // measured / predicted
    double measured = 0.0;   // integral of |S|^2 over the chosen range
    double predicted = 0.0;  // (Gamma/2) integral |E|^2 dt, or Gamma integral |E|^2 dt for the full memory
    bool degenerate = false; // zero pulse: ratio defined as 1
};

AreaCheck area_relation_check(const SpinwaveProfile& s, const ProbePulse& pulse, double gamma, MemoryHalf half);

// Integral of |S|^2 over [a, b] with |S|^2 interpolated linearly between
// grid points, matching the trapezoid rule on the full interval.
double integrate_abs2(std::span<const cplx> s, double a, double b);

struct XpmParams {
    double gamma = 0.0;
    double delta_s = 0.0;
    double sigma_over_a = 0.0;
    double d = 0.0;
    double omega_c = 0.0;
    double delta_c = 0.0;
};

void validate(const XpmParams& p);

// -(Gamma / Delta_s) (sigma / A) d / 32
double xpm_phase_closed(const XpmParams& p);

// Integral from t0 of Delta_AC(t) = -Omega_s(t)^2 / (4 Delta_s) with
//   Omega_s^2 = (d sigma Gamma^2 / 2A)(Omega_c^2/Delta_c^2) exp(4 Gamma (Omega_c^2/Delta_c^2)(t0 - t)),
// by adaptive Simpson up to where the integrand has fallen to 1e-12 of its
// initial value. Throws ValidationError when Omega_c = 0.
double xpm_phase_numeric(const XpmParams& p, double t0 = 0.0);

// Adaptive Simpson quadrature of f on [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 50);

// Interior local maxima whose value is at least min_relative of the
// series maximum.
std::vector<std::size_t> local_maxima(std::span<const double> values, double min_relative);

// Ordered key=value block with full-precision numbers.
class Summary {
public:
    void add(const std::string& key, double value);
    void add(const std::string& key, const std::string& value);
    void add(const std::string& key, cplx value); // key_re, key_im, key_abs

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    std::string str() const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// Formats a double with 17 significant digits.
std::string format_number(double v);

struct AnalysisOptions {
    // Fit windows default to the analysis stage; negative values mean unset.
    double bright_fit_end = -1.0;
    double dark_fit_start = -1.0;
    bool include_ledger = true;
};

// Standard report for a run: predicted rates, bright-state and long-time
// fits, stationarity, integrated amplitudes, per-stage emission and the
// excitation ledger. The analysis window is the first stage with both
// controls on, or the whole run when there is none.
Summary analyze_record(const SimulationRecord& rec, const Timeline& tl, const AnalysisOptions& opt = {});

} // namespace slsim
