#pragma once

#include "slsim/field_solver.hpp"
#include "slsim/model.hpp"
#include "slsim/scenario.hpp"

#include <functional>
#include <string>
#include <vector>

namespace slsim {

enum class Tier { ideal, adiabatic, three_level };

std::string to_string(Tier t);
Tier tier_from_string(const std::string& s);
std::string to_string(DispersionMode m);
DispersionMode dispersion_from_string(const std::string& s);

// Switches for the adiabatic equations of motion.
struct ModelOptions {
    DispersionMode dispersion = DispersionMode::common_phase_removed;
    bool far_detuned = false;   // Delta~ -> Delta (drops Gamma from the couplings)
    bool include_decay = true;  // -gamma' S (ideal tier: gamma0 + Gamma sum Omega^2/Delta^2)
    bool include_stark = true;  // Stark part of delta'

    bool operator==(const ModelOptions&) const = default;
};

// Ideal tier: far-detuned couplings, no dispersion, no Stark shift.
ModelOptions ideal_options(bool include_decay = true);

struct EnsembleState {
    SpinwaveProfile s;
    std::vector<cplx> p_plus;  // three-level tier only, empty otherwise
    std::vector<cplx> p_minus;
    double t = 0.0;
};

EnsembleState initial_state(SpinwaveProfile s, double t0 = 0.0);

// Instantaneous drive seen by the ensemble.
struct DriveSnapshot {
    double omega_plus = 0.0;
    double omega_minus = 0.0;
    int eta_active = 0;
    double detuning_offset = 0.0;
    bool cancel_light_shift = false;
    BoundaryInputs inputs;
};

using DriveFunction = std::function<DriveSnapshot(double t)>;

DriveFunction constant_drive(DriveSnapshot snap);

// Drive of one timeline stage that starts at t_start.
DriveSnapshot stage_drive(const Stage& stage, double t_start, double t);

// One classical RK4 step of
//   dS/dt = -(gamma' + i delta'(xi)) S + i sqrt(d) Gamma (Omega+/D+ E+ + Omega-/D- E-)
// with the fields re-solved from the substage spinwave at every evaluation.
// Throws NumericError when dt (gamma' + coupling rate) >= 0.1 or
// dt max|delta'| >= 0.5.
EnsembleState step_adiabatic(const EnsembleState& state, const PhysicalParams& p, const ModelOptions& opt,
                             const DriveFunction& drive, double dt);

// One exponential-RK4 step of the three-level equations
//   dP+-/dt = -(Gamma + i Delta+-) P+- + i sqrt(d) Gamma E+- + i Omega+- S
//   dS/dt   = -(gamma0 + i delta) S + i Omega+ P+ + i Omega- P-
//   dE+-/dxi = +-i sqrt(d) P+-
// The linear -(Gamma + i Delta) part is integrated exactly. Throws
// NumericError when dt d Gamma >= 1 (explicit field coupling) or
// dt |Gamma + i Delta| >= 50.
EnsembleState step_three_level(const EnsembleState& state, const PhysicalParams& p, bool include_decay,
                               const DriveFunction& drive, double dt);

// Exact solution of dS/dt = -r_bright * integral_0^1 S dxi:
//   S(xi, t) = S(xi, 0) - M0 (1 - exp(-r_bright t)).
SpinwaveProfile ideal_closed_form(const SpinwaveProfile& s0, double r_bright, double t);

struct GridSpec {
    std::size_t n_points = 512;
    double dt = 0.01;
    std::size_t sample_stride = 10;

    bool operator==(const GridSpec&) const = default;
};

struct StageWindow {
    std::string label;
    double t_start = 0.0;
    double t_end = 0.0;
    // Gamma * integral |E|^2 dt leaving through xi = 1 (forward) and xi = 0 (backward).
    double emitted_forward = 0.0;
    double emitted_backward = 0.0;
};

// Excitation bookkeeping. "stored" is integral |S|^2 (+ |P|^2 in the
// three-level tier); the residual of
//   d(stored)/dt + Gamma(|E+(1)|^2 + |E-(0)|^2) + loss - Gamma(|E+(0)|^2 + |E-(1)|^2)
// is integrated over the run step by step with the trapezoid rule.
struct ExcitationLedger {
    double initial_stored = 0.0;
    double final_stored = 0.0;
    double emitted = 0.0;
    double input = 0.0;
    double lost = 0.0;
    double residual = 0.0;
    double abs_residual = 0.0; // sum of per-step |residual|
};

struct SimulationRecord {
    Tier tier = Tier::adiabatic;
    ModelOptions options;
    PhysicalParams params;
    GridSpec grid;

    std::vector<double> xi;
    std::vector<double> times;
    std::vector<std::vector<cplx>> s_history;
    std::vector<std::vector<cplx>> e_plus_history;
    std::vector<std::vector<cplx>> e_minus_history;

    std::vector<double> detector_times;
    std::vector<cplx> detector_fwd; // E+(xi = 1)
    std::vector<cplx> detector_bwd; // E-(xi = 0)
    std::vector<double> stored;     // stored excitation at detector times

    std::vector<StageWindow> stages;
    ExcitationLedger ledger;
    EnsembleState final_state;
};

// Steps through all stages. The record keeps every sample_stride-th step
// plus the final state; detectors are recorded every step.
SimulationRecord run(const Timeline& tl, const GridSpec& grid, const PhysicalParams& p,
                     const EnsembleState& init, Tier tier, const ModelOptions& opt);

} // namespace slsim
