#pragma once

#include "slsim/field_solver.hpp"
#include "slsim/model.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace slsim {

// Two-sideband Gaussian probe pulse:
//   E(t) = A exp(-(t - tc)^2 / (4 tau^2)) (exp(i w+ (t - tc)) + exp(i phi) exp(i w- (t - tc)))
struct ProbePulse {
    cplx amplitude{1.0, 0.0};
    double tau = 1.0;             // envelope width [us]
    double center_time = 0.0;     // [us], absolute simulation time
    double omega_plus_sb = 0.0;   // [rad/us]
    double omega_minus_sb = 0.0;  // [rad/us]
    double relative_phase = 0.0;  // phi [rad]

    bool operator==(const ProbePulse&) const = default;
};

// Throws ValidationError when tau <= 0 or a sideband lies outside the
// gradient window |w| < |eta| / 2. The window check is skipped when eta == 0.
void validate(const ProbePulse& pulse, double eta);

cplx pulse_envelope(const ProbePulse& pulse, double t);

// Integral of |E(t)|^2 over all time, by composite Simpson on +-12 tau.
double pulse_energy(const ProbePulse& pulse);

enum class Face { forward, backward };

struct Stage {
    std::string label;
    double duration = 0.0;           // [us]
    ControlDrive controls;
    int eta_active = 0;              // gradient multiplier in {-1, 0, +1}
    double detuning_offset = 0.0;    // extra uniform two-photon detuning [rad/us]
    // Adds the detuning that cancels the controls' AC-Stark shift, in tiers
    // where that shift exists.
    bool cancel_light_shift = false;
    std::optional<ProbePulse> input_pulse;
    Face input_face = Face::forward;

    bool operator==(const Stage&) const = default;
};

struct Timeline {
    std::vector<Stage> stages;

    double total_duration() const;
    bool operator==(const Timeline&) const = default;
};

// Durations positive, eta multipliers in {-1,0,1}, controls non-negative,
// pulses valid against params.eta.
void validate(const Timeline& tl, const PhysicalParams& p);

struct DualGaussianResult {
    SpinwaveProfile profile;
    bool boundary_leak = false; // Gaussians exceed 1e-6 of the amplitude at a face
};

// S(xi) = A [G(xi; c1, sigma) + exp(i phi) G(xi; c2, sigma)], unit-peak Gaussians
// G = exp(-(xi - c)^2 / (2 sigma^2)).
DualGaussianResult make_dual_gaussian_spinwave(std::size_t n_points, std::pair<double, double> centers,
                                               double width, double phi, cplx amplitude);

SpinwaveProfile make_uniform_spinwave(std::size_t n_points, cplx value);

// Settings of the staged write / stationary-light / recall protocol.
struct ExperimentPlan {
    ProbePulse pulse;
    double t_write = 0.0;    // write stage length [us]
    double t_rephase = 0.0;  // dark gradient-reversed stage before SL [us]
    double t_sl = 0.0;       // dual-control stage [us]
    double t_recall = 0.0;   // forward-control read-out stage [us]
    double omega = 0.0;      // control Rabi frequency used in every lit stage [rad/us]
    double omega_write = 0.0;
    bool backward_control = true;  // false reproduces the forward-control-only column
    bool compensate_light_shift = true;
};

// Builds the protocol timeline:
//   write   : forward control, eta +1, input pulse
//   rephase : controls off, eta -1 (only when t_sl > 0 and t_rephase > 0)
//   sl      : both controls, eta 0 (elided when t_sl == 0)
//   recall  : forward control, eta -1
// With compensate_light_shift the lit stages set cancel_light_shift.
Timeline paper_experiment(const PhysicalParams& p, const ExperimentPlan& plan);

// Rephase time that brings the write-stage chirp back to zero at the pulse
// centre.
double default_rephase_time(const ExperimentPlan& plan);

} // namespace slsim
