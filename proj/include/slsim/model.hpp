#pragma once

#include <complex>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

namespace slsim {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Bad user input: out-of-range parameters, malformed configs, inconsistent
// timelines. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite values, singular parameters, step-size guard violations.
// Maps to CLI exit code 2.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Ensemble and drive constants. All rates are angular, rad/us; length is the
// normalised coordinate xi in [0, 1].
struct PhysicalParams {
    double d = 0.0;                // amplitude optical depth
    double gamma = 0.0;            // excited-state half-linewidth
    double gamma0 = 0.0;           // intrinsic spinwave decoherence
    double delta_plus = 0.0;       // one-photon detuning of the forward Raman pair
    double delta_minus = 0.0;      // one-photon detuning of the backward Raman pair
    double delta_two_photon = 0.0; // two-photon detuning
    double eta = 0.0;              // GEM gradient, detuning span per unit xi

    bool operator==(const PhysicalParams&) const = default;
};

// Throws ValidationError naming the offending field.
void validate(const PhysicalParams& p);

// Builds parameters from laboratory units. Recognised keys:
//   optical_depth               dimensionless
//   linewidth_mhz               Gamma/2pi (half-width)
//   ground_decay_hz             gamma0/2pi
//   detuning_mhz                symmetric shorthand, Delta+- = +-|Delta|
//   detuning_plus_mhz, detuning_minus_mhz   explicit pair (overrides shorthand)
//   two_photon_detuning_mhz     delta/2pi
//   gradient_mhz                eta/2pi per unit xi
// Missing keys default to zero except optical_depth, which is required.
PhysicalParams build_params(const std::map<std::string, double>& lab);

// Converts an ordinary frequency in MHz to rad/us.
constexpr double mhz_to_rad_per_us(double f_mhz) { return two_pi * f_mhz; }
constexpr double hz_to_rad_per_us(double f_hz) { return two_pi * f_hz * 1e-6; }

// (Delta^2 + Gamma^2) / (Delta + i Gamma), which is Delta - i Gamma.
cplx delta_tilde(double delta, double gamma);

struct DerivedRates {
    double gamma_prime = 0.0;   // gamma0 + sum Gamma Omega^2 / (Gamma^2 + Delta^2)
    double delta_prime = 0.0;   // delta - sum Omega^2 Delta / (Gamma^2 + Delta^2)
    cplx delta_tilde_plus{};
    cplx delta_tilde_minus{};
    double r_bright = 0.0;      // d Gamma Omega^2 / Delta^2
    double gamma_sl = 0.0;      // gamma0 + 2 Gamma Omega^2 / Delta^2
    // Set when Omega+ != Omega-; r_bright and gamma_sl then use the geometric
    // mean of the two Rabi frequencies.
    bool unequal_controls = false;
};

DerivedRates derived_rates(const PhysicalParams& p, double omega_plus, double omega_minus);

// Piecewise-linear control amplitude over one stage: value(start) at the
// beginning, value(end) at the end.
struct Ramp {
    double start = 0.0;
    double end = 0.0;

    double at(double fraction) const { return start + (end - start) * fraction; }
    bool operator==(const Ramp&) const = default;
};

struct ControlDrive {
    Ramp omega_plus;
    Ramp omega_minus;

    static ControlDrive constant(double plus, double minus) {
        return {{plus, plus}, {minus, minus}};
    }
    bool operator==(const ControlDrive&) const = default;
};

void validate(const ControlDrive& c);

} // namespace slsim
