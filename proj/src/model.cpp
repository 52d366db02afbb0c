#include "slsim/model.hpp"

#include <cmath>

namespace slsim {

namespace {

void require_finite(double v, const char* name)
{
    if (!std::isfinite(v))
        throw ValidationError(std::string("parameter '") + name + "' is not finite");
}

double lookup(const std::map<std::string, double>& m, const std::string& key, double fallback)
{
    auto it = m.find(key);
    return it == m.end() ? fallback : it->second;
}

} // namespace

void validate(const PhysicalParams& p)
{
    require_finite(p.d, "d");
    require_finite(p.gamma, "gamma");
    require_finite(p.gamma0, "gamma0");
    require_finite(p.delta_plus, "delta_plus");
    require_finite(p.delta_minus, "delta_minus");
    require_finite(p.delta_two_photon, "delta_two_photon");
    require_finite(p.eta, "eta");
    if (p.d <= 0.0)
        throw ValidationError("parameter 'd' (optical depth) must be positive");
    if (p.gamma < 0.0)
        throw ValidationError("parameter 'gamma' (linewidth) must be non-negative");
    if (p.gamma0 < 0.0)
        throw ValidationError("parameter 'gamma0' (ground-state decay) must be non-negative");
}

PhysicalParams build_params(const std::map<std::string, double>& lab)
{
    static const char* known[] = {"optical_depth",     "linewidth_mhz",      "ground_decay_hz",
                                  "detuning_mhz",      "detuning_plus_mhz",  "detuning_minus_mhz",
                                  "two_photon_detuning_mhz", "gradient_mhz"};
    for (const auto& [key, value] : lab) {
        bool found = false;
        for (const char* k : known)
            found = found || key == k;
        if (!found)
            throw ValidationError("unknown parameter '" + key + "'");
    }
    if (!lab.count("optical_depth"))
        throw ValidationError("parameter 'optical_depth' is required");

    PhysicalParams p;
    p.d = lab.at("optical_depth");
    p.gamma = mhz_to_rad_per_us(lookup(lab, "linewidth_mhz", 0.0));
    p.gamma0 = hz_to_rad_per_us(lookup(lab, "ground_decay_hz", 0.0));

    const double sym = std::abs(mhz_to_rad_per_us(lookup(lab, "detuning_mhz", 0.0)));
    p.delta_plus = sym;
    p.delta_minus = -sym;
    if (lab.count("detuning_plus_mhz"))
        p.delta_plus = mhz_to_rad_per_us(lab.at("detuning_plus_mhz"));
    if (lab.count("detuning_minus_mhz"))
        p.delta_minus = mhz_to_rad_per_us(lab.at("detuning_minus_mhz"));

    p.delta_two_photon = mhz_to_rad_per_us(lookup(lab, "two_photon_detuning_mhz", 0.0));
    p.eta = mhz_to_rad_per_us(lookup(lab, "gradient_mhz", 0.0));
    validate(p);
    return p;
}

cplx delta_tilde(double delta, double gamma)
{
    if (delta == 0.0 && gamma == 0.0)
        throw NumericError("delta_tilde: singular parameters (Delta = Gamma = 0)");
    // (D^2 + G^2) / (D + iG) = (D^2 + G^2)(D - iG) / (D^2 + G^2) = D - iG.
    return {delta, -gamma};
}

DerivedRates derived_rates(const PhysicalParams& p, double omega_plus, double omega_minus)
{
    validate(p);
    const double g2 = p.gamma * p.gamma;
    const double op2 = omega_plus * omega_plus;
    const double om2 = omega_minus * omega_minus;
    const double dp2 = p.delta_plus * p.delta_plus;
    const double dm2 = p.delta_minus * p.delta_minus;

    DerivedRates r;
    const double denom_p = g2 + dp2;
    const double denom_m = g2 + dm2;
    r.gamma_prime = p.gamma0;
    r.delta_prime = p.delta_two_photon;
    if (denom_p > 0.0) {
        r.gamma_prime += p.gamma * op2 / denom_p;
        r.delta_prime -= op2 * p.delta_plus / denom_p;
    }
    if (denom_m > 0.0) {
        r.gamma_prime += p.gamma * om2 / denom_m;
        r.delta_prime -= om2 * p.delta_minus / denom_m;
    }
    if (denom_p > 0.0)
        r.delta_tilde_plus = delta_tilde(p.delta_plus, p.gamma);
    if (denom_m > 0.0)
        r.delta_tilde_minus = delta_tilde(p.delta_minus, p.gamma);

    r.unequal_controls = omega_plus != omega_minus;
    const double omega2 = std::abs(omega_plus * omega_minus);
    const double delta2 = std::abs(p.delta_plus * p.delta_minus);
    if (delta2 > 0.0) {
        r.r_bright = p.d * p.gamma * omega2 / delta2;
        r.gamma_sl = p.gamma0 + 2.0 * p.gamma * omega2 / delta2;
    } else {
        r.r_bright = 0.0;
        r.gamma_sl = p.gamma0;
    }
    return r;
}

void validate(const ControlDrive& c)
{
    for (double v : {c.omega_plus.start, c.omega_plus.end, c.omega_minus.start, c.omega_minus.end}) {
        if (!std::isfinite(v))
            throw ValidationError("control amplitude is not finite");
        if (v < 0.0)
            throw ValidationError("control amplitudes must be non-negative");
    }
}

} // namespace slsim
