#include "slsim/scenario.hpp"

#include <cmath>

namespace slsim {

void validate(const ProbePulse& pulse, double eta)
{
    if (!(pulse.tau > 0.0) || !std::isfinite(pulse.tau))
        throw ValidationError("probe pulse tau must be positive");
    if (!std::isfinite(pulse.center_time) || !std::isfinite(pulse.omega_plus_sb) ||
        !std::isfinite(pulse.omega_minus_sb) || !std::isfinite(pulse.relative_phase))
        throw ValidationError("probe pulse has non-finite fields");
    if (eta != 0.0) {
        const double half = 0.5 * std::abs(eta);
        if (std::abs(pulse.omega_plus_sb) >= half || std::abs(pulse.omega_minus_sb) >= half)
            throw ValidationError("probe sidebands must lie inside the gradient window |w| < |eta|/2");
    }
}

cplx pulse_envelope(const ProbePulse& pulse, double t)
{
    const double u = t - pulse.center_time;
    const double env = std::exp(-u * u / (4.0 * pulse.tau * pulse.tau));
    return pulse.amplitude * env *
           (std::exp(I * (pulse.omega_plus_sb * u)) +
            std::exp(I * (pulse.relative_phase + pulse.omega_minus_sb * u)));
}

double pulse_energy(const ProbePulse& pulse)
{
    const double span = 12.0 * pulse.tau;
    const double max_freq = std::max(std::abs(pulse.omega_plus_sb), std::abs(pulse.omega_minus_sb));
    double step = pulse.tau / 40.0;
    if (max_freq > 0.0)
        step = std::min(step, two_pi / (40.0 * max_freq));
    std::size_t n = static_cast<std::size_t>(std::ceil(2.0 * span / step));
    if (n % 2)
        ++n;
    const double h = 2.0 * span / static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        sum += w * std::norm(pulse_envelope(pulse, pulse.center_time - span + h * static_cast<double>(k)));
    }
    return sum * h / 3.0;
}

double Timeline::total_duration() const
{
    double t = 0.0;
    for (const auto& s : stages)
        t += s.duration;
    return t;
}

void validate(const Timeline& tl, const PhysicalParams& p)
{
    for (std::size_t i = 0; i < tl.stages.size(); ++i) {
        const Stage& s = tl.stages[i];
        const std::string where = "stage " + std::to_string(i + 1) +
                                  (s.label.empty() ? std::string() : " (" + s.label + ")");
        if (!(s.duration > 0.0) || !std::isfinite(s.duration))
            throw ValidationError(where + ": duration must be positive");
        if (s.eta_active < -1 || s.eta_active > 1)
            throw ValidationError(where + ": gradient multiplier must be -1, 0 or +1");
        if (!std::isfinite(s.detuning_offset))
            throw ValidationError(where + ": detuning offset is not finite");
        try {
            validate(s.controls);
            if (s.input_pulse)
                validate(*s.input_pulse, p.eta);
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
}

DualGaussianResult make_dual_gaussian_spinwave(std::size_t n_points, std::pair<double, double> centers,
                                               double width, double phi, cplx amplitude)
{
    const auto [c1, c2] = centers;
    if (!(0.0 < c1 && c1 < c2 && c2 < 1.0))
        throw ValidationError("dual Gaussian centres must satisfy 0 < c1 < c2 < 1");
    if (!(width > 0.0))
        throw ValidationError("dual Gaussian width must be positive");
    if (n_points < SpinwaveProfile::min_points)
        throw ValidationError("spinwave grid needs at least 16 points");

    auto g = [width](double x, double c) {
        const double u = (x - c) / width;
        return std::exp(-0.5 * u * u);
    };
    const cplx second = std::exp(I * phi);
    std::vector<cplx> v(n_points);
    const double h = 1.0 / static_cast<double>(n_points - 1);
    for (std::size_t k = 0; k < n_points; ++k) {
        const double x = static_cast<double>(k) * h;
        v[k] = amplitude * (g(x, c1) + second * g(x, c2));
    }
    DualGaussianResult r{SpinwaveProfile(std::move(v)), false};
    const double edge = std::max({g(0.0, c1), g(1.0, c1), g(0.0, c2), g(1.0, c2)});
    r.boundary_leak = edge > 1e-6;
    return r;
}

SpinwaveProfile make_uniform_spinwave(std::size_t n_points, cplx value)
{
    return SpinwaveProfile(std::vector<cplx>(n_points, value));
}

double default_rephase_time(const ExperimentPlan& plan)
{
    return std::max(0.0, plan.t_write - plan.pulse.center_time);
}

Timeline paper_experiment(const PhysicalParams& p, const ExperimentPlan& plan)
{
    Timeline tl;

    Stage write;
    write.label = "write";
    write.duration = plan.t_write;
    write.controls = ControlDrive::constant(plan.omega_write, 0.0);
    write.eta_active = +1;
    write.input_pulse = plan.pulse;
    write.cancel_light_shift = plan.compensate_light_shift;
    tl.stages.push_back(write);

    if (plan.t_sl > 0.0) {
        if (plan.t_rephase > 0.0) {
            Stage rephase;
            rephase.label = "rephase";
            rephase.duration = plan.t_rephase;
            rephase.controls = ControlDrive::constant(0.0, 0.0);
            rephase.eta_active = -1;
            tl.stages.push_back(rephase);
        }
        Stage sl;
        sl.label = "sl";
        sl.duration = plan.t_sl;
        sl.controls = ControlDrive::constant(plan.omega, plan.backward_control ? plan.omega : 0.0);
        sl.eta_active = 0;
        sl.cancel_light_shift = plan.compensate_light_shift;
        tl.stages.push_back(sl);
    }

    if (plan.t_recall > 0.0) {
        Stage recall;
        recall.label = "recall";
        recall.duration = plan.t_recall;
        recall.controls = ControlDrive::constant(plan.omega, 0.0);
        recall.eta_active = -1;
        recall.cancel_light_shift = plan.compensate_light_shift;
        tl.stages.push_back(recall);
    }

    validate(tl, p);
    return tl;
}

} // namespace slsim
