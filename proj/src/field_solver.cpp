#include "slsim/field_solver.hpp"

#include <cmath>

namespace slsim {

namespace {

bool all_finite(std::span<const cplx> v)
{
    for (const auto& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            return false;
    return true;
}

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

} // namespace

SpinwaveProfile::SpinwaveProfile(std::vector<cplx> values) : values_(std::move(values))
{
    if (values_.size() < min_points)
        throw ValidationError("spinwave profile needs at least 16 grid points, got " +
                              std::to_string(values_.size()));
    if (!all_finite(values_))
        throw NumericError("spinwave profile contains non-finite values");
}

SpinwaveProfile SpinwaveProfile::zeros(std::size_t n_points)
{
    return SpinwaveProfile(std::vector<cplx>(n_points));
}

cplx trapezoid(std::span<const cplx> v)
{
    if (v.size() < 2)
        return {};
    cplx sum = 0.5 * (v.front() + v.back());
    for (std::size_t k = 1; k + 1 < v.size(); ++k)
        sum += v[k];
    return sum / static_cast<double>(v.size() - 1);
}

double trapezoid(std::span<const double> v)
{
    if (v.size() < 2)
        return 0.0;
    double sum = 0.5 * (v.front() + v.back());
    for (std::size_t k = 1; k + 1 < v.size(); ++k)
        sum += v[k];
    return sum / static_cast<double>(v.size() - 1);
}

double trapezoid_abs2(std::span<const cplx> v)
{
    if (v.size() < 2)
        return 0.0;
    double sum = 0.5 * (std::norm(v.front()) + std::norm(v.back()));
    for (std::size_t k = 1; k + 1 < v.size(); ++k)
        sum += std::norm(v[k]);
    return sum / static_cast<double>(v.size() - 1);
}

void solve_direction_into(std::span<const cplx> source, cplx alpha, cplx beta, cplx boundary,
                          Direction dir, std::span<cplx> out)
{
    const std::size_t n = source.size();
    if (n < 2 || out.size() != n)
        throw ValidationError("solve_direction: grid size mismatch");
    if (!finite(alpha) || !finite(beta) || !finite(boundary) || !all_finite(source))
        throw NumericError("solve_direction: non-finite input");

    const double h = 1.0 / static_cast<double>(n - 1);
    // Stepping away from the entry face the local ODE reads dE/du = i (alpha E + beta S)
    // in both directions, u being the distance travelled.
    // Over one cell the source is taken as linear between its grid values and
    // integrated exactly against the propagator:
    //   int_0^h e^{i alpha (h - u)} S(u) du = h (w_start S_start + w_end S_end).
    const cplx z = I * alpha * h;
    const cplx rot = std::exp(z);
    cplx w_start, w_end;
    if (std::abs(z) < 0.1) {
        // w_start = sum z^n / (n! (n + 2)), w_end = sum z^n / (n + 2)!
        w_start = 0.0;
        w_end = 0.0;
        for (int m = 10; m >= 0; --m) {
            double fact = 1.0;
            for (int j = 2; j <= m; ++j)
                fact *= j;
            w_start = w_start * z + 1.0 / (fact * (m + 2));
            w_end = w_end * z + 1.0 / (fact * (m + 1) * (m + 2));
        }
    } else {
        w_start = ((z - 1.0) * rot + 1.0) / (z * z);
        w_end = (rot - 1.0 - z) / (z * z);
    }
    const cplx c_start = I * beta * h * w_start;
    const cplx c_end = I * beta * h * w_end;

    if (dir == Direction::forward) {
        out[0] = boundary;
        for (std::size_t k = 0; k + 1 < n; ++k)
            out[k + 1] = rot * out[k] + c_start * source[k] + c_end * source[k + 1];
    } else {
        out[n - 1] = boundary;
        for (std::size_t k = n - 1; k > 0; --k)
            out[k - 1] = rot * out[k] + c_start * source[k] + c_end * source[k - 1];
    }
}

std::vector<cplx> solve_direction(std::span<const cplx> source, cplx alpha, cplx beta, cplx boundary,
                                  Direction dir)
{
    std::vector<cplx> out(source.size());
    solve_direction_into(source, alpha, beta, boundary, dir, out);
    return out;
}

FieldCoefficients field_coefficients(const PhysicalParams& p, double omega_plus, double omega_minus,
                                     DispersionMode mode, bool far_detuned)
{
    auto effective = [&](double delta) -> cplx {
        if (far_detuned) {
            if (delta == 0.0)
                throw NumericError("far-detuned coupling requires a non-zero one-photon detuning");
            return {delta, 0.0};
        }
        return delta_tilde(delta, p.gamma);
    };
    const cplx dt_plus = effective(p.delta_plus);
    const cplx dt_minus = effective(p.delta_minus);
    const double sqrt_d = std::sqrt(p.d);

    FieldCoefficients c;
    c.beta_plus = sqrt_d * omega_plus / dt_plus;
    c.beta_minus = sqrt_d * omega_minus / dt_minus;
    switch (mode) {
    case DispersionMode::none:
        break;
    case DispersionMode::full:
        c.alpha_plus = p.d * p.gamma / dt_plus;
        c.alpha_minus = p.d * p.gamma / dt_minus;
        break;
    case DispersionMode::common_phase_removed: {
        c.alpha_plus = p.d * p.gamma / dt_plus;
        c.alpha_minus = p.d * p.gamma / dt_minus;
        // Both fields see i*a*E with a = Re(alpha+) = -Re(alpha-) for opposite
        // detunings; that part is a gauge phase exp(i a xi) and is dropped.
        const double common = 0.5 * (c.alpha_plus.real() - c.alpha_minus.real());
        c.alpha_plus -= common;
        c.alpha_minus += common;
        break;
    }
    }
    return c;
}

FieldPair solve_fields(std::span<const cplx> s, const FieldCoefficients& c, BoundaryInputs inputs)
{
    FieldPair f;
    f.e_plus = solve_direction(s, c.alpha_plus, c.beta_plus, inputs.plus, Direction::forward);
    f.e_minus = solve_direction(s, c.alpha_minus, c.beta_minus, inputs.minus, Direction::backward);
    return f;
}

bool step_resolution_warning(const FieldCoefficients& c, std::size_t n_points)
{
    const double h = 1.0 / static_cast<double>(n_points - 1);
    return std::abs(c.alpha_plus) * h > 1.0 || std::abs(c.alpha_minus) * h > 1.0;
}

} // namespace slsim
