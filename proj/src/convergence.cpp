#include "slsim/convergence.hpp"

#include "slsim/analysis.hpp"
#include "slsim/dynamics.hpp"

#include <algorithm>
#include <array>
#include <fstream>

namespace slsim {

namespace {

PhysicalParams default_params()
{
    return build_params(
        {{"optical_depth", 200}, {"linewidth_mhz", 3}, {"ground_decay_hz", 500}, {"detuning_mhz", 160}});
}

void fill_ratios(std::vector<ConvergenceRow>& rows)
{
    for (std::size_t i = 1; i < rows.size(); ++i)
        rows[i].ratio = rows[i].error > 0.0 ? rows[i - 1].error / rows[i].error : 0.0;
}

} // namespace

std::vector<ConvergenceRow> field_solver_convergence(const std::vector<std::size_t>& n_points)
{
    const auto c = field_coefficients(default_params(), mhz_to_rad_per_us(2.4), mhz_to_rad_per_us(2.4),
                                      DispersionMode::full);
    const cplx a = c.alpha_plus;
    const cplx beta = c.beta_plus;
    const std::array<cplx, 4> modes{cplx(1.0, 0.2), cplx(-0.4, 0.7), cplx(0.3, -0.1), cplx(0.05, 0.25)};

    // E(1) = i beta e^{i a} sum_m c_m (e^{i(2 pi m - a)} - 1) / (i (2 pi m - a))
    cplx exact = 0.0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
        const cplx k = I * (two_pi * static_cast<double>(m) - a);
        exact += modes[m] * (std::exp(k) - 1.0) / k;
    }
    exact *= I * beta * std::exp(I * a);

    std::vector<ConvergenceRow> rows;
    for (std::size_t n : n_points) {
        std::vector<cplx> s(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double xi = static_cast<double>(k) / static_cast<double>(n - 1);
            for (std::size_t m = 0; m < modes.size(); ++m)
                s[k] += modes[m] * std::exp(I * (two_pi * static_cast<double>(m) * xi));
        }
        const auto e = solve_direction(s, a, beta, 0.0, Direction::forward);
        rows.push_back({n, 1.0 / static_cast<double>(n - 1), std::abs(e.back() - exact) / std::abs(exact), 0.0});
    }
    fill_ratios(rows);
    return rows;
}

std::vector<ConvergenceRow> time_step_convergence(const std::vector<std::size_t>& steps, std::size_t n_points)
{
    const PhysicalParams p = default_params();
    const double om = mhz_to_rad_per_us(2.4);
    const double r = derived_rates(p, om, om).r_bright;
    const double duration = 5.0 / r;

    ModelOptions opt;
    opt.dispersion = DispersionMode::none;
    opt.far_detuned = true;
    opt.include_decay = false;
    opt.include_stark = false;

    const SpinwaveProfile s0 = make_dual_gaussian_spinwave(n_points, {0.3, 0.7}, 0.05, 0.0, 1.0).profile;
    double peak = 0.0;
    for (const auto& z : s0.values())
        peak = std::max(peak, std::abs(z));

    Stage st;
    st.label = "sl";
    st.duration = duration;
    st.controls = ControlDrive::constant(om, om);

    std::vector<ConvergenceRow> rows;
    for (std::size_t n : steps) {
        GridSpec g{n_points, duration / static_cast<double>(n), 1};
        const auto rec = run(Timeline{{st}}, g, p, initial_state(s0), Tier::adiabatic, opt);
        double err = 0.0;
        for (std::size_t i = 0; i < rec.times.size(); ++i) {
            const auto ref = ideal_closed_form(s0, r, rec.times[i]);
            for (std::size_t k = 0; k < n_points; ++k)
                err = std::max(err, std::abs(rec.s_history[i][k] - ref[k]));
        }
        rows.push_back({n, g.dt, err / peak, 0.0});
    }
    fill_ratios(rows);
    return rows;
}

void write_convergence_csv(const std::filesystem::path& path, const std::vector<ConvergenceRow>& rows,
                           const char* size_name, const char* step_name)
{
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot write " + path.string());
    out << "# " << size_name << ',' << step_name << ",error,ratio\n";
    for (const auto& r : rows)
        out << r.size << ',' << format_number(r.step) << ',' << format_number(r.error) << ','
            << format_number(r.ratio) << '\n';
    if (!out)
        throw NumericError("failed writing " + path.string());
}

} // namespace slsim
