#include "doctest.h"
#include "slsim/field_solver.hpp"
#include "slsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace slsim;

namespace {

std::vector<cplx> random_profile(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<cplx> v(n);
    for (auto& x : v) x = {g(rng), g(rng)};
    return v;
}

// E(xi) = b e^{i a xi} + i beta int_0^xi e^{i a (xi - x)} S(x) dx with S
// linearly interpolated from the coarse grid and the integral taken by a
// fine midpoint sum.
std::vector<cplx> riemann_forward(std::span<const cplx> s, cplx a, cplx beta, cplx b, std::size_t fine) {
    std::size_t n = s.size();
    auto interp = [&](double x) {
        double pos = x * static_cast<double>(n - 1);
        auto k = std::min<std::size_t>(static_cast<std::size_t>(pos), n - 2);
        double f = pos - static_cast<double>(k);
        return s[k] * (1 - f) + s[k + 1] * f;
    };
    std::vector<cplx> out(n);
    cplx acc = 0.0;
    double hf = 1.0 / static_cast<double>(fine);
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
        double xi = static_cast<double>(k) / static_cast<double>(n - 1);
        while (j < fine && (static_cast<double>(j) + 1.0) * hf <= xi + 1e-15) {
            double x = (static_cast<double>(j) + 0.5) * hf;
            acc += std::exp(-I * a * x) * interp(x) * hf;
            ++j;
        }
        out[k] = std::exp(I * a * xi) * (b + I * beta * acc);
    }
    return out;
}

double max_abs(std::span<const cplx> v) {
    double m = 0;
    for (auto x : v) m = std::max(m, std::abs(x));
    return m;
}

PhysicalParams symmetric_params() {
    return {.d = 200, .gamma = two_pi * 3, .gamma0 = 0, .delta_plus = two_pi * 160, .delta_minus = -two_pi * 160};
}

} // namespace

TEST_CASE("spinwave profile needs enough points") {
    CHECK_THROWS_AS(SpinwaveProfile(std::vector<cplx>(8)), ValidationError);
    CHECK(SpinwaveProfile::zeros(16).n_points() == 16);
}

TEST_CASE("trapezoid weights the faces by one half") {
    std::vector<double> v(17, 1.0);
    CHECK(trapezoid(std::span<const double>(v)) == doctest::Approx(1.0));
    std::vector<cplx> r(17);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = static_cast<double>(k) / 16.0;
    CHECK(std::abs(trapezoid(r) - 0.5) < 1e-15);
}

TEST_CASE("homogeneous solution is a pure phase rotation") {
    std::vector<cplx> s(64, 0.0);
    for (auto dir : {Direction::forward, Direction::backward}) {
        auto e = solve_direction(s, 3.7, 1.0, cplx(0.6, 0.8), dir);
        for (auto x : e) CHECK(std::abs(x) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("constant source without dispersion gives a linear ramp") {
    std::size_t n = 101;
    cplx s0(0.3, -0.2), beta(1.5, 0.0);
    std::vector<cplx> s(n, s0);
    auto e = solve_direction(s, 0.0, beta, 0.0, Direction::forward);
    for (std::size_t k = 0; k < n; ++k) {
        double xi = static_cast<double>(k) / static_cast<double>(n - 1);
        CHECK(std::abs(e[k] - I * beta * s0 * xi) < 1e-14);
    }
    auto eb = solve_direction(s, 0.0, beta, 0.0, Direction::backward);
    CHECK(std::abs(eb[0] - I * beta * s0) < 1e-14);
}

TEST_CASE("antisymmetric two-Gaussian spinwave emits nothing at the exit faces") {
    auto s = make_dual_gaussian_spinwave(512, {0.3, 0.7}, 0.05, std::numbers::pi, 1.0).profile;
    auto f = solve_direction(s.values(), 0.0, 2.0, 0.0, Direction::forward);
    auto b = solve_direction(s.values(), 0.0, 2.0, 0.0, Direction::backward);
    CHECK(std::abs(f.back()) <= 1e-10 * max_abs(f));
    CHECK(std::abs(b.front()) <= 1e-10 * max_abs(b));
}

TEST_CASE("zero spinwave and zero inputs give zero fields") {
    auto c = field_coefficients(symmetric_params(), 15, 15, DispersionMode::full);
    auto f = solve_fields(std::vector<cplx>(64), c, {});
    CHECK(max_abs(f.e_plus) == 0.0);
    CHECK(max_abs(f.e_minus) == 0.0);
}

TEST_CASE("uniform spinwave fields mirror each other") {
    auto c = field_coefficients(symmetric_params(), 15, 15, DispersionMode::none);
    std::vector<cplx> s(128, cplx(0.5, 0.1));
    auto f = solve_fields(s, c, {});
    for (std::size_t k = 0; k < s.size(); ++k)
        CHECK(std::abs(f.e_plus[k]) == doctest::Approx(std::abs(f.e_minus[s.size() - 1 - k])).epsilon(1e-12));
}

TEST_CASE("boundary values equal the inputs") {
    auto c = field_coefficients(symmetric_params(), 15, 10, DispersionMode::full);
    auto f = solve_fields(random_profile(64, 3), c, {cplx(1, 2), cplx(-3, 0.5)});
    CHECK(f.e_plus.front() == cplx(1, 2));
    CHECK(f.e_minus.back() == cplx(-3, 0.5));
}

TEST_CASE("coefficient modes") {
    auto p = symmetric_params();
    double om = 15;
    auto full = field_coefficients(p, om, om, DispersionMode::full);
    cplx dtp = delta_tilde(p.delta_plus, p.gamma);
    CHECK(std::abs(full.alpha_plus - p.d * p.gamma / dtp) < 1e-12);
    CHECK(std::abs(full.beta_plus - std::sqrt(p.d) * om / dtp) < 1e-12);
    auto none = field_coefficients(p, om, om, DispersionMode::none);
    CHECK(none.alpha_plus == cplx(0.0));
    CHECK(none.alpha_minus == cplx(0.0));
    auto rem = field_coefficients(p, om, om, DispersionMode::common_phase_removed);
    double common = 0.5 * (full.alpha_plus.real() - full.alpha_minus.real());
    CHECK(rem.alpha_plus.real() == doctest::Approx(full.alpha_plus.real() - common));
    CHECK(rem.alpha_plus.imag() == doctest::Approx(full.alpha_plus.imag()));
    auto far = field_coefficients(p, om, om, DispersionMode::full, true);
    CHECK(far.beta_plus.imag() == 0.0);
    CHECK(far.beta_plus.real() == doctest::Approx(std::sqrt(p.d) * om / p.delta_plus));
}

TEST_CASE("resolution warning trips for coarse grids") {
    FieldCoefficients c{.alpha_plus = 100.0, .alpha_minus = 1.0};
    CHECK(step_resolution_warning(c, 64));
    CHECK_FALSE(step_resolution_warning(c, 512));
}

TEST_CASE("non-finite inputs are numeric errors") {
    std::vector<cplx> s(32, 0.0);
    s[3] = std::nan("");
    CHECK_THROWS_AS(solve_direction(s, 0.0, 1.0, 0.0, Direction::forward), NumericError);
}

TEST_CASE("coarse solution agrees with a fine-grid quadrature") {
    auto s = random_profile(64, 5);
    cplx a(8.0, 0.3), beta(2.0, -0.5);
    auto coarse = solve_direction(s, a, beta, cplx(0.2, 0.1), Direction::forward);
    auto fine = riemann_forward(s, a, beta, cplx(0.2, 0.1), 4096 * 16);
    double dev = 0;
    for (std::size_t k = 0; k < s.size(); ++k) dev = std::max(dev, std::abs(coarse[k] - fine[k]));
    CHECK(dev / max_abs(fine) < 1e-3);
}

TEST_CASE("property: solver error falls as h squared") {
    // Exact exit field for a sum of Fourier modes c_m e^{2 pi i m xi}.
    cplx a(8.0, 0.5), beta(1.0, 0.0);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    cplx c[5];
    for (auto& x : c) x = {g(rng), g(rng)};
    cplx exact = 0.0;
    for (int m = 0; m < 5; ++m) {
        cplx k = I * (two_pi * m - a);
        exact += c[m] * (std::exp(k) - 1.0) / k;
    }
    exact *= std::exp(I * a) * I * beta;
    std::vector<double> errs;
    for (std::size_t n : {65u, 129u, 257u, 513u}) {
        std::vector<cplx> s(n);
        for (std::size_t k = 0; k < n; ++k) {
            double xi = static_cast<double>(k) / static_cast<double>(n - 1);
            for (int m = 0; m < 5; ++m) s[k] += c[m] * std::exp(I * (two_pi * m * xi));
        }
        errs.push_back(std::abs(solve_direction(s, a, beta, 0.0, Direction::forward).back() - exact));
    }
    for (std::size_t i = 0; i + 1 < errs.size(); ++i)
        CHECK(errs[i] / errs[i + 1] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("property: fields are linear in the spinwave") {
    auto c = field_coefficients(symmetric_params(), 15, 12, DispersionMode::full);
    auto s1 = random_profile(128, 21), s2 = random_profile(128, 22);
    cplx a(0.7, -1.1), b(-0.4, 2.0);
    std::vector<cplx> mix(128);
    for (std::size_t k = 0; k < mix.size(); ++k) mix[k] = a * s1[k] + b * s2[k];
    auto f1 = solve_fields(s1, c, {}), f2 = solve_fields(s2, c, {}), fm = solve_fields(mix, c, {});
    double scale = max_abs(fm.e_plus) + max_abs(fm.e_minus);
    for (std::size_t k = 0; k < mix.size(); ++k) {
        CHECK(std::abs(fm.e_plus[k] - a * f1.e_plus[k] - b * f2.e_plus[k]) < 1e-13 * scale);
        CHECK(std::abs(fm.e_minus[k] - a * f1.e_minus[k] - b * f2.e_minus[k]) < 1e-13 * scale);
    }
}

TEST_CASE("property: zero-integral spinwave cancels the exit fields") {
    for (unsigned seed = 0; seed < 20; ++seed) {
        auto s = random_profile(200, 100 + seed);
        cplx mean = trapezoid(s);
        for (auto& x : s) x -= mean;
        double beta = 1.7;
        auto f = solve_direction(s, 0.0, beta, 0.0, Direction::forward);
        auto b = solve_direction(s, 0.0, beta, 0.0, Direction::backward);
        CHECK(std::abs(f.back()) <= 1e-12 * beta * max_abs(s));
        CHECK(std::abs(b.front()) <= 1e-12 * beta * max_abs(s));
    }
}
