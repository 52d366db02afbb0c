#include "doctest.h"
#include "slsim/analysis.hpp"

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

PhysicalParams default_params() {
    return build_params({{"optical_depth", 200}, {"detuning_mhz", 160}, {"linewidth_mhz", 3}, {"ground_decay_hz", 500}});
}

Timeline sl_timeline(double duration, double omega) {
    Stage st;
    st.label = "sl";
    st.duration = duration;
    st.controls = ControlDrive::constant(omega, omega);
    return {{st}};
}

double value_of(const Summary& s, const std::string& key) {
    for (const auto& [k, v] : s.entries())
        if (k == key) return std::stod(v);
    FAIL("missing summary key " << key);
    return 0;
}

} // namespace

TEST_CASE("decomposition of simple profiles") {
    auto u = make_uniform_spinwave(64, cplx(0.4, -0.1));
    auto bd = bright_dark_decompose(u);
    CHECK(std::abs(bd.bright - cplx(0.4, -0.1)) < 1e-15);
    for (auto z : bd.dark.values()) CHECK(std::abs(z) < 1e-15);

    auto dark = make_dual_gaussian_spinwave(512, {0.3, 0.7}, 0.05, std::numbers::pi, 1.0).profile;
    auto d2 = bright_dark_decompose(dark);
    CHECK(std::abs(d2.bright) < 1e-9);
    for (std::size_t k = 0; k < 512; ++k) CHECK(std::abs(d2.dark[k] - dark[k]) < 1e-9);
}

TEST_CASE("property: decomposition reconstructs and is idempotent") {
    for (unsigned seed = 0; seed < 20; ++seed) {
        SpinwaveProfile s(random_profile(100, seed));
        auto bd = bright_dark_decompose(s);
        for (std::size_t k = 0; k < 100; ++k) CHECK(std::abs(bd.bright + bd.dark[k] - s[k]) < 1e-15);
        CHECK(std::abs(integrated_amplitude(bd.dark)) < 1e-14);
        CHECK(std::abs(bright_dark_decompose(bd.dark).bright) < 1e-14);
    }
}

TEST_CASE("integrated amplitude") {
    CHECK(std::abs(integrated_amplitude(make_uniform_spinwave(64, 2.0)) - 2.0) < 1e-15);
    double sigma = 0.05;
    auto bright = make_dual_gaussian_spinwave(512, {0.3, 0.7}, sigma, 0.0, 1.0).profile;
    CHECK(integrated_amplitude(bright).real() == doctest::Approx(2 * sigma * std::sqrt(two_pi)).epsilon(1e-6));
    auto s = random_profile(64, 4);
    CHECK(integrated_amplitude(s, 0.0) == integrated_amplitude(s));
    // a profile carrying exactly the gauge phase integrates to one
    std::vector<cplx> phase(257);
    for (std::size_t k = 0; k < phase.size(); ++k) phase[k] = std::exp(I * (30.0 * k / 256.0));
    CHECK(std::abs(integrated_amplitude(phase, 30.0) - 1.0) < 1e-12);
}

TEST_CASE("decay fit of a pure exponential") {
    std::vector<double> t, v;
    for (int i = 0; i <= 100; ++i) {
        t.push_back(0.02 * i);
        v.push_back(3.0 * std::exp(-2.0 * t.back()));
    }
    auto f = fit_decay_rate(t, v, {0.0, 2.0});
    CHECK(f.rate == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(f.amplitude == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(f.samples == 101);
    auto w = fit_decay_rate(t, v, {0.5, 1.0});
    CHECK(w.samples == 26);
    CHECK(w.rate == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("decay fit with a deterministic ripple") {
    std::vector<double> t, v;
    for (int i = 0; i <= 200; ++i) {
        t.push_back(0.01 * i);
        v.push_back(std::exp(-2.0 * t.back()) * (1.0 + 0.01 * std::sin(37.0 * t.back())));
    }
    auto f = fit_decay_rate(t, v, {0.0, 2.0});
    CHECK(std::abs(f.rate - 2.0) < 0.05);
    CHECK(f.stderr_rate > 0.0);
}

TEST_CASE("decay fit rejects bad windows") {
    std::vector<double> t{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, v(10, 1.0);
    CHECK_THROWS_AS(fit_decay_rate(t, v, {0.0, 3.0}), ValidationError);
    v[4] = 0.0;
    CHECK_THROWS_AS(fit_decay_rate(t, v, {0.0, 9.0}), ValidationError);
}

TEST_CASE("stationarity metric") {
    auto s = random_profile(64, 8);
    CHECK(stationarity_metric(s, s) == 0.0);
    std::vector<cplx> scaled(s);
    for (auto& z : scaled) z *= std::exp(-0.3) * cplx(0.6, 0.8);
    CHECK(stationarity_metric(s, scaled) < 1e-14);
    auto other = random_profile(64, 9);
    double m = stationarity_metric(s, other);
    CHECK(m > 0.0);
    CHECK(m <= 2.0);
    CHECK_THROWS_AS(stationarity_metric(s, std::vector<cplx>(64)), ValidationError);
}

TEST_CASE("property: stationarity is invariant under a global constant on the record") {
    auto p = default_params();
    double om = mhz_to_rad_per_us(2.4);
    auto s0 = make_dual_gaussian_spinwave(128, {0.3, 0.7}, 0.05, 0.0, 1.0).profile;
    GridSpec g{.n_points = 128, .dt = 0.01, .sample_stride = 50};
    auto rec = run(sl_timeline(4.0, om), g, p, initial_state(s0), Tier::adiabatic, ModelOptions{});
    double base = stationarity_metric(rec, 0.0, 4.0);
    CHECK(base > 0.1); // the bright part empties out and the shape changes
    auto copy = rec;
    for (auto& row : copy.s_history)
        for (auto& z : row) z *= cplx(-2.5, 7.0);
    CHECK(stationarity_metric(copy, 0.0, 4.0) == doctest::Approx(base).epsilon(1e-12));
    CHECK(stationarity_metric(rec, 2.0, 2.0) == 0.0);
    CHECK_THROWS_AS(stationarity_metric(rec, 0.0, 0.123), ValidationError);
}

TEST_CASE("GEM oracle of a single-frequency pulse is a Gaussian at the matching slice") {
    double eta = 2.0, gamma = 18.85, tau = 3.0, w = 0.3;
    ProbePulse pulse{.amplitude = 0.7, .tau = tau, .center_time = 10.0, .omega_plus_sb = w, .omega_minus_sb = w};
    auto o = gem_fourier_oracle(pulse, eta, gamma, 401);
    CHECK_FALSE(o.outside_window);
    double pref = std::sqrt(eta * gamma / two_pi) * 4.0 * 0.7 * tau * std::sqrt(std::numbers::pi);
    for (std::size_t k = 0; k < 401; ++k) {
        double x = o.profile.xi(k);
        double kq = (x - 0.5) * eta + w;
        CHECK(std::abs(o.profile[k]) == doctest::Approx(pref * std::exp(-tau * tau * kq * kq)).epsilon(1e-8).scale(1e-10));
    }
    // |S|^2 has standard deviation 1/(2 tau eta) about xi = 1/2 - w/eta
    std::vector<double> m0(401), m1(401), m2(401);
    for (std::size_t k = 0; k < 401; ++k) {
        double a2 = std::norm(o.profile[k]), x = o.profile.xi(k);
        m0[k] = a2;
        m1[k] = a2 * x;
        m2[k] = a2 * x * x;
    }
    double n0 = trapezoid(std::span<const double>(m0)), mean = trapezoid(std::span<const double>(m1)) / n0;
    double var = trapezoid(std::span<const double>(m2)) / n0 - mean * mean;
    CHECK(mean == doctest::Approx(0.5 - w / eta).epsilon(1e-4));
    CHECK(std::sqrt(var) == doctest::Approx(1.0 / (2 * tau * eta)).epsilon(1e-4));
}

TEST_CASE("GEM oracle stores opposite-phase sidebands in mirrored halves") {
    double eta = 2.0;
    ProbePulse pulse{.tau = 3.0, .omega_plus_sb = 0.5, .omega_minus_sb = -0.5, .relative_phase = std::numbers::pi};
    auto o = gem_fourier_oracle(pulse, eta, 10.0, 513);
    for (std::size_t k = 0; k < 513; ++k) CHECK(std::abs(o.profile[k] + o.profile[512 - k]) < 1e-9);
    CHECK(std::abs(o.profile[256]) < 1e-9 * std::abs(o.profile[128]));
    std::size_t peak = 0;
    for (std::size_t k = 0; k < 256; ++k)
        if (std::abs(o.profile[k]) > std::abs(o.profile[peak])) peak = k;
    CHECK(peak == 128);
    CHECK(gem_fourier_oracle(ProbePulse{.omega_plus_sb = 1.5}, eta, 10.0).outside_window);
}

TEST_CASE("property: GEM oracle satisfies Parseval") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    double eta = 2.0, gamma = 18.85;
    for (int i = 0; i < 10; ++i) {
        ProbePulse p{.amplitude = cplx(u(rng) + 0.1, u(rng)), .tau = 2.0 + 2.0 * u(rng), .center_time = 5.0,
                     .omega_plus_sb = 0.4 * (u(rng) - 0.5), .omega_minus_sb = 0.4 * (u(rng) - 0.5),
                     .relative_phase = two_pi * u(rng)};
        auto o = gem_fourier_oracle(p, eta, gamma, 1025);
        auto full = area_relation_check(o.profile, p, gamma, MemoryHalf::full);
        CHECK(full.ratio == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("half-memory area relation on the ideal oracle spinwave") {
    double eta = 2.0, gamma = 18.85;
    ProbePulse p{.tau = 3.0, .omega_plus_sb = eta / 4, .omega_minus_sb = -eta / 4, .relative_phase = std::numbers::pi};
    auto o = gem_fourier_oracle(p, eta, gamma, 1025);
    CHECK(area_relation_check(o.profile, p, gamma, MemoryHalf::lower).ratio == doctest::Approx(1.0).epsilon(0.01));
    CHECK(area_relation_check(o.profile, p, gamma, MemoryHalf::upper).ratio == doctest::Approx(1.0).epsilon(0.01));
    auto zero = area_relation_check(o.profile, ProbePulse{.amplitude = 0.0}, gamma, MemoryHalf::full);
    CHECK(zero.degenerate);
    CHECK(zero.ratio == 1.0);
}

TEST_CASE("partial |S|^2 integrals add up") {
    auto s = random_profile(65, 31);
    double whole = trapezoid_abs2(s);
    CHECK(integrate_abs2(s, 0.0, 1.0) == doctest::Approx(whole).epsilon(1e-14));
    CHECK(integrate_abs2(s, 0.0, 0.37) + integrate_abs2(s, 0.37, 1.0) == doctest::Approx(whole).epsilon(1e-13));
}

TEST_CASE("cross-phase closed form arithmetic") {
    XpmParams p{.gamma = 1.0, .delta_s = 100.0, .sigma_over_a = 0.1, .d = 200, .omega_c = 5, .delta_c = 50};
    CHECK(xpm_phase_closed(p) == doctest::Approx(-6.25e-3).epsilon(1e-12));
    auto p2 = p;
    p2.d *= 2;
    CHECK(xpm_phase_closed(p2) == doctest::Approx(2 * xpm_phase_closed(p)));
    p2 = p;
    p2.delta_s = -p.delta_s;
    CHECK(xpm_phase_closed(p2) == doctest::Approx(-xpm_phase_closed(p)));
}

TEST_CASE("cross-phase quadrature") {
    XpmParams p{.gamma = 18.85, .delta_s = 56.5, .sigma_over_a = 5.5e-4, .d = 200, .omega_c = 15, .delta_c = 1000};
    double closed = xpm_phase_closed(p);
    CHECK(xpm_phase_numeric(p) == doctest::Approx(closed).epsilon(1e-6));
    auto q = p;
    q.omega_c *= 2;
    CHECK(xpm_phase_numeric(q) == doctest::Approx(xpm_phase_numeric(p)).epsilon(1e-6));
    q.omega_c = 0;
    CHECK_THROWS_AS(xpm_phase_numeric(q), ValidationError);
    CHECK(std::abs(closed) > 3e-4);
    CHECK(std::abs(closed) < 3e-3);
}

TEST_CASE("property: cross-phase quadrature matches the closed form on random draws") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> lg(-1, 1);
    for (int i = 0; i < 50; ++i) {
        XpmParams p{.gamma = 10 * std::pow(10, lg(rng)), .delta_s = 100 * std::pow(10, lg(rng)) * (lg(rng) > 0 ? 1 : -1),
                    .sigma_over_a = 1e-3 * std::pow(10, lg(rng)), .d = 100 * std::pow(10, lg(rng)),
                    .omega_c = 10 * std::pow(10, lg(rng)), .delta_c = 500 * std::pow(10, lg(rng))};
        CHECK(xpm_phase_numeric(p, 3.0 * lg(rng)) == doctest::Approx(xpm_phase_closed(p)).epsilon(1e-6));
    }
}

TEST_CASE("adaptive Simpson integrates smooth functions") {
    CHECK(adaptive_simpson([](double x) { return std::sin(x); }, 0, std::numbers::pi, 1e-12) ==
          doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("local maxima are interior only") {
    std::vector<double> v{5, 1, 3, 1, 0.001, 2, 1, 4};
    auto m = local_maxima(v, 0.1);
    REQUIRE(m.size() == 2);
    CHECK(m[0] == 2);
    CHECK(m[1] == 5);
}

TEST_CASE("summary formatting") {
    Summary s;
    s.add("a", 0.1);
    s.add("b", std::string("x"));
    s.add("c", cplx(3, 4));
    CHECK(s.str() == "a=0.10000000000000001\nb=x\nc_re=3\nc_im=4\nc_abs=5\n");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("bright-state run reports a fit near the predicted rate") {
    auto p = default_params();
    double om = mhz_to_rad_per_us(2.4);
    auto s0 = make_dual_gaussian_spinwave(128, {0.3, 0.7}, 0.05, 0.0, 1.0).profile;
    GridSpec g{.n_points = 128, .dt = 0.01, .sample_stride = 5};
    auto tl = sl_timeline(6.0, om);
    auto rec = run(tl, g, p, initial_state(s0), Tier::ideal, ModelOptions{});
    auto sum = analyze_record(rec, tl);
    double r = value_of(sum, "predicted_r_bright_per_us");
    CHECK(value_of(sum, "bright_fit_rate_per_us") == doctest::Approx(r).epsilon(0.02));
    CHECK(std::abs(value_of(sum, "ledger_residual_relative")) < 1e-3);
    CHECK(value_of(sum, "stationarity") > 0.1);
}
