#include "slsim/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <sstream>

namespace slsim {

std::string to_string(Tier t)
{
    switch (t) {
    case Tier::ideal: return "ideal";
    case Tier::adiabatic: return "adiabatic";
    case Tier::three_level: return "three_level";
    }
    return "?";
}

Tier tier_from_string(const std::string& s)
{
    if (s == "ideal")
        return Tier::ideal;
    if (s == "adiabatic")
        return Tier::adiabatic;
    if (s == "three_level")
        return Tier::three_level;
    throw ValidationError("unknown tier '" + s + "' (allowed: ideal, adiabatic, three_level)");
}

std::string to_string(DispersionMode m)
{
    switch (m) {
    case DispersionMode::full: return "full";
    case DispersionMode::common_phase_removed: return "common_phase_removed";
    case DispersionMode::none: return "none";
    }
    return "?";
}

DispersionMode dispersion_from_string(const std::string& s)
{
    if (s == "full")
        return DispersionMode::full;
    if (s == "common_phase_removed")
        return DispersionMode::common_phase_removed;
    if (s == "none")
        return DispersionMode::none;
    throw ValidationError("unknown dispersion mode '" + s + "' (allowed: full, common_phase_removed, none)");
}

ModelOptions ideal_options(bool include_decay)
{
    ModelOptions o;
    o.dispersion = DispersionMode::none;
    o.far_detuned = true;
    o.include_decay = include_decay;
    o.include_stark = false;
    return o;
}

EnsembleState initial_state(SpinwaveProfile s, double t0)
{
    EnsembleState st;
    st.s = std::move(s);
    st.t = t0;
    return st;
}

DriveFunction constant_drive(DriveSnapshot snap)
{
    return [snap](double) { return snap; };
}

DriveSnapshot stage_drive(const Stage& stage, double t_start, double t)
{
    DriveSnapshot d;
    const double frac = stage.duration > 0.0 ? std::clamp((t - t_start) / stage.duration, 0.0, 1.0) : 0.0;
    d.omega_plus = stage.controls.omega_plus.at(frac);
    d.omega_minus = stage.controls.omega_minus.at(frac);
    d.eta_active = stage.eta_active;
    d.detuning_offset = stage.detuning_offset;
    d.cancel_light_shift = stage.cancel_light_shift;
    if (stage.input_pulse) {
        const cplx e = pulse_envelope(*stage.input_pulse, t);
        if (stage.input_face == Face::forward)
            d.inputs.plus = e;
        else
            d.inputs.minus = e;
    }
    return d;
}

namespace {

// Rates entering the excitation ledger at one instant.
struct Rates {
    double stored = 0.0;
    double loss = 0.0;
    double emitted_fwd = 0.0;
    double emitted_bwd = 0.0;
    double input = 0.0;
};

void check_finite(std::span<const cplx> v, const char* what)
{
    for (const auto& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw NumericError(std::string("non-finite ") + what + " encountered during integration");
}

// ---------------------------------------------------------------------------
// Adiabatic tier

struct AdiabaticCoefficients {
    FieldCoefficients fields;
    cplx kappa_plus{};
    cplx kappa_minus{};
    cplx eff_plus{};  // Delta~+ or Delta+
    cplx eff_minus{};
    double decay = 0.0;          // applied decay rate
    double gamma_prime = 0.0;    // gamma' from the exact expressions
    double uniform_detuning = 0.0;
    double gradient = 0.0;       // eta * eta_active
    double coupling_rate = 0.0;
};

AdiabaticCoefficients adiabatic_coefficients(const PhysicalParams& p, const ModelOptions& opt,
                                             const DriveSnapshot& snap)
{
    AdiabaticCoefficients c;
    const double op = snap.omega_plus;
    const double om = snap.omega_minus;
    c.fields = field_coefficients(p, op, om, opt.dispersion, opt.far_detuned);
    if (opt.far_detuned) {
        c.eff_plus = p.delta_plus;
        c.eff_minus = p.delta_minus;
    } else {
        c.eff_plus = delta_tilde(p.delta_plus, p.gamma);
        c.eff_minus = delta_tilde(p.delta_minus, p.gamma);
    }
    const double sqrt_d = std::sqrt(p.d);
    c.kappa_plus = I * sqrt_d * p.gamma * op / c.eff_plus;
    c.kappa_minus = I * sqrt_d * p.gamma * om / c.eff_minus;

    const DerivedRates rates = derived_rates(p, op, om);
    c.gamma_prime = rates.gamma_prime;

    double stark = 0.0;
    if (opt.far_detuned) {
        stark = -op * op / p.delta_plus - om * om / p.delta_minus;
        if (opt.include_decay)
            c.decay = p.gamma0 + p.gamma * (op * op / (p.delta_plus * p.delta_plus) +
                                            om * om / (p.delta_minus * p.delta_minus));
    } else {
        stark = rates.delta_prime - p.delta_two_photon;
        if (opt.include_decay)
            c.decay = rates.gamma_prime;
    }
    c.uniform_detuning = p.delta_two_photon + snap.detuning_offset;
    if (opt.include_stark && !snap.cancel_light_shift)
        c.uniform_detuning += stark;
    c.gradient = p.eta * snap.eta_active;
    c.coupling_rate = p.gamma * std::max(std::norm(c.fields.beta_plus), std::norm(c.fields.beta_minus));
    return c;
}

class AdiabaticEngine {
public:
    AdiabaticEngine(const PhysicalParams& p, const ModelOptions& opt, std::size_t n)
        : p_(p), opt_(opt), n_(n), e_plus_(n), e_minus_(n), k_(4, std::vector<cplx>(n)), tmp_(n), detuning_(n)
    {}

    void check_step(const DriveSnapshot& snap, double dt) const
    {
        const auto c = adiabatic_coefficients(p_, opt_, snap);
        const double rate = c.decay + c.coupling_rate;
        if (dt * rate >= 0.1) {
            std::ostringstream os;
            os << "time step too large: dt*(gamma' + coupling rate) = " << dt * rate
               << " >= 0.1 (limiting rate: " << (c.coupling_rate >= c.decay ? "r_bright" : "gamma'")
               << " = " << std::max(c.coupling_rate, c.decay) << " rad/us)";
            throw NumericError(os.str());
        }
        const double max_det = std::abs(c.uniform_detuning) + 0.5 * std::abs(c.gradient);
        if (dt * max_det >= 0.5) {
            std::ostringstream os;
            os << "time step too large: dt*max|delta'| = " << dt * max_det
               << " >= 0.5 (limiting rate: delta' = " << max_det << " rad/us)";
            throw NumericError(os.str());
        }
    }

    // dS/dt for the given spinwave; leaves the fields in e_plus_/e_minus_.
    void rhs(std::span<const cplx> s, const DriveSnapshot& snap, std::span<cplx> out)
    {
        const auto c = adiabatic_coefficients(p_, opt_, snap);
        solve_direction_into(s, c.fields.alpha_plus, c.fields.beta_plus, snap.inputs.plus, Direction::forward,
                             e_plus_);
        solve_direction_into(s, c.fields.alpha_minus, c.fields.beta_minus, snap.inputs.minus,
                             Direction::backward, e_minus_);
        const double h = 1.0 / static_cast<double>(n_ - 1);
        for (std::size_t k = 0; k < n_; ++k) {
            const double det = c.uniform_detuning + c.gradient * (static_cast<double>(k) * h - 0.5);
            out[k] = -cplx(c.decay, det) * s[k] + c.kappa_plus * e_plus_[k] + c.kappa_minus * e_minus_[k];
        }
    }

    void step(std::vector<cplx>& s, double t, const DriveFunction& drive, double dt)
    {
        const DriveSnapshot d0 = drive(t);
        const DriveSnapshot dh = drive(t + 0.5 * dt);
        const DriveSnapshot d1 = drive(t + dt);
        rhs(s, d0, k_[0]);
        for (std::size_t k = 0; k < n_; ++k)
            tmp_[k] = s[k] + 0.5 * dt * k_[0][k];
        rhs(tmp_, dh, k_[1]);
        for (std::size_t k = 0; k < n_; ++k)
            tmp_[k] = s[k] + 0.5 * dt * k_[1][k];
        rhs(tmp_, dh, k_[2]);
        for (std::size_t k = 0; k < n_; ++k)
            tmp_[k] = s[k] + dt * k_[2][k];
        rhs(tmp_, d1, k_[3]);
        for (std::size_t k = 0; k < n_; ++k)
            s[k] += dt / 6.0 * (k_[0][k] + 2.0 * k_[1][k] + 2.0 * k_[2][k] + k_[3][k]);
        check_finite(s, "spinwave");
    }

    // Fields and ledger rates for spinwave s under drive snap.
    Rates evaluate(std::span<const cplx> s, const DriveSnapshot& snap)
    {
        const auto c = adiabatic_coefficients(p_, opt_, snap);
        solve_direction_into(s, c.fields.alpha_plus, c.fields.beta_plus, snap.inputs.plus, Direction::forward,
                             e_plus_);
        solve_direction_into(s, c.fields.alpha_minus, c.fields.beta_minus, snap.inputs.minus,
                             Direction::backward, e_minus_);
        Rates r;
        r.stored = trapezoid_abs2(s);
        if (opt_.far_detuned) {
            r.loss = 2.0 * c.decay * r.stored;
        } else {
            // Slaved optical coherences P = (sqrt(d) Gamma E + Omega S) / Delta~ carry
            // the spontaneous-emission loss 2 Gamma |P|^2.
            const double sqrt_d = std::sqrt(p_.d);
            for (std::size_t k = 0; k < n_; ++k) {
                tmp_[k] = (sqrt_d * p_.gamma * e_plus_[k] + snap.omega_plus * s[k]) / c.eff_plus;
            }
            double p2 = trapezoid_abs2(tmp_);
            for (std::size_t k = 0; k < n_; ++k) {
                tmp_[k] = (sqrt_d * p_.gamma * e_minus_[k] + snap.omega_minus * s[k]) / c.eff_minus;
            }
            p2 += trapezoid_abs2(tmp_);
            r.loss = 2.0 * p_.gamma * p2 + 2.0 * (c.decay - (c.gamma_prime - p_.gamma0)) * r.stored;
        }
        r.emitted_fwd = p_.gamma * std::norm(e_plus_.back());
        r.emitted_bwd = p_.gamma * std::norm(e_minus_.front());
        r.input = p_.gamma * (std::norm(e_plus_.front()) + std::norm(e_minus_.back()));
        return r;
    }

    const std::vector<cplx>& e_plus() const { return e_plus_; }
    const std::vector<cplx>& e_minus() const { return e_minus_; }

private:
    PhysicalParams p_;
    ModelOptions opt_;
    std::size_t n_;
    std::vector<cplx> e_plus_, e_minus_;
    std::vector<std::vector<cplx>> k_;
    std::vector<cplx> tmp_;
    std::vector<double> detuning_;
};

// ---------------------------------------------------------------------------
// Three-level tier

// ETDRK4 coefficients for a scalar linear rate z = L dt, evaluated by the
// contour-integral average of Kassam and Trefethen to avoid cancellation.
struct EtdCoefficients {
    cplx e{}, e2{}, q{}, f1{}, f2{}, f3{};
};

EtdCoefficients etd_coefficients(cplx L, double dt)
{
    constexpr int m = 32;
    const cplx z = L * dt;
    EtdCoefficients c;
    c.e = std::exp(z);
    c.e2 = std::exp(0.5 * z);
    cplx q{}, f1{}, f2{}, f3{};
    for (int j = 0; j < m; ++j) {
        const double theta = std::numbers::pi * (static_cast<double>(j) + 0.5) / m;
        for (double sgn : {1.0, -1.0}) {
            const cplx w = z + std::exp(I * (sgn * theta));
            const cplx ew = std::exp(w);
            const cplx w3 = w * w * w;
            q += (std::exp(0.5 * w) - 1.0) / w;
            f1 += (-4.0 - w + ew * (4.0 - 3.0 * w + w * w)) / w3;
            f2 += (2.0 + w + ew * (w - 2.0)) / w3;
            f3 += (-4.0 - 3.0 * w - w * w + ew * (4.0 - w)) / w3;
        }
    }
    const double inv = 1.0 / (2.0 * m);
    c.q = dt * q * inv;
    c.f1 = dt * f1 * inv;
    c.f2 = dt * f2 * inv;
    c.f3 = dt * f3 * inv;
    return c;
}

class ThreeLevelEngine {
public:
    ThreeLevelEngine(const PhysicalParams& p, bool include_decay, std::size_t n)
        : p_(p), decay_(include_decay ? p.gamma0 : 0.0), n_(n), e_plus_(n), e_minus_(n)
    {
        for (auto& v : k_)
            v.assign(3 * n, {});
        tmp_.assign(3 * n, {});
        lin_plus_ = -cplx(p.gamma, p.delta_plus);
        lin_minus_ = -cplx(p.gamma, p.delta_minus);
    }

    void check_step(double dt) const
    {
        const double coupling = p_.d * p_.gamma;
        if (dt * coupling >= 1.0) {
            std::ostringstream os;
            os << "time step too large for the three-level tier: dt*d*Gamma = " << dt * coupling
               << " >= 1 (limiting rate: field coupling d*Gamma = " << coupling << " rad/us)";
            throw NumericError(os.str());
        }
        const double stiff = std::max(std::abs(lin_plus_), std::abs(lin_minus_));
        if (dt * stiff >= 50.0) {
            std::ostringstream os;
            os << "time step too large for the three-level tier: dt*|Gamma + i Delta| = " << dt * stiff
               << " >= 50";
            throw NumericError(os.str());
        }
    }

    void prepare(double dt)
    {
        if (dt != dt_) {
            dt_ = dt;
            c_plus_ = etd_coefficients(lin_plus_, dt);
            c_minus_ = etd_coefficients(lin_minus_, dt);
            c_zero_ = etd_coefficients(0.0, dt);
        }
    }

    double local_detuning(const DriveSnapshot& snap, double xi) const
    {
        double det = p_.delta_two_photon + snap.detuning_offset + p_.eta * snap.eta_active * (xi - 0.5);
        if (snap.cancel_light_shift) {
            const double g2 = p_.gamma * p_.gamma;
            det += snap.omega_plus * snap.omega_plus * p_.delta_plus / (g2 + p_.delta_plus * p_.delta_plus);
            det += snap.omega_minus * snap.omega_minus * p_.delta_minus / (g2 + p_.delta_minus * p_.delta_minus);
        }
        return det;
    }

    void solve_fields_for(std::span<const cplx> y, const DriveSnapshot& snap)
    {
        const double sqrt_d = std::sqrt(p_.d);
        solve_direction_into(y.subspan(n_, n_), 0.0, sqrt_d, snap.inputs.plus, Direction::forward, e_plus_);
        solve_direction_into(y.subspan(2 * n_, n_), 0.0, sqrt_d, snap.inputs.minus, Direction::backward, e_minus_);
    }

    // Non-stiff part of the right-hand side; layout y = [S, P+, P-].
    void nonlinear(std::span<const cplx> y, const DriveSnapshot& snap, std::span<cplx> out)
    {
        solve_fields_for(y, snap);
        const double sqrt_d = std::sqrt(p_.d);
        const double h = 1.0 / static_cast<double>(n_ - 1);
        const cplx gp = I * snap.omega_plus;
        const cplx gm = I * snap.omega_minus;
        const cplx src = I * sqrt_d * p_.gamma;
        for (std::size_t k = 0; k < n_; ++k) {
            const cplx s = y[k];
            const cplx pp = y[n_ + k];
            const cplx pm = y[2 * n_ + k];
            const double det = local_detuning(snap, static_cast<double>(k) * h);
            out[k] = -cplx(decay_, det) * s + gp * pp + gm * pm;
            out[n_ + k] = src * e_plus_[k] + gp * s;
            out[2 * n_ + k] = src * e_minus_[k] + gm * s;
        }
    }

    const EtdCoefficients& coeff(std::size_t idx) const
    {
        if (idx < n_)
            return c_zero_;
        return idx < 2 * n_ ? c_plus_ : c_minus_;
    }

    void step(std::vector<cplx>& y, double t, const DriveFunction& drive, double dt)
    {
        prepare(dt);
        const DriveSnapshot d0 = drive(t);
        const DriveSnapshot dh = drive(t + 0.5 * dt);
        const DriveSnapshot d1 = drive(t + dt);
        auto& nu = k_[0];
        auto& na = k_[1];
        auto& nb = k_[2];
        auto& nc = k_[3];
        const std::size_t m = 3 * n_;

        nonlinear(y, d0, nu);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& c = coeff(i);
            tmp_[i] = c.e2 * y[i] + c.q * nu[i];
        }
        nonlinear(tmp_, dh, na);
        // tmp_ holds a; keep it for stage c.
        std::vector<cplx>& a = a_;
        a = tmp_;
        for (std::size_t i = 0; i < m; ++i) {
            const auto& c = coeff(i);
            tmp_[i] = c.e2 * y[i] + c.q * na[i];
        }
        nonlinear(tmp_, dh, nb);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& c = coeff(i);
            tmp_[i] = c.e2 * a[i] + c.q * (2.0 * nb[i] - nu[i]);
        }
        nonlinear(tmp_, d1, nc);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& c = coeff(i);
            y[i] = c.e * y[i] + c.f1 * nu[i] + 2.0 * c.f2 * (na[i] + nb[i]) + c.f3 * nc[i];
        }
        check_finite(y, "three-level state");
    }

    Rates evaluate(std::span<const cplx> y, const DriveSnapshot& snap)
    {
        solve_fields_for(y, snap);
        Rates r;
        const double s2 = trapezoid_abs2(y.subspan(0, n_));
        const double p2 = trapezoid_abs2(y.subspan(n_, n_)) + trapezoid_abs2(y.subspan(2 * n_, n_));
        r.stored = s2 + p2;
        r.loss = 2.0 * decay_ * s2 + 2.0 * p_.gamma * p2;
        r.emitted_fwd = p_.gamma * std::norm(e_plus_.back());
        r.emitted_bwd = p_.gamma * std::norm(e_minus_.front());
        r.input = p_.gamma * (std::norm(e_plus_.front()) + std::norm(e_minus_.back()));
        return r;
    }

    const std::vector<cplx>& e_plus() const { return e_plus_; }
    const std::vector<cplx>& e_minus() const { return e_minus_; }

private:
    PhysicalParams p_;
    double decay_;
    std::size_t n_;
    cplx lin_plus_{}, lin_minus_{};
    double dt_ = -1.0;
    EtdCoefficients c_plus_, c_minus_, c_zero_;
    std::vector<cplx> e_plus_, e_minus_;
    std::array<std::vector<cplx>, 4> k_;
    std::vector<cplx> tmp_, a_;
};

std::vector<cplx> pack(const EnsembleState& st)
{
    const std::size_t n = st.s.n_points();
    std::vector<cplx> y(3 * n);
    std::copy(st.s.values().begin(), st.s.values().end(), y.begin());
    if (st.p_plus.size() == n)
        std::copy(st.p_plus.begin(), st.p_plus.end(), y.begin() + static_cast<std::ptrdiff_t>(n));
    if (st.p_minus.size() == n)
        std::copy(st.p_minus.begin(), st.p_minus.end(), y.begin() + static_cast<std::ptrdiff_t>(2 * n));
    return y;
}

EnsembleState unpack(const std::vector<cplx>& y, std::size_t n, double t)
{
    EnsembleState st;
    st.s = SpinwaveProfile(std::vector<cplx>(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n)));
    st.p_plus.assign(y.begin() + static_cast<std::ptrdiff_t>(n), y.begin() + static_cast<std::ptrdiff_t>(2 * n));
    st.p_minus.assign(y.begin() + static_cast<std::ptrdiff_t>(2 * n), y.end());
    st.t = t;
    return st;
}

void check_state_grid(const EnsembleState& st)
{
    const std::size_t n = st.s.n_points();
    if (n < SpinwaveProfile::min_points)
        throw ValidationError("ensemble state has no spinwave grid");
    if (!st.p_plus.empty() && st.p_plus.size() != n)
        throw ValidationError("P+ grid does not match the spinwave grid");
    if (!st.p_minus.empty() && st.p_minus.size() != n)
        throw ValidationError("P- grid does not match the spinwave grid");
}

} // namespace

EnsembleState step_adiabatic(const EnsembleState& state, const PhysicalParams& p, const ModelOptions& opt,
                             const DriveFunction& drive, double dt)
{
    validate(p);
    check_state_grid(state);
    const std::size_t n = state.s.n_points();
    AdiabaticEngine engine(p, opt, n);
    engine.check_step(drive(state.t), dt);
    std::vector<cplx> s(state.s.values().begin(), state.s.values().end());
    engine.step(s, state.t, drive, dt);
    EnsembleState out;
    out.s = SpinwaveProfile(std::move(s));
    out.t = state.t + dt;
    return out;
}

EnsembleState step_three_level(const EnsembleState& state, const PhysicalParams& p, bool include_decay,
                               const DriveFunction& drive, double dt)
{
    validate(p);
    check_state_grid(state);
    const std::size_t n = state.s.n_points();
    ThreeLevelEngine engine(p, include_decay, n);
    engine.check_step(dt);
    auto y = pack(state);
    engine.step(y, state.t, drive, dt);
    return unpack(y, n, state.t + dt);
}

SpinwaveProfile ideal_closed_form(const SpinwaveProfile& s0, double r_bright, double t)
{
    const cplx m0 = trapezoid(s0.values());
    const double shift = 1.0 - std::exp(-r_bright * t);
    std::vector<cplx> v(s0.values().begin(), s0.values().end());
    for (auto& z : v)
        z -= m0 * shift;
    return SpinwaveProfile(std::move(v));
}

SimulationRecord run(const Timeline& tl, const GridSpec& grid, const PhysicalParams& p,
                     const EnsembleState& init, Tier tier, const ModelOptions& opt)
{
    validate(p);
    validate(tl, p);
    check_state_grid(init);
    const std::size_t n = init.s.n_points();
    if (n != grid.n_points)
        throw ValidationError("initial state has " + std::to_string(n) + " grid points, grid specifies " +
                              std::to_string(grid.n_points));
    if (!(grid.dt > 0.0) || !std::isfinite(grid.dt))
        throw ValidationError("time step must be positive");
    if (grid.sample_stride == 0)
        throw ValidationError("sample_stride must be at least 1");

    const ModelOptions model = tier == Tier::ideal ? ideal_options(opt.include_decay) : opt;

    SimulationRecord rec;
    rec.tier = tier;
    rec.options = model;
    rec.params = p;
    rec.grid = grid;
    rec.xi.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        rec.xi[k] = init.s.xi(k);

    AdiabaticEngine adiabatic(p, model, n);
    ThreeLevelEngine three(p, model.include_decay, n);
    const bool is_three = tier == Tier::three_level;

    std::vector<cplx> y = is_three ? pack(init)
                                   : std::vector<cplx>(init.s.values().begin(), init.s.values().end());
    auto spin = [&]() { return std::span<const cplx>(y.data(), n); };

    auto evaluate = [&](const DriveSnapshot& snap) {
        return is_three ? three.evaluate(y, snap) : adiabatic.evaluate(y, snap);
    };
    auto fields_plus = [&]() -> const std::vector<cplx>& { return is_three ? three.e_plus() : adiabatic.e_plus(); };
    auto fields_minus = [&]() -> const std::vector<cplx>& {
        return is_three ? three.e_minus() : adiabatic.e_minus();
    };

    auto record_detectors = [&](double t, const Rates& r) {
        rec.detector_times.push_back(t);
        rec.detector_fwd.push_back(fields_plus().back());
        rec.detector_bwd.push_back(fields_minus().front());
        rec.stored.push_back(r.stored);
    };
    auto record_sample = [&](double t) {
        rec.times.push_back(t);
        rec.s_history.emplace_back(spin().begin(), spin().end());
        rec.e_plus_history.push_back(fields_plus());
        rec.e_minus_history.push_back(fields_minus());
    };

    double t = init.t;
    std::size_t global_step = 0;
    DriveSnapshot last_snap;
    bool first = true;

    for (const Stage& stage : tl.stages) {
        const double ratio = stage.duration / grid.dt;
        const auto steps = static_cast<std::size_t>(std::llround(ratio));
        if (steps == 0 || std::abs(ratio - static_cast<double>(steps)) > 0.5)
            throw ValidationError("stage '" + stage.label + "' duration is not aligned to dt within dt/2");
        const double t_start = t;
        DriveFunction drive = [&stage, t_start](double tt) { return stage_drive(stage, t_start, tt); };
        if (is_three) {
            three.check_step(grid.dt);
        } else {
            adiabatic.check_step(drive(t_start), grid.dt);
            adiabatic.check_step(drive(t_start + stage.duration), grid.dt);
        }

        StageWindow win;
        win.label = stage.label;
        win.t_start = t_start;
        for (std::size_t i = 0; i < steps; ++i) {
            const double t0 = t_start + static_cast<double>(i) * grid.dt;
            const DriveSnapshot snap0 = drive(t0);
            const Rates r0 = evaluate(snap0);
            if (first) {
                rec.ledger.initial_stored = r0.stored;
                first = false;
            }
            record_detectors(t0, r0);
            if (global_step % grid.sample_stride == 0)
                record_sample(t0);

            if (is_three)
                three.step(y, t0, drive, grid.dt);
            else
                adiabatic.step(y, t0, drive, grid.dt);

            const double t1 = t0 + grid.dt;
            const Rates r1 = evaluate(drive(t1));
            const double half = 0.5 * grid.dt;
            const double emitted_f = half * (r0.emitted_fwd + r1.emitted_fwd);
            const double emitted_b = half * (r0.emitted_bwd + r1.emitted_bwd);
            const double lost = half * (r0.loss + r1.loss);
            const double input = half * (r0.input + r1.input);
            const double step_residual = (r1.stored - r0.stored) + emitted_f + emitted_b + lost - input;
            win.emitted_forward += emitted_f;
            win.emitted_backward += emitted_b;
            rec.ledger.emitted += emitted_f + emitted_b;
            rec.ledger.lost += lost;
            rec.ledger.input += input;
            rec.ledger.residual += step_residual;
            rec.ledger.abs_residual += std::abs(step_residual);
            ++global_step;
            last_snap = snap0;
            t = t1;
        }
        t = t_start + static_cast<double>(steps) * grid.dt;
        win.t_end = t;
        last_snap = drive(t);
        rec.stages.push_back(win);
    }

    const Rates rf = evaluate(last_snap);
    if (first)
        rec.ledger.initial_stored = rf.stored;
    rec.ledger.final_stored = rf.stored;
    record_detectors(t, rf);
    record_sample(t);

    if (is_three) {
        rec.final_state = unpack(y, n, t);
    } else {
        rec.final_state.s = SpinwaveProfile(std::vector<cplx>(y.begin(), y.end()));
        rec.final_state.t = t;
    }
    return rec;
}

} // namespace slsim
