#include "slsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace slsim {

BrightDark bright_dark_decompose(const SpinwaveProfile& s)
{
    const cplx mean = trapezoid(s.values());
    std::vector<cplx> dark(s.values().begin(), s.values().end());
    for (auto& z : dark)
        z -= mean;
    return {mean, SpinwaveProfile(std::move(dark))};
}

cplx integrated_amplitude(std::span<const cplx> s) { return trapezoid(s); }

cplx integrated_amplitude(std::span<const cplx> s, double gauge)
{
    if (gauge == 0.0)
        return trapezoid(s);
    std::vector<cplx> v(s.begin(), s.end());
    const double h = 1.0 / static_cast<double>(v.size() - 1);
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] *= std::exp(I * (-gauge * static_cast<double>(k) * h));
    return trapezoid(v);
}

double gauge_wavenumber(const SimulationRecord& rec)
{
    const bool full = rec.tier == Tier::three_level ||
                      (rec.tier != Tier::ideal && rec.options.dispersion == DispersionMode::full);
    if (!full)
        return 0.0;
    const auto c = field_coefficients(rec.params, 0.0, 0.0, DispersionMode::full,
                                      rec.tier != Tier::three_level && rec.options.far_detuned);
    return 0.5 * (c.alpha_plus.real() - c.alpha_minus.real());
}

DecayFit fit_decay_rate(std::span<const double> times, std::span<const double> values, FitWindow window)
{
    if (times.size() != values.size())
        throw ValidationError("fit_decay_rate: times and values differ in length");
    if (!(window.t_start < window.t_end))
        throw ValidationError("fit_decay_rate: window start must precede its end");

    std::vector<double> x, y;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < window.t_start || times[i] > window.t_end)
            continue;
        if (!(values[i] > 0.0) || !std::isfinite(values[i]))
            throw ValidationError("fit_decay_rate: non-positive value at t = " + format_number(times[i]));
        x.push_back(times[i]);
        y.push_back(std::log(values[i]));
    }
    const std::size_t n = x.size();
    if (n < 8)
        throw ValidationError("fit_decay_rate: need at least 8 samples in the window, got " + std::to_string(n));

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0))
        throw ValidationError("fit_decay_rate: window contains a single time value");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (intercept + slope * x[i]);
        ssr += r * r;
    }

    DecayFit fit;
    fit.rate = -slope;
    fit.amplitude = std::exp(intercept);
    fit.stderr_rate = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    fit.window = window;
    fit.residual_rms = std::sqrt(ssr / static_cast<double>(n));
    fit.samples = n;
    return fit;
}

double stationarity_metric(std::span<const cplx> a, std::span<const cplx> b)
{
    if (a.size() != b.size())
        throw ValidationError("stationarity_metric: profiles differ in length");
    const double na = std::sqrt(trapezoid_abs2(a));
    const double nb = std::sqrt(trapezoid_abs2(b));
    if (!(na > 0.0) || !(nb > 0.0))
        throw ValidationError("stationarity_metric: undefined for a zero-norm profile");
    std::vector<cplx> diff(a.size());
    for (std::size_t k = 0; k < a.size(); ++k)
        diff[k] = std::abs(a[k]) / na - std::abs(b[k]) / nb;
    return std::sqrt(trapezoid_abs2(diff));
}

std::size_t sample_index(const SimulationRecord& rec, double t)
{
    const double tol = 0.5 * rec.grid.dt;
    for (std::size_t i = 0; i < rec.times.size(); ++i)
        if (std::abs(rec.times[i] - t) <= tol)
            return i;
    throw ValidationError("no recorded sample at t = " + format_number(t));
}

double stationarity_metric(const SimulationRecord& rec, double t1, double t2)
{
    return stationarity_metric(rec.s_history[sample_index(rec, t1)], rec.s_history[sample_index(rec, t2)]);
}

namespace {

// Composite Simpson over tc +- 12 tau of f(t) E(t).
template <class F>
cplx pulse_quadrature(const ProbePulse& pulse, double max_freq, F&& weight)
{
    const double span = 12.0 * pulse.tau;
    double step = pulse.tau / 40.0;
    if (max_freq > 0.0)
        step = std::min(step, two_pi / (40.0 * max_freq));
    auto n = static_cast<std::size_t>(std::ceil(2.0 * span / step));
    n += n % 2;
    const double h = 2.0 * span / static_cast<double>(n);
    cplx sum{};
    for (std::size_t k = 0; k <= n; ++k) {
        const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        const double t = pulse.center_time - span + h * static_cast<double>(k);
        sum += w * weight(t) * pulse_envelope(pulse, t);
    }
    return sum * (h / 3.0);
}

} // namespace

GemOracle gem_fourier_oracle(const ProbePulse& pulse, double eta, double gamma, std::size_t n_points,
                             double detuning_offset)
{
    if (!(pulse.tau > 0.0))
        throw ValidationError("gem_fourier_oracle: pulse tau must be positive");
    if (eta == 0.0)
        throw ValidationError("gem_fourier_oracle: gradient eta must be non-zero");
    if (n_points < SpinwaveProfile::min_points)
        throw ValidationError("gem_fourier_oracle: need at least 16 grid points");

    GemOracle out;
    const double half = 0.5 * std::abs(eta);
    out.outside_window = std::abs(pulse.omega_plus_sb) >= half || std::abs(pulse.omega_minus_sb) >= half;

    const double norm = std::sqrt(std::abs(eta) * gamma / two_pi);
    const double max_sb = std::max(std::abs(pulse.omega_plus_sb), std::abs(pulse.omega_minus_sb));
    std::vector<cplx> v(n_points);
    const double h = 1.0 / static_cast<double>(n_points - 1);
    for (std::size_t k = 0; k < n_points; ++k) {
        const double q = (static_cast<double>(k) * h - 0.5) * eta + detuning_offset;
        v[k] = norm * pulse_quadrature(pulse, std::abs(q) + max_sb, [&](double t) {
                   return std::exp(I * (q * (t - pulse.center_time)));
               });
    }
    out.profile = SpinwaveProfile(std::move(v));
    return out;
}

double integrate_abs2(std::span<const cplx> s, double a, double b)
{
    const std::size_t n = s.size();
    if (n < 2)
        return 0.0;
    a = std::clamp(a, 0.0, 1.0);
    b = std::clamp(b, 0.0, 1.0);
    if (b <= a)
        return 0.0;
    const double h = 1.0 / static_cast<double>(n - 1);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double x0 = static_cast<double>(k) * h;
        const double x1 = x0 + h;
        const double lo = std::max(a, x0);
        const double hi = std::min(b, x1);
        if (hi <= lo)
            continue;
        const double f0 = std::norm(s[k]);
        const double f1 = std::norm(s[k + 1]);
        auto f = [&](double x) { return f0 + (f1 - f0) * (x - x0) / h; };
        sum += 0.5 * (f(lo) + f(hi)) * (hi - lo);
    }
    return sum;
}

AreaCheck area_relation_check(const SpinwaveProfile& s, const ProbePulse& pulse, double gamma, MemoryHalf half)
{
    AreaCheck c;
    const double energy = pulse_energy(pulse);
    switch (half) {
    case MemoryHalf::lower:
        c.measured = integrate_abs2(s.values(), 0.0, 0.5);
        c.predicted = 0.5 * gamma * energy;
        break;
    case MemoryHalf::upper:
        c.measured = integrate_abs2(s.values(), 0.5, 1.0);
        c.predicted = 0.5 * gamma * energy;
        break;
    case MemoryHalf::full:
        c.measured = trapezoid_abs2(s.values());
        c.predicted = gamma * energy;
        break;
    }
    if (c.predicted == 0.0) {
        c.degenerate = true;
        c.ratio = 1.0;
    } else {
        c.ratio = c.measured / c.predicted;
    }
    return c;
}

void validate(const XpmParams& p)
{
    auto fin = [](double v) { return std::isfinite(v); };
    if (!fin(p.gamma) || !fin(p.delta_s) || !fin(p.sigma_over_a) || !fin(p.d) || !fin(p.omega_c) ||
        !fin(p.delta_c))
        throw ValidationError("XPM parameters must be finite");
    if (p.delta_s == 0.0)
        throw ValidationError("XPM Stark detuning delta_s must be non-zero");
    if (!(p.sigma_over_a > 0.0))
        throw ValidationError("XPM sigma/A must be positive");
    if (p.gamma < 0.0 || p.d < 0.0)
        throw ValidationError("XPM gamma and d must be non-negative");
}

double xpm_phase_closed(const XpmParams& p)
{
    validate(p);
    return -(p.gamma / p.delta_s) * p.sigma_over_a * p.d / 32.0;
}

namespace {

double simpson_recursive(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                         double fb, double whole, double tol, int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_recursive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_recursive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth)
{
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_recursive(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

double xpm_phase_numeric(const XpmParams& p, double t0)
{
    validate(p);
    if (p.omega_c == 0.0)
        throw ValidationError("XPM phase diverges without a control field (omega_c = 0)");
    if (p.delta_c == 0.0)
        throw ValidationError("XPM control detuning delta_c must be non-zero");
    if (!(p.gamma > 0.0))
        throw ValidationError("XPM phase diverges for gamma = 0");

    const double ratio = p.omega_c * p.omega_c / (p.delta_c * p.delta_c);
    const double amp = p.d * p.sigma_over_a * p.gamma * p.gamma / 2.0 * ratio;
    const double k = 4.0 * p.gamma * ratio;
    auto integrand = [&](double t) { return -amp * std::exp(k * (t0 - t)) / (4.0 * p.delta_s); };
    const double t_end = t0 + std::log(1e12) / k;
    const double scale = std::abs(integrand(t0)) * (t_end - t0);
    // Split into pieces of one e-folding each so the tolerance stays relative.
    const int pieces = static_cast<int>(std::ceil(std::log(1e12)));
    double sum = 0.0;
    for (int i = 0; i < pieces; ++i) {
        const double a = t0 + (t_end - t0) * i / pieces;
        const double b = t0 + (t_end - t0) * (i + 1) / pieces;
        sum += adaptive_simpson(integrand, a, b, 1e-15 * scale);
    }
    return sum;
}

std::vector<std::size_t> local_maxima(std::span<const double> values, double min_relative)
{
    std::vector<std::size_t> out;
    if (values.empty())
        return out;
    const double top = *std::max_element(values.begin(), values.end());
    const double floor = min_relative * top;
    for (std::size_t i = 1; i + 1 < values.size(); ++i)
        if (values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] >= floor)
            out.push_back(i);
    return out;
}

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void Summary::add(const std::string& key, double value) { entries_.emplace_back(key, format_number(value)); }

void Summary::add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

void Summary::add(const std::string& key, cplx value)
{
    add(key + "_re", value.real());
    add(key + "_im", value.imag());
    add(key + "_abs", std::abs(value));
}

std::string Summary::str() const
{
    std::ostringstream os;
    for (const auto& [k, v] : entries_)
        os << k << '=' << v << '\n';
    return os.str();
}

namespace {

std::string stage_key(std::size_t i, const std::string& label)
{
    return "stage" + std::to_string(i + 1) + (label.empty() ? std::string() : "_" + label);
}

} // namespace

Summary analyze_record(const SimulationRecord& rec, const Timeline& tl, const AnalysisOptions& opt)
{
    Summary sum;
    sum.add("tier", to_string(rec.tier));
    sum.add("dispersion", to_string(rec.options.dispersion));
    sum.add("samples", static_cast<double>(rec.times.size()));
    if (rec.times.empty())
        return sum;

    // Analysis window: the stage labelled "sl", else the first stage with both
    // controls lit, else the whole run.
    double w_start = rec.times.front();
    double w_end = rec.times.back();
    double op = 0.0, om = 0.0;
    const std::size_t n_stages = std::min(tl.stages.size(), rec.stages.size());
    std::size_t chosen = n_stages;
    for (std::size_t i = 0; i < n_stages && chosen == n_stages; ++i)
        if (tl.stages[i].label == "sl")
            chosen = i;
    for (std::size_t i = 0; i < n_stages && chosen == n_stages; ++i) {
        const auto& c = tl.stages[i].controls;
        if (c.omega_plus.start > 0.0 && c.omega_minus.start > 0.0)
            chosen = i;
    }
    if (chosen < n_stages) {
        w_start = rec.stages[chosen].t_start;
        w_end = rec.stages[chosen].t_end;
        op = tl.stages[chosen].controls.omega_plus.start;
        om = tl.stages[chosen].controls.omega_minus.start;
        sum.add("analysis_stage", stage_key(chosen, tl.stages[chosen].label));
    } else {
        for (const auto& st : tl.stages) {
            if (st.controls.omega_plus.start > 0.0 || st.controls.omega_minus.start > 0.0) {
                op = st.controls.omega_plus.start;
                om = st.controls.omega_minus.start;
                break;
            }
        }
        sum.add("analysis_stage", "all");
    }
    sum.add("analysis_t_start_us", w_start);
    sum.add("analysis_t_end_us", w_end);

    const DerivedRates dr = derived_rates(rec.params, op, om);
    sum.add("predicted_r_bright_per_us", dr.r_bright);
    sum.add("predicted_gamma_sl_per_us", dr.gamma_sl);
    sum.add("predicted_gamma_sl_khz", dr.gamma_sl * 1e3);
    sum.add("unequal_controls", dr.unequal_controls ? "true" : "false");
    const double gauge = gauge_wavenumber(rec);
    sum.add("gauge_wavenumber", gauge);

    std::vector<double> t_win, m_abs, stored;
    std::size_t i_first = rec.times.size(), i_last = 0;
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        if (rec.times[i] < w_start - 0.5 * rec.grid.dt || rec.times[i] > w_end + 0.5 * rec.grid.dt)
            continue;
        i_first = std::min(i_first, i);
        i_last = std::max(i_last, i);
        t_win.push_back(rec.times[i]);
        m_abs.push_back(std::abs(integrated_amplitude(rec.s_history[i], gauge)));
        stored.push_back(trapezoid_abs2(rec.s_history[i]));
    }
    if (t_win.empty())
        return sum;

    sum.add("integrated_amplitude_start", integrated_amplitude(rec.s_history[i_first], gauge));
    sum.add("integrated_amplitude_end", integrated_amplitude(rec.s_history[i_last], gauge));
    sum.add("spinwave_norm2_start", stored.front());
    sum.add("spinwave_norm2_end", stored.back());

    const double settle = dr.r_bright > 0.0 ? 3.0 / dr.r_bright : 0.0;

    try {
        double end = opt.bright_fit_end >= 0.0 ? opt.bright_fit_end : w_start + settle;
        if (!(dr.r_bright > 0.0))
            throw ValidationError("no control field in the analysis window");
        const auto fit = fit_decay_rate(t_win, m_abs, {w_start, std::min(end, w_end)});
        sum.add("bright_fit_rate_per_us", fit.rate);
        sum.add("bright_fit_stderr_per_us", fit.stderr_rate);
        sum.add("bright_fit_samples", static_cast<double>(fit.samples));
    } catch (const ValidationError& e) {
        sum.add("bright_fit", std::string("unavailable: ") + e.what());
    }

    try {
        double start = opt.dark_fit_start >= 0.0 ? opt.dark_fit_start : w_start + settle;
        const auto fit = fit_decay_rate(t_win, stored, {start, w_end});
        // |S|^2 decays at twice the amplitude rate.
        sum.add("dark_fit_amplitude_rate_per_us", 0.5 * fit.rate);
        sum.add("dark_fit_amplitude_rate_khz", 0.5 * fit.rate * 1e3);
        sum.add("dark_fit_stderr_per_us", 0.5 * fit.stderr_rate);
        sum.add("dark_fit_samples", static_cast<double>(fit.samples));
    } catch (const ValidationError& e) {
        sum.add("dark_fit", std::string("unavailable: ") + e.what());
    }

    try {
        std::size_t j = i_first;
        const double target = settle > 0.0 ? std::min(w_start + settle, w_end) : w_end;
        for (std::size_t i = i_first; i <= i_last; ++i)
            if (rec.times[i] <= target + 0.5 * rec.grid.dt)
                j = i;
        sum.add("stationarity_t2_us", rec.times[j]);
        sum.add("stationarity", stationarity_metric(rec.s_history[i_first], rec.s_history[j]));
        sum.add("stationarity_end", stationarity_metric(rec.s_history[i_first], rec.s_history[i_last]));
    } catch (const ValidationError& e) {
        sum.add("stationarity", std::string("unavailable: ") + e.what());
    }

    for (std::size_t i = 0; i < rec.stages.size(); ++i) {
        const auto& w = rec.stages[i];
        const std::string key = stage_key(i, w.label);
        sum.add(key + "_emitted_forward", w.emitted_forward);
        sum.add(key + "_emitted_backward", w.emitted_backward);
    }

    if (!opt.include_ledger)
        return sum;
    const auto& L = rec.ledger;
    sum.add("ledger_initial_stored", L.initial_stored);
    sum.add("ledger_final_stored", L.final_stored);
    sum.add("ledger_input", L.input);
    sum.add("ledger_emitted", L.emitted);
    sum.add("ledger_lost", L.lost);
    sum.add("ledger_residual", L.residual);
    const double reference = std::max(L.initial_stored, L.input);
    sum.add("ledger_residual_relative", reference > 0.0 ? L.residual / reference : 0.0);
    return sum;
}

} // namespace slsim
