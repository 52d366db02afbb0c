#include "slsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace slsim {

namespace {

std::string trim(const std::string& s)
{
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

std::string lower(std::string s)
{
    for (auto& c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

[[noreturn]] void fail(int line, const std::string& msg)
{
    throw ValidationError("config line " + std::to_string(line) + ": " + msg);
}

enum class Kind { number, integer, boolean, text };

struct KeySpec {
    const char* key;
    Kind kind;
};

const std::map<std::string, std::vector<KeySpec>>& schema()
{
    static const std::map<std::string, std::vector<KeySpec>> s = {
        {"run",
         {{"tier", Kind::text},
          {"dispersion", Kind::text},
          {"far_detuned", Kind::boolean},
          {"include_decay", Kind::boolean},
          {"include_stark", Kind::boolean},
          {"output_dir", Kind::text}}},
        {"params",
         {{"optical_depth", Kind::number},
          {"linewidth_mhz", Kind::number},
          {"ground_decay_hz", Kind::number},
          {"detuning_mhz", Kind::number},
          {"detuning_plus_mhz", Kind::number},
          {"detuning_minus_mhz", Kind::number},
          {"two_photon_detuning_mhz", Kind::number},
          {"gradient_mhz", Kind::number}}},
        {"grid", {{"n_points", Kind::integer}, {"dt_us", Kind::number}, {"sample_stride", Kind::integer}}},
        {"scenario",
         {{"preset", Kind::text},
          {"rabi_mhz", Kind::number},
          {"write_rabi_mhz", Kind::number},
          {"rabi_plus_mhz", Kind::number},
          {"rabi_minus_mhz", Kind::number},
          {"duration_us", Kind::number},
          {"t_write_us", Kind::number},
          {"t_rephase_us", Kind::number},
          {"t_sl_us", Kind::number},
          {"t_recall_us", Kind::number},
          {"backward_control", Kind::boolean},
          {"compensate_light_shift", Kind::boolean}}},
        {"spinwave",
         {{"shape", Kind::text},
          {"center1", Kind::number},
          {"center2", Kind::number},
          {"width", Kind::number},
          {"phase", Kind::number},
          {"amplitude", Kind::number}}},
        {"pulse",
         {{"amplitude", Kind::number},
          {"tau_us", Kind::number},
          {"center_us", Kind::number},
          {"sideband_plus_mhz", Kind::number},
          {"sideband_minus_mhz", Kind::number},
          {"phase", Kind::number}}},
        {"stage",
         {{"label", Kind::text},
          {"duration_us", Kind::number},
          {"rabi_plus_mhz", Kind::number},
          {"rabi_minus_mhz", Kind::number},
          {"rabi_plus_end_mhz", Kind::number},
          {"rabi_minus_end_mhz", Kind::number},
          {"gradient", Kind::integer},
          {"detuning_offset_mhz", Kind::number},
          {"cancel_light_shift", Kind::boolean},
          {"pulse", Kind::boolean},
          {"input_face", Kind::text}}},
        {"analysis", {{"bright_fit_end_us", Kind::number}, {"dark_fit_start_us", Kind::number}}},
    };
    return s;
}

std::string fmt(double v) { return format_number(v); }

// Typed access to one section with line-aware errors.
class SectionReader {
public:
    explicit SectionReader(const ConfigSection* sec) : sec_(sec) {}

    const ConfigEntry* find(const std::string& key) const
    {
        if (!sec_)
            return nullptr;
        for (const auto& e : sec_->entries)
            if (e.key == key)
                return &e;
        return nullptr;
    }

    std::optional<double> number(const std::string& key) const
    {
        const auto* e = find(key);
        if (!e)
            return std::nullopt;
        try {
            return parse_number(e->value);
        } catch (const ValidationError&) {
            fail(e->line, "'" + key + "' expects a number, got '" + e->value + "'");
        }
    }

    double number_or(const std::string& key, double fallback) const { return number(key).value_or(fallback); }

    std::optional<long long> integer(const std::string& key) const
    {
        const auto* e = find(key);
        if (!e)
            return std::nullopt;
        try {
            std::size_t used = 0;
            const long long v = std::stoll(e->value, &used);
            if (used != e->value.size())
                throw std::invalid_argument(e->value);
            return v;
        } catch (const std::exception&) {
            fail(e->line, "'" + key + "' expects an integer, got '" + e->value + "'");
        }
    }

    std::optional<bool> boolean(const std::string& key) const
    {
        const auto* e = find(key);
        if (!e)
            return std::nullopt;
        const std::string v = lower(e->value);
        if (v == "true" || v == "yes" || v == "on" || v == "1")
            return true;
        if (v == "false" || v == "no" || v == "off" || v == "0")
            return false;
        fail(e->line, "'" + key + "' expects true or false, got '" + e->value + "'");
    }

    std::optional<std::string> text(const std::string& key) const
    {
        const auto* e = find(key);
        return e ? std::optional<std::string>(e->value) : std::nullopt;
    }

    int line_of(const std::string& key) const
    {
        const auto* e = find(key);
        return e ? e->line : (sec_ ? sec_->line : 0);
    }

private:
    const ConfigSection* sec_;
};

template <class F>
auto with_line(int line, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const ValidationError& e) {
        fail(line, e.what());
    }
}

} // namespace

double parse_number(const std::string& raw)
{
    std::string s;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c)))
            s.push_back(c);
    if (s.empty())
        throw ValidationError("empty number");

    auto plain = [&](const std::string& t) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            throw ValidationError("malformed number '" + raw + "'");
        }
        if (used != t.size() || !std::isfinite(v))
            throw ValidationError("malformed number '" + raw + "'");
        return v;
    };

    const auto pos = lower(s).find("pi");
    if (pos == std::string::npos)
        return plain(s);

    // [sign][coef*]pi[/den]
    std::string head = s.substr(0, pos);
    std::string tail = s.substr(pos + 2);
    double coef = 1.0;
    if (head == "-") {
        coef = -1.0;
    } else if (head == "+" || head.empty()) {
        coef = 1.0;
    } else {
        if (head.back() != '*')
            throw ValidationError("malformed number '" + raw + "'");
        coef = plain(head.substr(0, head.size() - 1));
    }
    double den = 1.0;
    if (!tail.empty()) {
        if (tail.front() != '/')
            throw ValidationError("malformed number '" + raw + "'");
        den = plain(tail.substr(1));
        if (den == 0.0)
            throw ValidationError("division by zero in '" + raw + "'");
    }
    return coef * std::numbers::pi / den;
}

ConfigDocument parse_document(const std::string& text)
{
    ConfigDocument doc;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty())
            continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                fail(line, "malformed section header '" + s + "'");
            const std::string name = trim(s.substr(1, s.size() - 2));
            if (!schema().count(name)) {
                std::string allowed;
                for (const auto& [k, v] : schema())
                    allowed += (allowed.empty() ? "" : ", ") + k;
                fail(line, "unknown section [" + name + "] (allowed: " + allowed + ")");
            }
            if (name != "stage")
                for (const auto& sec : doc.sections)
                    if (sec.name == name)
                        fail(line, "section [" + name + "] appears twice (first at line " +
                                       std::to_string(sec.line) + ")");
            doc.sections.push_back({name, line, {}});
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            fail(line, "expected key = value, got '" + s + "'");
        if (doc.sections.empty())
            fail(line, "key outside any section");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        auto& sec = doc.sections.back();
        const auto& keys = schema().at(sec.name);
        const bool known = std::any_of(keys.begin(), keys.end(), [&](const KeySpec& k) { return key == k.key; });
        if (!known) {
            std::string allowed;
            for (const auto& k : keys)
                allowed += (allowed.empty() ? "" : ", ") + std::string(k.key);
            fail(line, "unknown key '" + key + "' in [" + sec.name + "] (allowed: " + allowed + ")");
        }
        for (const auto& e : sec.entries)
            if (e.key == key)
                fail(line, "duplicate key '" + key + "' (first at line " + std::to_string(e.line) + ")");
        if (value.empty())
            fail(line, "empty value for '" + key + "'");
        sec.entries.push_back({key, value, line});
    }
    return doc;
}

void set_value(ConfigDocument& doc, const std::string& section, const std::string& key, const std::string& value)
{
    if (section == "stage")
        throw ValidationError("stage keys cannot be overridden individually");
    if (!is_numeric_key(section, key)) {
        const auto it = schema().find(section);
        const bool exists = it != schema().end() &&
                            std::any_of(it->second.begin(), it->second.end(),
                                        [&](const KeySpec& k) { return key == k.key; });
        if (!exists)
            throw ValidationError("unknown configuration key '" + section + "." + key + "'");
    }
    for (auto& sec : doc.sections) {
        if (sec.name != section)
            continue;
        for (auto& e : sec.entries) {
            if (e.key == key) {
                e.value = value;
                return;
            }
        }
        sec.entries.push_back({key, value, 0});
        return;
    }
    doc.sections.push_back({section, 0, {{key, value, 0}}});
}

bool is_numeric_key(const std::string& section, const std::string& key)
{
    const auto it = schema().find(section);
    if (it == schema().end())
        return false;
    for (const auto& k : it->second)
        if (key == k.key)
            return k.kind == Kind::number || k.kind == Kind::integer;
    return false;
}

RunConfig resolve_config(const ConfigDocument& doc)
{
    auto section = [&](const std::string& name) -> const ConfigSection* {
        for (const auto& s : doc.sections)
            if (s.name == name)
                return &s;
        return nullptr;
    };

    RunConfig cfg;

    SectionReader run(section("run"));
    if (auto t = run.text("tier"))
        cfg.tier = with_line(run.line_of("tier"), [&] { return tier_from_string(*t); });
    if (auto d = run.text("dispersion"))
        cfg.model.dispersion = with_line(run.line_of("dispersion"), [&] { return dispersion_from_string(*d); });
    cfg.model.far_detuned = run.boolean("far_detuned").value_or(cfg.model.far_detuned);
    cfg.model.include_decay = run.boolean("include_decay").value_or(cfg.model.include_decay);
    cfg.model.include_stark = run.boolean("include_stark").value_or(cfg.model.include_stark);
    cfg.output_dir = run.text("output_dir").value_or(cfg.output_dir);

    const ConfigSection* params = section("params");
    if (!params)
        throw ValidationError("config: missing required section [params]");
    SectionReader pr(params);
    for (const auto& e : params->entries)
        cfg.lab[e.key] = *pr.number(e.key);
    with_line(params->line, [&] { return build_params(cfg.lab); });

    SectionReader grid(section("grid"));
    if (auto n = grid.integer("n_points")) {
        if (*n < static_cast<long long>(SpinwaveProfile::min_points))
            fail(grid.line_of("n_points"), "n_points must be at least 16");
        cfg.grid.n_points = static_cast<std::size_t>(*n);
    }
    cfg.grid.dt = grid.number_or("dt_us", cfg.grid.dt);
    if (!(cfg.grid.dt > 0.0))
        fail(grid.line_of("dt_us"), "dt_us must be positive");
    if (auto s = grid.integer("sample_stride")) {
        if (*s < 1)
            fail(grid.line_of("sample_stride"), "sample_stride must be at least 1");
        cfg.grid.sample_stride = static_cast<std::size_t>(*s);
    }

    SectionReader sc(section("scenario"));
    cfg.preset = sc.text("preset").value_or(cfg.preset);
    if (cfg.preset != "paper_experiment" && cfg.preset != "stationary_light" && cfg.preset != "explicit")
        fail(sc.line_of("preset"),
             "unknown preset '" + cfg.preset + "' (allowed: paper_experiment, stationary_light, explicit)");
    cfg.rabi_mhz = sc.number_or("rabi_mhz", 0.0);
    cfg.write_rabi_mhz = sc.number("write_rabi_mhz");
    cfg.rabi_plus_mhz = sc.number("rabi_plus_mhz");
    cfg.rabi_minus_mhz = sc.number("rabi_minus_mhz");
    cfg.duration_us = sc.number_or("duration_us", 0.0);
    cfg.t_write_us = sc.number_or("t_write_us", 0.0);
    cfg.t_rephase_us = sc.number("t_rephase_us");
    cfg.t_sl_us = sc.number_or("t_sl_us", 0.0);
    cfg.t_recall_us = sc.number_or("t_recall_us", 0.0);
    cfg.backward_control = sc.boolean("backward_control").value_or(true);
    cfg.compensate_light_shift = sc.boolean("compensate_light_shift").value_or(true);

    SectionReader sw(section("spinwave"));
    cfg.spinwave.shape = sw.text("shape").value_or(cfg.preset == "stationary_light" ? "dual_gaussian" : "zero");
    if (cfg.spinwave.shape != "zero" && cfg.spinwave.shape != "uniform" && cfg.spinwave.shape != "dual_gaussian")
        fail(sw.line_of("shape"), "unknown spinwave shape '" + cfg.spinwave.shape +
                                      "' (allowed: zero, uniform, dual_gaussian)");
    cfg.spinwave.center1 = sw.number_or("center1", cfg.spinwave.center1);
    cfg.spinwave.center2 = sw.number_or("center2", cfg.spinwave.center2);
    cfg.spinwave.width = sw.number_or("width", cfg.spinwave.width);
    cfg.spinwave.phase = sw.number_or("phase", cfg.spinwave.phase);
    cfg.spinwave.amplitude = sw.number_or("amplitude", cfg.spinwave.amplitude);

    if (const ConfigSection* ps = section("pulse")) {
        SectionReader p(ps);
        PulseSpec pulse;
        pulse.amplitude = p.number_or("amplitude", pulse.amplitude);
        pulse.tau_us = p.number_or("tau_us", pulse.tau_us);
        pulse.center_us = p.number_or("center_us", pulse.center_us);
        pulse.sideband_plus_mhz = p.number_or("sideband_plus_mhz", 0.0);
        pulse.sideband_minus_mhz = p.number_or("sideband_minus_mhz", 0.0);
        pulse.phase = p.number_or("phase", 0.0);
        if (!(pulse.tau_us > 0.0))
            fail(p.line_of("tau_us"), "tau_us must be positive");
        cfg.pulse = pulse;
    }

    for (const auto& s : doc.sections) {
        if (s.name != "stage")
            continue;
        SectionReader st(&s);
        StageSpec spec;
        spec.label = st.text("label").value_or("stage" + std::to_string(cfg.stages.size() + 1));
        spec.duration_us = st.number_or("duration_us", 0.0);
        if (!(spec.duration_us > 0.0))
            fail(st.line_of("duration_us"), "stage duration_us must be positive");
        spec.rabi_plus_mhz = st.number_or("rabi_plus_mhz", 0.0);
        spec.rabi_minus_mhz = st.number_or("rabi_minus_mhz", 0.0);
        spec.rabi_plus_end_mhz = st.number("rabi_plus_end_mhz");
        spec.rabi_minus_end_mhz = st.number("rabi_minus_end_mhz");
        spec.gradient = static_cast<int>(st.integer("gradient").value_or(0));
        if (spec.gradient < -1 || spec.gradient > 1)
            fail(st.line_of("gradient"), "gradient must be -1, 0 or 1");
        spec.detuning_offset_mhz = st.number_or("detuning_offset_mhz", 0.0);
        spec.cancel_light_shift = st.boolean("cancel_light_shift").value_or(false);
        spec.pulse = st.boolean("pulse").value_or(false);
        spec.input_face = st.text("input_face").value_or("forward");
        if (spec.input_face != "forward" && spec.input_face != "backward")
            fail(st.line_of("input_face"), "input_face must be forward or backward");
        if (spec.pulse && !cfg.pulse)
            fail(st.line_of("pulse"), "stage requests the input pulse but there is no [pulse] section");
        cfg.stages.push_back(spec);
    }

    SectionReader an(section("analysis"));
    cfg.bright_fit_end_us = an.number("bright_fit_end_us");
    cfg.dark_fit_start_us = an.number("dark_fit_start_us");

    if (cfg.preset != "explicit" && !cfg.stages.empty())
        throw ValidationError("config: [stage] sections are only allowed with preset = explicit");
    if (cfg.preset == "paper_experiment") {
        if (!cfg.pulse)
            throw ValidationError("config: preset paper_experiment needs a [pulse] section");
        if (!(cfg.t_write_us > 0.0))
            fail(sc.line_of("t_write_us"), "paper_experiment needs t_write_us > 0");
    }
    if (cfg.preset == "stationary_light" && !(cfg.duration_us > 0.0))
        fail(sc.line_of("duration_us"), "stationary_light needs duration_us > 0");

    // Build once so inconsistent timelines are reported at parse time.
    build_timeline(cfg);
    build_initial_state(cfg);
    return cfg;
}

RunConfig parse_config(const std::string& text) { return resolve_config(parse_document(text)); }

PhysicalParams physical_params(const RunConfig& cfg) { return build_params(cfg.lab); }

std::optional<ProbePulse> probe_pulse(const RunConfig& cfg)
{
    if (!cfg.pulse)
        return std::nullopt;
    ProbePulse p;
    p.amplitude = cfg.pulse->amplitude;
    p.tau = cfg.pulse->tau_us;
    p.center_time = cfg.pulse->center_us;
    p.omega_plus_sb = mhz_to_rad_per_us(cfg.pulse->sideband_plus_mhz);
    p.omega_minus_sb = mhz_to_rad_per_us(cfg.pulse->sideband_minus_mhz);
    p.relative_phase = cfg.pulse->phase;
    return p;
}

Timeline build_timeline(const RunConfig& cfg)
{
    const PhysicalParams p = physical_params(cfg);
    const double omega = mhz_to_rad_per_us(cfg.rabi_mhz);
    Timeline tl;
    if (cfg.preset == "paper_experiment") {
        ExperimentPlan plan;
        plan.pulse = *probe_pulse(cfg);
        plan.t_write = cfg.t_write_us;
        plan.t_sl = cfg.t_sl_us;
        plan.t_recall = cfg.t_recall_us;
        plan.omega = omega;
        plan.omega_write = cfg.write_rabi_mhz ? mhz_to_rad_per_us(*cfg.write_rabi_mhz) : omega;
        plan.backward_control = cfg.backward_control;
        plan.compensate_light_shift = cfg.compensate_light_shift;
        plan.t_rephase = cfg.t_rephase_us ? *cfg.t_rephase_us : default_rephase_time(plan);
        tl = paper_experiment(p, plan);
    } else if (cfg.preset == "stationary_light") {
        Stage s;
        s.label = "sl";
        s.duration = cfg.duration_us;
        const double plus = cfg.rabi_plus_mhz ? mhz_to_rad_per_us(*cfg.rabi_plus_mhz) : omega;
        const double minus = cfg.rabi_minus_mhz ? mhz_to_rad_per_us(*cfg.rabi_minus_mhz) : omega;
        s.controls = ControlDrive::constant(plus, minus);
        s.cancel_light_shift = cfg.compensate_light_shift;
        tl.stages.push_back(s);
    } else {
        const auto pulse = probe_pulse(cfg);
        for (const auto& spec : cfg.stages) {
            Stage s;
            s.label = spec.label;
            s.duration = spec.duration_us;
            const double a = mhz_to_rad_per_us(spec.rabi_plus_mhz);
            const double b = mhz_to_rad_per_us(spec.rabi_minus_mhz);
            s.controls.omega_plus = {a, spec.rabi_plus_end_mhz ? mhz_to_rad_per_us(*spec.rabi_plus_end_mhz) : a};
            s.controls.omega_minus = {b, spec.rabi_minus_end_mhz ? mhz_to_rad_per_us(*spec.rabi_minus_end_mhz) : b};
            s.eta_active = spec.gradient;
            s.detuning_offset = mhz_to_rad_per_us(spec.detuning_offset_mhz);
            s.cancel_light_shift = spec.cancel_light_shift;
            if (spec.pulse)
                s.input_pulse = pulse;
            s.input_face = spec.input_face == "backward" ? Face::backward : Face::forward;
            tl.stages.push_back(s);
        }
        validate(tl, p);
    }
    return tl;
}

EnsembleState build_initial_state(const RunConfig& cfg)
{
    const std::size_t n = cfg.grid.n_points;
    const auto& sw = cfg.spinwave;
    if (sw.shape == "uniform")
        return initial_state(make_uniform_spinwave(n, sw.amplitude));
    if (sw.shape == "dual_gaussian")
        return initial_state(
            make_dual_gaussian_spinwave(n, {sw.center1, sw.center2}, sw.width, sw.phase, sw.amplitude).profile);
    return initial_state(SpinwaveProfile::zeros(n));
}

AnalysisOptions analysis_options(const RunConfig& cfg)
{
    AnalysisOptions o;
    if (cfg.bright_fit_end_us)
        o.bright_fit_end = *cfg.bright_fit_end_us;
    if (cfg.dark_fit_start_us)
        o.dark_fit_start = *cfg.dark_fit_start_us;
    return o;
}

std::string echo_config(const RunConfig& cfg)
{
    std::ostringstream os;
    auto b = [](bool v) { return v ? "true" : "false"; };
    os << "[run]\n"
       << "tier = " << to_string(cfg.tier) << '\n'
       << "dispersion = " << to_string(cfg.model.dispersion) << '\n'
       << "far_detuned = " << b(cfg.model.far_detuned) << '\n'
       << "include_decay = " << b(cfg.model.include_decay) << '\n'
       << "include_stark = " << b(cfg.model.include_stark) << '\n'
       << "output_dir = " << cfg.output_dir << '\n';
    os << "\n[params]\n";
    for (const auto& [k, v] : cfg.lab)
        os << k << " = " << fmt(v) << '\n';
    os << "\n[grid]\n"
       << "n_points = " << cfg.grid.n_points << '\n'
       << "dt_us = " << fmt(cfg.grid.dt) << '\n'
       << "sample_stride = " << cfg.grid.sample_stride << '\n';
    os << "\n[scenario]\n"
       << "preset = " << cfg.preset << '\n'
       << "rabi_mhz = " << fmt(cfg.rabi_mhz) << '\n';
    if (cfg.write_rabi_mhz)
        os << "write_rabi_mhz = " << fmt(*cfg.write_rabi_mhz) << '\n';
    if (cfg.rabi_plus_mhz)
        os << "rabi_plus_mhz = " << fmt(*cfg.rabi_plus_mhz) << '\n';
    if (cfg.rabi_minus_mhz)
        os << "rabi_minus_mhz = " << fmt(*cfg.rabi_minus_mhz) << '\n';
    os << "duration_us = " << fmt(cfg.duration_us) << '\n'
       << "t_write_us = " << fmt(cfg.t_write_us) << '\n';
    if (cfg.t_rephase_us)
        os << "t_rephase_us = " << fmt(*cfg.t_rephase_us) << '\n';
    os << "t_sl_us = " << fmt(cfg.t_sl_us) << '\n'
       << "t_recall_us = " << fmt(cfg.t_recall_us) << '\n'
       << "backward_control = " << b(cfg.backward_control) << '\n'
       << "compensate_light_shift = " << b(cfg.compensate_light_shift) << '\n';
    os << "\n[spinwave]\n"
       << "shape = " << cfg.spinwave.shape << '\n'
       << "center1 = " << fmt(cfg.spinwave.center1) << '\n'
       << "center2 = " << fmt(cfg.spinwave.center2) << '\n'
       << "width = " << fmt(cfg.spinwave.width) << '\n'
       << "phase = " << fmt(cfg.spinwave.phase) << '\n'
       << "amplitude = " << fmt(cfg.spinwave.amplitude) << '\n';
    if (cfg.pulse) {
        const auto& p = *cfg.pulse;
        os << "\n[pulse]\n"
           << "amplitude = " << fmt(p.amplitude) << '\n'
           << "tau_us = " << fmt(p.tau_us) << '\n'
           << "center_us = " << fmt(p.center_us) << '\n'
           << "sideband_plus_mhz = " << fmt(p.sideband_plus_mhz) << '\n'
           << "sideband_minus_mhz = " << fmt(p.sideband_minus_mhz) << '\n'
           << "phase = " << fmt(p.phase) << '\n';
    }
    for (const auto& s : cfg.stages) {
        os << "\n[stage]\n"
           << "label = " << s.label << '\n'
           << "duration_us = " << fmt(s.duration_us) << '\n'
           << "rabi_plus_mhz = " << fmt(s.rabi_plus_mhz) << '\n'
           << "rabi_minus_mhz = " << fmt(s.rabi_minus_mhz) << '\n';
        if (s.rabi_plus_end_mhz)
            os << "rabi_plus_end_mhz = " << fmt(*s.rabi_plus_end_mhz) << '\n';
        if (s.rabi_minus_end_mhz)
            os << "rabi_minus_end_mhz = " << fmt(*s.rabi_minus_end_mhz) << '\n';
        os << "gradient = " << s.gradient << '\n'
           << "detuning_offset_mhz = " << fmt(s.detuning_offset_mhz) << '\n'
           << "cancel_light_shift = " << b(s.cancel_light_shift) << '\n'
           << "pulse = " << b(s.pulse) << '\n'
           << "input_face = " << s.input_face << '\n';
    }
    if (cfg.bright_fit_end_us || cfg.dark_fit_start_us) {
        os << "\n[analysis]\n";
        if (cfg.bright_fit_end_us)
            os << "bright_fit_end_us = " << fmt(*cfg.bright_fit_end_us) << '\n';
        if (cfg.dark_fit_start_us)
            os << "dark_fit_start_us = " << fmt(*cfg.dark_fit_start_us) << '\n';
    }
    return os.str();
}

} // namespace slsim
