#include "slsim/cli.hpp"

#include "slsim/imaging.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace slsim {

namespace {

std::string num(double v) { return format_number(v); }

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot write " + path.string());
    return out;
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<double> parse_row(const std::string& line, const fs::path& path, std::size_t skip = 0)
{
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    std::size_t i = 0;
    while (std::getline(ss, cell, ',')) {
        if (i++ < skip)
            continue;
        try {
            row.push_back(parse_number(cell));
        } catch (const ValidationError&) {
            throw ValidationError(path.string() + ": malformed value '" + cell + "'");
        }
    }
    return row;
}

} // namespace

void write_detectors_csv(const fs::path& path, const SimulationRecord& rec)
{
    auto out = open_out(path);
    out << "# t_us,fwd_re,fwd_im,fwd_abs2,bwd_re,bwd_im,bwd_abs2\n";
    for (std::size_t i = 0; i < rec.detector_times.size(); ++i) {
        const cplx f = rec.detector_fwd[i];
        const cplx b = rec.detector_bwd[i];
        out << num(rec.detector_times[i]) << ',' << num(f.real()) << ',' << num(f.imag()) << ','
            << num(std::norm(f)) << ',' << num(b.real()) << ',' << num(b.imag()) << ',' << num(std::norm(b))
            << '\n';
    }
}

void write_history_csv(const fs::path& path, const std::vector<double>& xi, const std::vector<double>& times,
                       const std::vector<std::vector<cplx>>& history)
{
    auto out = open_out(path);
    out << "# first row: xi,<grid xi_0..xi_" << (xi.empty() ? 0 : xi.size() - 1)
        << ">; other rows: t_us,re_0,im_0,...,re_" << (xi.empty() ? 0 : xi.size() - 1) << ",im_"
        << (xi.empty() ? 0 : xi.size() - 1) << '\n';
    out << "xi";
    for (double x : xi)
        out << ',' << num(x);
    out << '\n';
    for (std::size_t i = 0; i < times.size(); ++i) {
        out << num(times[i]);
        for (const cplx& z : history[i])
            out << ',' << num(z.real()) << ',' << num(z.imag());
        out << '\n';
    }
}

HistoryTable read_history_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open " + path.string());
    HistoryTable t;
    std::string line;
    bool have_grid = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!have_grid) {
            if (line.rfind("xi", 0) != 0)
                throw ValidationError(path.string() + ": expected the xi grid row first");
            t.xi = parse_row(line, path, 1);
            have_grid = true;
            continue;
        }
        const auto row = parse_row(line, path);
        if (row.size() != 1 + 2 * t.xi.size())
            throw ValidationError(path.string() + ": row width does not match the xi grid");
        t.times.push_back(row[0]);
        std::vector<cplx> v(t.xi.size());
        for (std::size_t k = 0; k < v.size(); ++k)
            v[k] = {row[1 + 2 * k], row[2 + 2 * k]};
        t.rows.push_back(std::move(v));
    }
    if (!have_grid)
        throw ValidationError(path.string() + ": no xi grid row");
    return t;
}

DetectorTable read_detectors_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open " + path.string());
    DetectorTable t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        const auto row = parse_row(line, path);
        if (row.size() != 7)
            throw ValidationError(path.string() + ": expected 7 columns");
        t.times.push_back(row[0]);
        t.fwd.emplace_back(row[1], row[2]);
        t.bwd.emplace_back(row[4], row[5]);
    }
    return t;
}

Summary execute_run(const RunConfig& cfg, const fs::path& out)
{
    std::vector<fs::path> written;
    try {
        const PhysicalParams p = physical_params(cfg);
        const Timeline tl = build_timeline(cfg);
        const EnsembleState init = build_initial_state(cfg);
        const SimulationRecord rec = run(tl, cfg.grid, p, init, cfg.tier, cfg.model);
        Summary summary = analyze_record(rec, tl, analysis_options(cfg));

        fs::create_directories(out);
        auto target = [&](const char* name) {
            written.push_back(out / name);
            return written.back();
        };
        write_detectors_csv(target("detectors.csv"), rec);
        write_history_csv(target("spinwave.csv"), rec.xi, rec.times, rec.s_history);
        write_history_csv(target("fields_plus.csv"), rec.xi, rec.times, rec.e_plus_history);
        write_history_csv(target("fields_minus.csv"), rec.xi, rec.times, rec.e_minus_history);
        open_out(target("summary.txt")) << summary.str();
        open_out(target("config.echo")) << echo_config(cfg);
        return summary;
    } catch (...) {
        std::error_code ec;
        for (const auto& f : written)
            fs::remove(f, ec);
        throw;
    }
}

Summary reanalyze(const fs::path& dir)
{
    const RunConfig cfg = parse_config(read_file(dir / "config.echo"));
    const Timeline tl = build_timeline(cfg);
    const HistoryTable s = read_history_csv(dir / "spinwave.csv");
    const DetectorTable det = read_detectors_csv(dir / "detectors.csv");

    SimulationRecord rec;
    rec.tier = cfg.tier;
    rec.options = cfg.tier == Tier::ideal ? ideal_options(cfg.model.include_decay) : cfg.model;
    rec.params = physical_params(cfg);
    rec.grid = cfg.grid;
    rec.xi = s.xi;
    rec.times = s.times;
    rec.s_history = s.rows;
    rec.detector_times = det.times;
    rec.detector_fwd = det.fwd;
    rec.detector_bwd = det.bwd;

    double t = 0.0;
    for (const auto& st : tl.stages) {
        StageWindow w;
        w.label = st.label;
        w.t_start = t;
        t += static_cast<double>(std::llround(st.duration / cfg.grid.dt)) * cfg.grid.dt;
        w.t_end = t;
        const double eps = 0.5 * cfg.grid.dt;
        for (std::size_t i = 0; i + 1 < det.times.size(); ++i) {
            if (det.times[i] < w.t_start - eps || det.times[i + 1] > w.t_end + eps)
                continue;
            const double h = 0.5 * (det.times[i + 1] - det.times[i]) * rec.params.gamma;
            w.emitted_forward += h * (std::norm(det.fwd[i]) + std::norm(det.fwd[i + 1]));
            w.emitted_backward += h * (std::norm(det.bwd[i]) + std::norm(det.bwd[i + 1]));
        }
        rec.stages.push_back(w);
    }

    AnalysisOptions opt = analysis_options(cfg);
    opt.include_ledger = false;
    return analyze_record(rec, tl, opt);
}

int exit_code(const std::exception& e)
{
    if (dynamic_cast<const ValidationError*>(&e))
        return 1;
    return 2;
}

namespace {

std::string csv_field(const std::string& v)
{
    if (v.find_first_of(",\"\n") == std::string::npos)
        return v;
    std::string q = "\"";
    for (char c : v)
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::string dir_label(std::size_t index, const std::string& key, const std::string& value)
{
    std::string safe;
    for (char c : value)
        safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", index);
    return std::string(buf) + "_" + key + "_" + safe;
}

} // namespace

std::vector<SweepRun> run_sweep(const ConfigDocument& base, const std::string& section, const std::string& key,
                                const std::vector<std::string>& values, const fs::path& out, unsigned threads)
{
    if (values.empty())
        throw ValidationError("sweep needs at least one value");
    if (section == "stage" || !is_numeric_key(section, key))
        throw ValidationError("'" + section + "." + key + "' is not a sweepable numeric key");
    for (const auto& v : values)
        parse_number(v);

    std::vector<SweepRun> runs(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        runs[i].value = values[i];
        runs[i].dir = out / dir_label(i, key, values[i]);
    }
    fs::create_directories(out);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            SweepRun& r = runs[i];
            try {
                ConfigDocument doc = base;
                set_value(doc, section, key, r.value);
                set_value(doc, "run", "output_dir", r.dir.string());
                r.summary = execute_run(resolve_config(doc), r.dir);
            } catch (const std::exception& e) {
                r.status = exit_code(e);
                r.error = e.what();
            }
        }
    };
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(runs.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();

    std::vector<std::string> keys;
    std::set<std::string> seen;
    for (const auto& r : runs)
        for (const auto& [k, v] : r.summary.entries())
            if (seen.insert(k).second)
                keys.push_back(k);

    auto csv = open_out(out / "sweep_summary.csv");
    csv << "# index,param,value,status,error";
    for (const auto& k : keys)
        csv << ',' << k;
    csv << '\n';
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        csv << i << ',' << section << '.' << key << ',' << csv_field(r.value) << ',' << r.status << ','
            << csv_field(r.error);
        for (const auto& k : keys) {
            std::string v;
            for (const auto& [kk, vv] : r.summary.entries())
                if (kk == k)
                    v = vv;
            csv << ',' << csv_field(v);
        }
        csv << '\n';
    }
    return runs;
}

SpinwaveMap reduce_images(const std::vector<fs::path>& i0_frames, const std::vector<fs::path>& i_frames,
                          const fs::path& out, double floor)
{
    auto load = [](const std::vector<fs::path>& paths) {
        std::vector<IntensityImage> v;
        for (const auto& p : paths)
            v.push_back(read_pgm(p));
        return average_frames(v);
    };
    const IntensityImage i0 = load(i0_frames);
    const IntensityImage i = load(i_frames);
    SpinwaveMap map = infer_spinwave_map(i0, i, floor);

    fs::create_directories(out);
    write_matrix_csv(out / "spinwave_map.csv", map.magnitude);
    double top = 0.0;
    for (double v : map.magnitude.data)
        top = std::max(top, v);
    Matrix scaled = map.magnitude;
    for (auto& v : scaled.data)
        v = top > 0.0 ? 255.0 * v / top : 0.0;
    write_pgm(out / "spinwave_map.pgm", IntensityImage(scaled), 255);
    open_out(out / "image_summary.txt") << "frames_i0=" << i0_frames.size() << "\nframes_i=" << i_frames.size()
                                        << "\nwidth=" << map.magnitude.width << "\nheight=" << map.magnitude.height
                                        << "\nclamped_pixels=" << map.clamped << "\nmax_abs_s=" << num(top) << '\n';
    return map;
}

double image_roundtrip(const fs::path& map_csv, double k, double i0_level, const fs::path& out)
{
    Matrix s;
    if (map_csv.empty()) {
        s = Matrix(64, 48);
        for (std::size_t y = 0; y < s.height; ++y)
            for (std::size_t x = 0; x < s.width; ++x) {
                const double u = (static_cast<double>(x) - 20.0) / 6.0;
                const double v = (static_cast<double>(y) - 24.0) / 8.0;
                const double w = (static_cast<double>(x) - 44.0) / 6.0;
                s.at(x, y) = 0.9 * std::exp(-0.5 * (u * u + v * v)) + 0.6 * std::exp(-0.5 * (w * w + v * v));
            }
    } else {
        s = read_matrix_csv(map_csv);
    }
    const auto [i0, i] = synthesize_images(s, i0_level, k);
    const SpinwaveMap back = infer_spinwave_map(i0, i);
    double err = 0.0;
    for (std::size_t n = 0; n < s.data.size(); ++n)
        err = std::max(err, std::abs(back.magnitude.data[n] - std::sqrt(k) * s.data[n]));
    fs::create_directories(out);
    write_matrix_csv(out / "roundtrip_map.csv", back.magnitude);
    open_out(out / "image_summary.txt") << "mode=roundtrip\nk=" << num(k) << "\ni0_level=" << num(i0_level)
                                        << "\nclamped_pixels=" << back.clamped << "\nmax_error=" << num(err) << '\n';
    return err;
}

namespace {

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

void print_summary(const Summary& s, const std::vector<std::string>& keys)
{
    for (const auto& [k, v] : s.entries())
        for (const auto& want : keys)
            if (k == want)
                std::cout << "  " << k << " = " << v << '\n';
}

const std::vector<std::string> kHeadline = {"predicted_r_bright_per_us", "bright_fit_rate_per_us",
                                            "dark_fit_amplitude_rate_khz", "stationarity",
                                            "ledger_residual_relative"};

} // namespace

int cli_main(int argc, char** argv)
{
    CLI::App app{"Stationary-light simulator: run, sweep, image, analyze"};
    app.require_subcommand(1);
    app.fallthrough();
    bool quiet = false;
    app.add_flag("--quiet,-q", quiet, "Suppress progress output");

    std::string config_path, out_dir, tier;
    auto* run_cmd = app.add_subcommand("run", "Run one configured simulation");
    run_cmd->add_option("--config,-c", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out,-o", out_dir, "Output directory (overrides [run] output_dir)");
    run_cmd->add_option("--tier", tier, "Override the tier: ideal, adiabatic, three_level");

    std::string param, values;
    unsigned threads = 0;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run one simulation per value of a parameter");
    sweep_cmd->add_option("--config,-c", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--param,-p", param, "section.key to vary, e.g. scenario.rabi_mhz")->required();
    sweep_cmd->add_option("--values,-v", values, "Comma-separated values in run order")->required();
    sweep_cmd->add_option("--out,-o", out_dir, "Sweep output directory");
    sweep_cmd->add_option("--tier", tier, "Override the tier");
    sweep_cmd->add_option("--threads,-j", threads, "Concurrent runs (default: hardware threads)");

    std::string mode, i0_list, i_list, map_path;
    double k = 1.0, level = 1000.0, floor = 1e-12;
    auto* image_cmd = app.add_subcommand("image", "Absorption-image reduction");
    image_cmd->add_option("mode", mode, "reduce or roundtrip")->required()->check(CLI::IsMember({"reduce", "roundtrip"}));
    image_cmd->add_option("--i0", i0_list, "Comma-separated reference frames (PGM)");
    image_cmd->add_option("--frames", i_list, "Comma-separated shadow frames (PGM)");
    image_cmd->add_option("--floor", floor, "Intensity floor");
    image_cmd->add_option("--map", map_path, "CSV map for roundtrip (default: built-in test map)");
    image_cmd->add_option("--k", k, "Scale k in I = I0 exp(-k s^2)");
    image_cmd->add_option("--level", level, "Uniform I0 level for roundtrip");
    image_cmd->add_option("--out,-o", out_dir, "Output directory")->required();

    auto* analyze_cmd = app.add_subcommand("analyze", "Recompute the summary from an existing run directory");
    analyze_cmd->add_option("--out,-o,dir", out_dir, "Run output directory")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run_cmd) {
            ConfigDocument doc = parse_document(read_file(config_path));
            if (!tier.empty())
                set_value(doc, "run", "tier", tier);
            if (!out_dir.empty())
                set_value(doc, "run", "output_dir", out_dir);
            const RunConfig cfg = resolve_config(doc);
            const Summary s = execute_run(cfg, cfg.output_dir);
            if (!quiet) {
                std::cout << "run: " << to_string(cfg.tier) << " tier, outputs in " << cfg.output_dir << '\n';
                print_summary(s, kHeadline);
            }
            return 0;
        }
        if (*sweep_cmd) {
            ConfigDocument doc = parse_document(read_file(config_path));
            if (!tier.empty())
                set_value(doc, "run", "tier", tier);
            const auto dot = param.find('.');
            if (dot == std::string::npos)
                throw ValidationError("--param must look like section.key");
            const RunConfig base = resolve_config(doc);
            const fs::path out = out_dir.empty() ? fs::path(base.output_dir) : fs::path(out_dir);
            const auto runs =
                run_sweep(doc, param.substr(0, dot), param.substr(dot + 1), split_list(values), out, threads);
            int worst = 0;
            for (const auto& r : runs) {
                worst = std::max(worst, r.status);
                if (!quiet)
                    std::cout << "sweep: " << param << " = " << r.value << " -> "
                              << (r.status == 0 ? "ok" : "failed: " + r.error) << '\n';
            }
            if (!quiet)
                std::cout << "sweep: summary in " << (out / "sweep_summary.csv").string() << '\n';
            return worst;
        }
        if (*image_cmd) {
            if (mode == "reduce") {
                const auto i0 = split_list(i0_list);
                const auto frames = split_list(i_list);
                if (i0.empty() || frames.empty())
                    throw ValidationError("image reduce needs --i0 and --frames");
                const auto map = reduce_images({i0.begin(), i0.end()}, {frames.begin(), frames.end()}, out_dir,
                                               floor);
                if (!quiet)
                    std::cout << "image: " << map.magnitude.width << "x" << map.magnitude.height
                              << " map, clamped pixels " << map.clamped << ", outputs in " << out_dir << '\n';
            } else {
                const double err = image_roundtrip(map_path, k, level, out_dir);
                if (!quiet)
                    std::cout << "image: roundtrip max_error = " << num(err) << '\n';
            }
            return 0;
        }
        if (*analyze_cmd) {
            const Summary s = reanalyze(out_dir);
            if (!quiet)
                std::cout << s.str();
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "slsim: error: " << e.what() << '\n';
        return exit_code(e);
    }
    return 0;
}

} // namespace slsim
