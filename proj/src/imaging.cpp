#include "slsim/imaging.hpp"

#include "slsim/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace slsim {

IntensityImage::IntensityImage(Matrix pixels) : pixels_(std::move(pixels))
{
    if (pixels_.width == 0 || pixels_.height == 0)
        throw ValidationError("image dimensions must be at least 1x1");
    if (pixels_.data.size() != pixels_.width * pixels_.height)
        throw ValidationError("image data does not match its dimensions");
    for (double v : pixels_.data)
        if (!std::isfinite(v) || v < 0.0)
            throw ValidationError("image pixels must be finite and non-negative");
}

namespace {

void require_same_shape(const IntensityImage& a, const IntensityImage& b)
{
    if (a.width() != b.width() || a.height() != b.height())
        throw ValidationError("image dimensions differ: " + std::to_string(a.width()) + "x" +
                              std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                              std::to_string(b.height()));
}

} // namespace

SpinwaveMap infer_spinwave_map(const IntensityImage& i0, const IntensityImage& i, double floor)
{
    require_same_shape(i0, i);
    if (!(floor > 0.0))
        throw ValidationError("intensity floor must be positive");
    SpinwaveMap out;
    out.magnitude = Matrix(i0.width(), i0.height());
    const auto& a = i0.pixels().data;
    const auto& b = i.pixels().data;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double od = std::log(std::max(a[k], floor) / std::max(b[k], floor));
        if (od < 0.0) {
            ++out.clamped;
            continue;
        }
        out.magnitude.data[k] = std::sqrt(od);
    }
    return out;
}

IntensityImage average_frames(const std::vector<IntensityImage>& frames)
{
    if (frames.empty())
        throw ValidationError("average_frames needs at least one frame");
    Matrix sum(frames.front().width(), frames.front().height());
    for (const auto& f : frames) {
        require_same_shape(frames.front(), f);
        for (std::size_t k = 0; k < sum.data.size(); ++k)
            sum.data[k] += f.pixels().data[k];
    }
    for (auto& v : sum.data)
        v /= static_cast<double>(frames.size());
    return IntensityImage(std::move(sum));
}

std::pair<IntensityImage, IntensityImage> synthesize_images(const Matrix& s_map, double i0_level, double k)
{
    if (!(k > 0.0))
        throw ValidationError("synthesis scale k must be positive");
    if (!(i0_level > 0.0) || !std::isfinite(i0_level))
        throw ValidationError("synthesis level I0 must be positive");
    Matrix i0(s_map.width, s_map.height, i0_level);
    Matrix i(s_map.width, s_map.height);
    for (std::size_t n = 0; n < s_map.data.size(); ++n) {
        const double s = s_map.data[n];
        if (!(s >= 0.0) || !std::isfinite(s))
            throw ValidationError("spinwave map values must be finite and non-negative");
        i.data[n] = i0_level * std::exp(-k * s * s);
    }
    return {IntensityImage(std::move(i0)), IntensityImage(std::move(i))};
}

namespace {

// Next whitespace-separated token, skipping '#' comments.
bool next_token(std::istream& in, std::string& tok)
{
    tok.clear();
    char c;
    while (in.get(c)) {
        if (c == '#') {
            std::string rest;
            std::getline(in, rest);
            if (!tok.empty())
                return true;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty())
                return true;
            continue;
        }
        tok.push_back(c);
    }
    return !tok.empty();
}

double parse_sample(const std::string& tok, const std::filesystem::path& path)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size())
            throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(path.string() + ": malformed PGM token '" + tok + "'");
    }
}

} // namespace

IntensityImage read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open image " + path.string());
    std::string tok;
    if (!next_token(in, tok) || tok != "P2")
        throw ValidationError(path.string() + ": expected plain PGM magic 'P2'");
    double header[3];
    for (double& h : header) {
        if (!next_token(in, tok))
            throw ValidationError(path.string() + ": truncated PGM header");
        h = parse_sample(tok, path);
    }
    if (header[0] < 1 || header[1] < 1 || header[2] < 1)
        throw ValidationError(path.string() + ": invalid PGM dimensions or maxval");
    Matrix m(static_cast<std::size_t>(header[0]), static_cast<std::size_t>(header[1]));
    for (auto& v : m.data) {
        if (!next_token(in, tok))
            throw ValidationError(path.string() + ": PGM has fewer samples than width*height");
        v = parse_sample(tok, path);
        if (v < 0.0 || v > header[2])
            throw ValidationError(path.string() + ": PGM sample outside [0, maxval]");
    }
    if (next_token(in, tok))
        throw ValidationError(path.string() + ": PGM has more samples than width*height");
    return IntensityImage(std::move(m));
}

void write_pgm(const std::filesystem::path& path, const IntensityImage& img, int maxval)
{
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot write image " + path.string());
    out << "P2\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
    for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t x = 0; x < img.width(); ++x) {
            const double v = std::clamp(std::round(img.at(x, y)), 0.0, static_cast<double>(maxval));
            out << (x ? " " : "") << static_cast<long>(v);
        }
        out << '\n';
    }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m)
{
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot write " + path.string());
    out << "# columns: x = 0.." << (m.width ? m.width - 1 : 0) << ", one row per y\n";
    char buf[40];
    for (std::size_t y = 0; y < m.height; ++y) {
        for (std::size_t x = 0; x < m.width; ++x) {
            std::snprintf(buf, sizeof buf, "%.17g", m.at(x, y));
            out << (x ? "," : "") << buf;
        }
        out << '\n';
    }
}

Matrix read_matrix_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            row.push_back(parse_sample(cell, path));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ValidationError(path.string() + ": ragged CSV matrix");
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        return {};
    Matrix m(rows.front().size(), rows.size());
    for (std::size_t y = 0; y < rows.size(); ++y)
        for (std::size_t x = 0; x < m.width; ++x)
            m.at(x, y) = rows[y][x];
    return m;
}

} // namespace slsim
