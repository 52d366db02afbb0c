#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace slsim {

// Row-major real matrix.
struct Matrix {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), data(w * h, fill) {}

    double& at(std::size_t x, std::size_t y) { return data[y * width + x]; }
    double at(std::size_t x, std::size_t y) const { return data[y * width + x]; }
    bool operator==(const Matrix&) const = default;
};

// Non-negative, finite camera frame.
class IntensityImage {
public:
    IntensityImage() = default;
    explicit IntensityImage(Matrix pixels);

    std::size_t width() const { return pixels_.width; }
    std::size_t height() const { return pixels_.height; }
    const Matrix& pixels() const { return pixels_; }
    double at(std::size_t x, std::size_t y) const { return pixels_.at(x, y); }
    bool operator==(const IntensityImage&) const = default;

private:
    Matrix pixels_;
};

struct SpinwaveMap {
    Matrix magnitude;
    std::size_t clamped = 0; // pixels with I > I0, set to zero
};

// |S| = sqrt(max(0, ln(max(I0, floor) / max(I, floor)))) per pixel.
SpinwaveMap infer_spinwave_map(const IntensityImage& i0, const IntensityImage& i, double floor = 1e-12);

IntensityImage average_frames(const std::vector<IntensityImage>& frames);

// I0 uniform at i0_level, I = I0 exp(-k s^2).
std::pair<IntensityImage, IntensityImage> synthesize_images(const Matrix& s_map, double i0_level, double k);

// Plain-text portable graymap (P2). Values are written rounded to integers
// in [0, maxval]; reading returns the raw sample values.
IntensityImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const IntensityImage& img, int maxval = 65535);

// Comma-separated rows, 17 significant digits, leading "# columns" comment.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

} // namespace slsim
