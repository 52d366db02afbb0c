#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace slsim {

struct ConvergenceRow {
    std::size_t size = 0; // grid points or time steps
    double step = 0.0;    // h or dt
    double error = 0.0;
    double ratio = 0.0;   // error of the previous row / this error, 0 for the first
};

// Field-solver error at xi = 1 against the exact exit field of a smooth
// Fourier-mode spinwave, with the full-dispersion coefficients of the
// default ensemble parameters, for each grid size.
std::vector<ConvergenceRow> field_solver_convergence(const std::vector<std::size_t>& n_points);

// Largest pointwise deviation of the adiabatic tier in the ideal limit from
// the closed-form bright decay over [0, 5/r_bright], relative to max|S0|,
// for each number of time steps.
std::vector<ConvergenceRow> time_step_convergence(const std::vector<std::size_t>& steps,
                                                  std::size_t n_points = 512);

// "# size,step,error,ratio" then one row per entry.
void write_convergence_csv(const std::filesystem::path& path, const std::vector<ConvergenceRow>& rows,
                           const char* size_name, const char* step_name);

} // namespace slsim
