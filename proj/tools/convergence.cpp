// Writes the grid and time-step convergence tables as CSV.
#include "slsim/convergence.hpp"
#include "slsim/model.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Field-solver and RK4 convergence tables"};
    std::string out = "out/convergence";
    app.add_option("--out,-o", out, "Output directory");
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out);
        const auto space = slsim::field_solver_convergence({32, 64, 128, 256, 512, 1024, 2048});
        const auto time = slsim::time_step_convergence({60, 120, 240, 480});
        slsim::write_convergence_csv(std::filesystem::path(out) / "field_solver_convergence.csv", space,
                                     "n_points", "h");
        slsim::write_convergence_csv(std::filesystem::path(out) / "time_step_convergence.csv", time, "steps",
                                     "dt_us");
        std::cout << "n_points  error      ratio\n";
        for (const auto& r : space)
            std::cout << r.size << "  " << r.error << "  " << r.ratio << '\n';
        std::cout << "steps  error      ratio\n";
        for (const auto& r : time)
            std::cout << r.size << "  " << r.error << "  " << r.ratio << '\n';
    } catch (const std::exception& e) {
        std::cerr << "convergence: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
