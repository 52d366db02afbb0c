#pragma once

#include "slsim/model.hpp"

#include <span>
#include <vector>

namespace slsim {

// Complex spinwave amplitudes on the uniform grid xi_k = k / (N - 1).
class SpinwaveProfile {
public:
    static constexpr std::size_t min_points = 16;

    SpinwaveProfile() = default;
    explicit SpinwaveProfile(std::vector<cplx> values);
    static SpinwaveProfile zeros(std::size_t n_points);

    std::size_t n_points() const { return values_.size(); }
    double h() const { return 1.0 / static_cast<double>(values_.size() - 1); }
    double xi(std::size_t k) const { return static_cast<double>(k) * h(); }

    std::span<const cplx> values() const { return values_; }
    std::vector<cplx>& mutable_values() { return values_; }
    const cplx& operator[](std::size_t k) const { return values_[k]; }

    bool operator==(const SpinwaveProfile&) const = default;

private:
    std::vector<cplx> values_;
};

// Trapezoid rule on the unit interval, end weights 1/2.
cplx trapezoid(std::span<const cplx> v);
double trapezoid(std::span<const double> v);
double trapezoid_abs2(std::span<const cplx> v);

enum class Direction { forward, backward };

enum class DispersionMode { full, common_phase_removed, none };

// Solves dE/dxi = i s (alpha E + beta S) with s = +1 integrated from xi = 0
// (forward) or s = -1 integrated from xi = 1 (backward). The linear term is
// treated with an exact integrating factor; the source is linear between grid
// points and integrated exactly, which is the trapezoid rule when alpha = 0.
std::vector<cplx> solve_direction(std::span<const cplx> source, cplx alpha, cplx beta, cplx boundary,
                                  Direction dir);

// Variant writing into a caller-owned buffer of matching size.
void solve_direction_into(std::span<const cplx> source, cplx alpha, cplx beta, cplx boundary,
                          Direction dir, std::span<cplx> out);

struct BoundaryInputs {
    cplx plus{};  // E+ at xi = 0
    cplx minus{}; // E- at xi = 1
};

struct FieldPair {
    std::vector<cplx> e_plus;
    std::vector<cplx> e_minus;
};

// Propagation coefficients for the two probe directions.
//   dE+/dxi =  i (alpha_plus  E+ + beta_plus  S)
//   dE-/dxi = -i (alpha_minus E- + beta_minus S)
struct FieldCoefficients {
    cplx alpha_plus{};
    cplx alpha_minus{};
    cplx beta_plus{};
    cplx beta_minus{};
};

// Coefficients from the adiabatically eliminated equations:
//   alpha = d Gamma / Delta~,  beta = sqrt(d) Omega / Delta~.
// With far_detuned set, Delta~ is replaced by the bare detuning Delta (the
// Delta >> Gamma limit). DispersionMode::none drops alpha;
// common_phase_removed subtracts the real part shared by both directions.
FieldCoefficients field_coefficients(const PhysicalParams& p, double omega_plus, double omega_minus,
                                     DispersionMode mode, bool far_detuned = false);

// Solves both directions; e_plus[0] and e_minus[N-1] equal the inputs.
FieldPair solve_fields(std::span<const cplx> s, const FieldCoefficients& c, BoundaryInputs inputs);

// True when |alpha| h exceeds 1 for either direction on an n-point grid.
bool step_resolution_warning(const FieldCoefficients& c, std::size_t n_points);

} // namespace slsim
