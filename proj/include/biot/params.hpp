#pragma once

#include <span>
#include <vector>

namespace biot {

class FESpace;

/// Physical Biot coefficients for one backward-Euler time step.
struct PhysicalParams {
    double mu = 0.5;      ///< shear modulus
    double lambda = 1.0;  ///< Lame parameter
    double alpha = 1.0;   ///< Biot-Willis constant (c_up = c_pu)
    double K = 1.0;       ///< hydraulic conductivity
    double tau = 1.0;     ///< time-step length
    double c_pp = 0.0;    ///< storage coefficient

    /// Throws RangeViolation naming the first offending field.
    void validate() const;
};

/// Dimensionless coefficients of the reduced three-field system.
///
/// rho = min(lambda, rp_inv) and gamma = max(1/rho, alpha_p) are derived on
/// every access, so they can never go stale.
class ReducedParams {
public:
    ReducedParams() = default;

    /// Validates lambda >= 1, rp_inv > 0, alpha_p >= 0.
    static ReducedParams make(double lambda, double rp_inv, double alpha_p);

    double lambda() const noexcept { return lambda_; }
    double rp_inv() const noexcept { return rp_inv_; }
    double alpha_p() const noexcept { return alpha_p_; }
    double rp() const noexcept { return 1.0 / rp_inv_; }
    double rho() const noexcept;
    double gamma() const noexcept;

private:
    ReducedParams(double lambda, double rp_inv, double alpha_p)
        : lambda_(lambda), rp_inv_(rp_inv), alpha_p_(alpha_p) {}

    double lambda_ = 1.0;
    double rp_inv_ = 1.0;
    double alpha_p_ = 0.0;
};

/// Multiplicative factors taking physical fields to reduced ones:
/// u~ = u_scale u, v~ = v_scale v, p~ = p_scale p, f~ = f_scale f, g~ = g_scale g.
struct FieldScaling {
    double u_scale = 1.0;
    double v_scale = 1.0;
    double p_scale = 1.0;
    double f_scale = 1.0;
    double g_scale = 1.0;

    static std::vector<double> scaled(std::span<const double> x, double factor);
    std::vector<double> u_to_reduced(std::span<const double> u) const { return scaled(u, u_scale); }
    std::vector<double> v_to_reduced(std::span<const double> v) const { return scaled(v, v_scale); }
    std::vector<double> p_to_reduced(std::span<const double> p) const { return scaled(p, p_scale); }
    std::vector<double> u_to_physical(std::span<const double> u) const { return scaled(u, 1.0 / u_scale); }
    std::vector<double> v_to_physical(std::span<const double> v) const { return scaled(v, 1.0 / v_scale); }
    std::vector<double> p_to_physical(std::span<const double> p) const { return scaled(p, 1.0 / p_scale); }
};

struct Reduction {
    ReducedParams params;
    FieldScaling scaling;
};

/// Divides the system by 2 mu and rescales the unknowns so that the
/// coupling terms carry unit coefficients. Throws RangeViolation if the
/// scaled Lame parameter falls below 1.
Reduction reduce(const PhysicalParams& phys);

/// Per-cell source of the pressure equation for one time step.
struct TimestepSource {
    std::vector<double> physical;  ///< -tau g - alpha div u_prev - c_pp p_prev
    std::vector<double> reduced;   ///< physical * g_scale
};

/// Composes the time-step source cellwise. `g_cells` and `p_prev` are P0
/// cell values, `u_prev` is a full (unconstrained) coefficient vector of
/// `u_space`. Throws DimensionMismatch when sizes disagree with the mesh.
TimestepSource compose_timestep_rhs(std::span<const double> g_cells,
                                    const FESpace& u_space,
                                    std::span<const double> u_prev,
                                    std::span<const double> p_prev,
                                    const PhysicalParams& phys);

} // namespace biot
