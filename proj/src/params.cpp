#include "biot/params.hpp"

#include "biot/errors.hpp"
#include "biot/space.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace biot {

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void require(bool ok, const char* field, const char* rule, double value) {
    if (!ok) throw RangeViolation(std::string(field) + " must be " + rule + " (got " + fmt(value) + ")");
}

} // namespace

void PhysicalParams::validate() const {
    require(std::isfinite(mu) && mu > 0, "mu", "> 0", mu);
    require(std::isfinite(lambda) && lambda >= 0, "lambda", ">= 0", lambda);
    require(std::isfinite(alpha) && alpha > 0, "alpha", "> 0", alpha);
    require(std::isfinite(K) && K > 0, "K", "> 0", K);
    require(std::isfinite(tau) && tau > 0, "tau", "> 0", tau);
    require(std::isfinite(c_pp) && c_pp >= 0, "c_pp", ">= 0", c_pp);
}

ReducedParams ReducedParams::make(double lambda, double rp_inv, double alpha_p) {
    require(std::isfinite(lambda) && lambda >= 1, "lambda", ">= 1", lambda);
    require(std::isfinite(rp_inv) && rp_inv > 0, "rp_inv", "> 0", rp_inv);
    require(std::isfinite(alpha_p) && alpha_p >= 0, "alpha_p", ">= 0", alpha_p);
    return ReducedParams(lambda, rp_inv, alpha_p);
}

double ReducedParams::rho() const noexcept { return std::min(lambda_, rp_inv_); }
double ReducedParams::gamma() const noexcept { return std::max(1.0 / rho(), alpha_p_); }

std::vector<double> FieldScaling::scaled(std::span<const double> x, double factor) {
    std::vector<double> out(x.begin(), x.end());
    for (double& v : out) v *= factor;
    return out;
}

Reduction reduce(const PhysicalParams& phys) {
    phys.validate();
    const double two_mu = 2.0 * phys.mu;
    // After dividing by 2 mu the coupling coefficient is c = alpha / (2 mu)
    // and the time step tau / (2 mu).
    const double c = phys.alpha / two_mu;
    const double lambda_red = phys.lambda / two_mu;
    if (!(lambda_red >= 1.0))
        throw RangeViolation("scaled lambda = lambda/(2 mu) must be >= 1 (got " + fmt(lambda_red) + ")");

    Reduction r;
    r.params = ReducedParams::make(lambda_red, phys.alpha * phys.alpha / (two_mu * phys.tau * phys.K),
                                   two_mu * phys.c_pp / (phys.alpha * phys.alpha));
    r.scaling.u_scale = c;
    r.scaling.v_scale = phys.tau / two_mu;
    r.scaling.p_scale = c * c;
    r.scaling.f_scale = c / two_mu;
    r.scaling.g_scale = 1.0 / two_mu;
    return r;
}

TimestepSource compose_timestep_rhs(std::span<const double> g_cells, const FESpace& u_space,
                                    std::span<const double> u_prev, std::span<const double> p_prev,
                                    const PhysicalParams& phys) {
    phys.validate();
    const int nc = u_space.mesh().num_cells();
    if (static_cast<int>(g_cells.size()) != nc) throw DimensionMismatch("compose_timestep_rhs: g has wrong size");
    if (static_cast<int>(p_prev.size()) != nc)
        throw DimensionMismatch("compose_timestep_rhs: p_prev has wrong size");
    if (static_cast<int>(u_prev.size()) != u_space.num_dofs())
        throw DimensionMismatch("compose_timestep_rhs: u_prev has wrong size");

    const std::vector<double> div_u = u_space.cell_divergence(u_prev);
    const double g_scale = 1.0 / (2.0 * phys.mu);
    TimestepSource out;
    out.physical.resize(nc);
    out.reduced.resize(nc);
    for (int c = 0; c < nc; ++c) {
        out.physical[c] = -phys.tau * g_cells[c] - phys.alpha * div_u[c] - phys.c_pp * p_prev[c];
        out.reduced[c] = out.physical[c] * g_scale;
    }
    return out;
}

} // namespace biot
