#include "biot/errors.hpp"
#include "biot/space.hpp"
#include "biot/timestep.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace biot;

namespace {

PhysicalParams phys(double mu, double lambda, double alpha, double K, double tau, double c_pp) {
    PhysicalParams p;
    p.mu = mu;
    p.lambda = lambda;
    p.alpha = alpha;
    p.K = K;
    p.tau = tau;
    p.c_pp = c_pp;
    return p;
}

/// Dense backward-Euler march in physical variables:
///   (2mu a_h + lambda D) u + alpha B_u^T p = F
///   (tau/K) M v + tau B_v^T p = 0
///   alpha B_u u + tau B_v v - c_pp M p = M(-tau g) + alpha B_u u_prev - c_pp M p_prev
/// with B = -(q, div .) and the pressure pinned by its area-weighted mean.
struct DenseMarch {
    const Discretization& d;
    PhysicalParams p;
    Eigen::MatrixXd A;
    Eigen::MatrixXd Bu_full, Mp;
    int nu, nv, np;

    DenseMarch(const Discretization& disc, const PhysicalParams& prm) : d(disc), p(prm) {
        const Eigen::MatrixXd Ah = assemble_ah(d.U(), DGConfig{}).to_dense();
        const Eigen::MatrixXd D = assemble_div_div(d.U()).to_dense();
        const Eigen::MatrixXd Mv = assemble_mass(d.V()).to_dense();
        Mp = assemble_mass(d.P()).to_dense();
        const Eigen::MatrixXd Bu = assemble_div_coupling(d.U(), d.P()).to_dense();
        const Eigen::MatrixXd Bv = assemble_div_coupling(d.V(), d.P()).to_dense();
        Bu_full = assemble_div_coupling(d.U(), d.P(), false).to_dense();
        nu = Ah.rows();
        nv = Mv.rows();
        np = Mp.rows();
        const int n = nu + nv + np;
        A = Eigen::MatrixXd::Zero(n + 1, n + 1);
        A.block(0, 0, nu, nu) = 2 * p.mu * Ah + p.lambda * D;
        A.block(0, nu + nv, nu, np) = p.alpha * Bu.transpose();
        A.block(nu, nu, nv, nv) = (p.tau / p.K) * Mv;
        A.block(nu, nu + nv, nv, np) = p.tau * Bv.transpose();
        A.block(nu + nv, 0, np, nu) = p.alpha * Bu;
        A.block(nu + nv, nu, np, nv) = p.tau * Bv;
        A.block(nu + nv, nu + nv, np, np) = -p.c_pp * Mp;
        for (int c = 0; c < np; ++c) A(n, nu + nv + c) = A(nu + nv + c, n) = d.mesh().area(c);
    }

    /// Returns the next (u_full, p) and the pressure load vector.
    std::pair<TimeStepState, Eigen::VectorXd> step(const TimeStepState& s, std::span<const double> g) const {
        const Eigen::VectorXd u_prev = Eigen::Map<const Eigen::VectorXd>(s.u_prev.data(), s.u_prev.size());
        const Eigen::VectorXd p_prev = Eigen::Map<const Eigen::VectorXd>(s.p_prev.data(), s.p_prev.size());
        const Eigen::VectorXd gv = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
        const Eigen::VectorXd rhs_p = Mp * (-p.tau * gv) + p.alpha * Bu_full * u_prev - p.c_pp * Mp * p_prev;
        Eigen::VectorXd b = Eigen::VectorXd::Zero(A.rows());
        b.segment(nu + nv, np) = rhs_p;
        const Eigen::VectorXd x = A.fullPivLu().solve(b);
        TimeStepState next;
        next.u_prev = d.U().expand(std::span<const double>(x.data(), nu));
        next.p_prev.assign(x.data() + nu + nv, x.data() + nu + nv + np);
        next.step = s.step + 1;
        next.tau = p.tau;
        return {next, rhs_p};
    }
};

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double max_diff(std::span<const double> a, std::span<const double> b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("zero data stays at rest") {
    const Discretization d = Discretization::structured(3);
    const std::vector<double> g(d.mesh().num_cells(), 0.0);
    TimestepOptions opt;
    opt.n_steps = 3;
    const TimestepResult r =
        timestep_drive(d, phys(1, 2, 1, 1, 0.5, 0.1), DGConfig{}, opt, nullptr, g, TimeStepState::zero(d, 0.5));
    REQUIRE(r.steps.size() == 3);
    for (const StepRecord& s : r.steps) {
        CHECK(s.conservation_max == 0.0);
        CHECK(max_abs(s.source_physical) == 0.0);
    }
    CHECK(max_abs(r.final_state.u_prev) == 0.0);
    CHECK(max_abs(r.final_state.p_prev) == 0.0);
    CHECK(max_abs(r.v_final) == 0.0);
    CHECK(r.final_state.step == 3);
}

TEST_CASE("march agrees with a dense physical oracle") {
    const Discretization d = Discretization::structured(3);
    const std::vector<double> g = project_Qh([](const Vec2& x) { return 1.0 + std::sin(2 * x.x()) * x.y(); }, d.mesh());
    for (const PhysicalParams& p : {phys(1, 2, 1, 1, 2, 0), phys(0.7, 3.5, 0.8, 0.05, 0.3, 0.2)}) {
        CAPTURE(p.mu);
        const DenseMarch oracle_march(d, p);
        TimestepOptions opt;
        opt.n_steps = 3;
        const TimestepResult r = timestep_drive(d, p, DGConfig{}, opt, nullptr, g, TimeStepState::zero(d, p.tau));
        REQUIRE(r.steps.size() == 3);

        TimeStepState s = TimeStepState::zero(d, p.tau);
        const double g_scale = reduce(p).scaling.g_scale;
        for (int k = 0; k < 3; ++k) {
            CAPTURE(k);
            const auto [next, rhs_p] = oracle_march.step(s, g);
            // The driver assembles the reduced pressure load, the oracle the physical one.
            for (int c = 0; c < d.mesh().num_cells(); ++c)
                CHECK(r.steps[k].rhs_p[c] == doctest::Approx(g_scale * rhs_p[c]).epsilon(1e-12).scale(1e-3));
            s = next;
        }
        const double su = max_abs(s.u_prev), sp = max_abs(s.p_prev);
        CHECK(su > 1e-4);
        CHECK(sp > 1e-4);
        CHECK(max_diff(r.final_state.u_prev, s.u_prev) <= 1e-10 * su);
        CHECK(max_diff(r.final_state.p_prev, s.p_prev) <= 1e-10 * sp);
    }
}

TEST_CASE("single step equals one static solve") {
    const Discretization d = Discretization::structured(4);
    const PhysicalParams p = phys(0.5, 1, 1, 1, 1, 0);
    const VectorField f = [](const Vec2& x) { return Vec2(x.y(), -x.x()); };
    std::vector<double> g = oracle::random_vector(d.mesh().num_cells(), 5);
    remove_mean(g, d.mesh());
    const TimestepResult r =
        timestep_drive(d, p, DGConfig{}, TimestepOptions{}, &f, g, TimeStepState::zero(d, p.tau));

    // mu = 1/2 and unit coefficients make the reduction the identity, so the
    // static problem has source -tau g.
    const ReducedParams rp = ReducedParams::make(1, 1, 0);
    BlockSystem sys = assemble_block_system(d, rp, DGConfig{});
    std::vector<double> src(g.size());
    for (std::size_t c = 0; c < g.size(); ++c) src[c] = -g[c];
    const LoadVectors load = assemble_rhs(d, &f, src);
    sys.rhs_u = load.u;
    sys.rhs_v = load.v;
    sys.rhs_p = load.p;
    const FieldTriple ref = split_solution(d, direct_solve(sys).x);
    CHECK(max_diff(r.final_state.u_prev, ref.u) <= 1e-12 * max_abs(ref.u));
    CHECK(max_diff(r.final_state.p_prev, ref.p) <= 1e-12 * max_abs(ref.p));
    CHECK(max_diff(r.v_final, ref.v) <= 1e-12 * max_abs(ref.v));
}

TEST_CASE("second step source carries the previous state") {
    const Discretization d = Discretization::structured(3);
    const PhysicalParams p = phys(1.5, 4, 0.9, 0.4, 0.25, 0.6);
    const std::vector<double> g = project_Qh([](const Vec2& x) { return x.x() * x.x() - 0.5 * x.y(); }, d.mesh());
    TimestepOptions opt;
    opt.n_steps = 2;
    const TimestepResult r = timestep_drive(d, p, DGConfig{}, opt, nullptr, g, TimeStepState::zero(d, p.tau));
    REQUIRE(r.steps.size() == 2);

    TimestepOptions one;
    const TimestepResult first = timestep_drive(d, p, DGConfig{}, one, nullptr, g, TimeStepState::zero(d, p.tau));
    const std::vector<double> div_u = d.U().cell_divergence(first.final_state.u_prev);
    for (int c = 0; c < d.mesh().num_cells(); ++c) {
        CHECK(r.steps[0].source_physical[c] == doctest::Approx(-p.tau * g[c]));
        const double expect = -p.tau * g[c] - p.alpha * div_u[c] - p.c_pp * first.final_state.p_prev[c];
        CHECK(r.steps[1].source_physical[c] == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(r.steps[1].step == 2);
}

TEST_CASE("every step conserves mass") {
    const Discretization d = Discretization::structured(4);
    const PhysicalParams p = phys(2, 1e3, 1, 1e-3, 0.1, 0.01);
    const std::vector<double> g = project_Qh([](const Vec2& x) { return std::cos(3 * x.x()) * x.y(); }, d.mesh());
    TimestepOptions opt;
    opt.n_steps = 4;
    const TimestepResult r = timestep_drive(d, p, DGConfig{}, opt, nullptr, g, TimeStepState::zero(d, p.tau));
    for (const StepRecord& s : r.steps) {
        std::vector<double> red(s.source_physical.size());
        for (std::size_t c = 0; c < red.size(); ++c) red[c] = s.source_physical[c] * reduce(p).scaling.g_scale;
        CHECK(s.conservation_max <= 1e-10 * (max_abs(red) + 1.0));
        CHECK(s.report.conservation_max.has_value());
    }
}

TEST_CASE("MINRES steps agree with direct steps") {
    const Discretization d = Discretization::structured(3);
    const PhysicalParams p = phys(1, 2, 1, 1, 1, 0.5);
    const std::vector<double> g = project_Qh([](const Vec2& x) { return x.x() - x.y(); }, d.mesh());
    TimestepOptions opt;
    opt.n_steps = 2;
    const TimestepResult direct = timestep_drive(d, p, DGConfig{}, opt, nullptr, g, TimeStepState::zero(d, p.tau));
    opt.use_minres = true;
    opt.minres.tol = 1e-12;
    const TimestepResult iter = timestep_drive(d, p, DGConfig{}, opt, nullptr, g, TimeStepState::zero(d, p.tau));
    for (const StepRecord& s : iter.steps) CHECK(s.report.converged);
    CHECK(max_diff(iter.final_state.u_prev, direct.final_state.u_prev) <= 1e-8 * max_abs(direct.final_state.u_prev));
    CHECK(max_diff(iter.final_state.p_prev, direct.final_state.p_prev) <= 1e-8 * max_abs(direct.final_state.p_prev));
}

TEST_CASE("invalid inputs") {
    const Discretization d = Discretization::structured(2);
    const std::vector<double> g(d.mesh().num_cells(), 0.0);
    const PhysicalParams p = phys(0.5, 1, 1, 1, 1, 0);
    TimeStepState bad = TimeStepState::zero(d, 1.0);
    bad.p_prev.pop_back();
    CHECK_THROWS_AS(timestep_drive(d, p, DGConfig{}, TimestepOptions{}, nullptr, g, bad), DimensionMismatch);
    const std::vector<double> short_g(3, 0.0);
    CHECK_THROWS_AS(timestep_drive(d, p, DGConfig{}, TimestepOptions{}, nullptr, short_g, TimeStepState::zero(d, 1.0)),
                    DimensionMismatch);
    TimestepOptions neg;
    neg.n_steps = -1;
    CHECK_THROWS_AS(timestep_drive(d, p, DGConfig{}, neg, nullptr, g, TimeStepState::zero(d, 1.0)), RangeViolation);
    PhysicalParams zero_mu = p;
    zero_mu.mu = 0.0;
    CHECK_THROWS_AS(timestep_drive(d, zero_mu, DGConfig{}, TimestepOptions{}, nullptr, g, TimeStepState::zero(d, 1.0)),
                    RangeViolation);
}
