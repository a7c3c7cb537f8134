#include "biot/timestep.hpp"

#include "biot/errors.hpp"

namespace biot {

TimeStepState TimeStepState::zero(const Discretization& d, double tau) {
    TimeStepState s;
    s.u_prev.assign(d.U().num_dofs(), 0.0);
    s.p_prev.assign(d.mesh().num_cells(), 0.0);
    s.tau = tau;
    return s;
}

TimestepResult timestep_drive(const Discretization& d, const PhysicalParams& phys, const DGConfig& cfg,
                              const TimestepOptions& opt, const VectorField* f, std::span<const double> g_cells,
                              TimeStepState state) {
    if (opt.n_steps < 0) throw RangeViolation("n_steps must be >= 0");
    if (static_cast<int>(state.u_prev.size()) != d.U().num_dofs() ||
        static_cast<int>(state.p_prev.size()) != d.mesh().num_cells())
        throw DimensionMismatch("timestep_drive: initial state does not match the spaces");
    const Reduction red = reduce(phys);
    const FieldScaling& sc = red.scaling;
    state.tau = phys.tau;

    VectorField f_red;
    if (f != nullptr) f_red = [f, s = sc.f_scale](const Vec2& x) { return Vec2(s * (*f)(x)); };

    TimestepResult out;
    for (int k = 0; k < opt.n_steps; ++k) {
        const TimestepSource src = compose_timestep_rhs(g_cells, d.U(), state.u_prev, state.p_prev, phys);
        BlockSystem sys = assemble_block_system(d, red.params, cfg);
        LoadVectors load = assemble_rhs(d, f ? &f_red : nullptr, src.reduced);
        sys.rhs_u = std::move(load.u);
        sys.rhs_v = std::move(load.v);
        sys.rhs_p = std::move(load.p);

        SolveResult sol;
        if (opt.use_minres) {
            const BlockPreconditioner B = BlockPreconditioner::build(assemble_norms(d, red.params, cfg), sys);
            sol = minres_solve(sys, B, opt.minres);
        } else {
            sol = direct_solve(sys);
        }
        StepRecord rec;
        rec.step = state.step + 1;
        rec.conservation_max = conservation_audit(d, sol.x, src.reduced, red.params).max_abs;
        rec.report = sol.report;
        rec.report.conservation_max = rec.conservation_max;
        rec.source_physical = src.physical;
        rec.rhs_p = sys.rhs_p;

        const FieldTriple t = split_solution(d, sol.x);
        state.u_prev = sc.u_to_physical(t.u);
        state.p_prev = sc.p_to_physical(t.p);
        out.v_final = sc.v_to_physical(t.v);
        ++state.step;
        out.steps.push_back(std::move(rec));
    }
    out.final_state = std::move(state);
    return out;
}

} // namespace biot
