#pragma once

#include "biot/analysis.hpp"
#include "biot/params.hpp"

#include <vector>

namespace biot {

/// Physical-scale state carried between backward-Euler steps.
struct TimeStepState {
    std::vector<double> u_prev;  ///< full displacement coefficients
    std::vector<double> p_prev;  ///< P0 pressure
    int step = 0;
    double tau = 1.0;

    /// Zero fields sized for `d`.
    static TimeStepState zero(const Discretization& d, double tau);
};

struct TimestepOptions {
    int n_steps = 1;
    bool use_minres = false;
    MinresOptions minres;
};

struct StepRecord {
    int step = 0;
    SolveReport report;
    std::vector<double> source_physical;  ///< -tau g - alpha div u_prev - c_pp p_prev
    std::vector<double> rhs_p;            ///< assembled reduced pressure load
    double conservation_max = 0.0;
};

struct TimestepResult {
    std::vector<StepRecord> steps;
    TimeStepState final_state;
    std::vector<double> v_final;  ///< full flux coefficients, physical scale
};

/// Runs `n_steps` static solves. Each step composes the pressure source from
/// the previous state, reduces the parameters, solves the reduced system and
/// maps the result back to physical scale. `f` is the physical body force
/// (may be null), `g_cells` the physical source as P0 values. Only the
/// mean-zero part of the pressure is determined.
TimestepResult timestep_drive(const Discretization& d, const PhysicalParams& phys, const DGConfig& cfg,
                              const TimestepOptions& opt, const VectorField* f, std::span<const double> g_cells,
                              TimeStepState initial);

} // namespace biot
